"""JSON scenario and scheme documents, CSV profiles and scheme comparison.

Infinite bounds are written as ``null``; on load, ``null`` means -inf for a
lower bound and +inf for an upper bound. Floats are serialized with Python's
shortest round-trip representation, so ``load(dump(x)) == x`` bit for bit.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import fields
from typing import Any, Optional

from .model import (EconomicParams, FluidProps, FrictionModel, PipeSegment, Scenario,
                    ScenarioError, Station, ViscosityModel, cost_breakdown)
from .scheme import FeasibilityReport, Scheme, SolutionVector

PROFILE_HEADER = ("cumulative_length_m", "elevation_m", "head_m", "temperature_C")

_LOWER_FIELDS = {"head_lb", "h_in_lb", "h_out_lb", "t_in_lb", "t_out_lb"}
_UPPER_FIELDS = {"head_ub", "h_in_ub", "h_out_ub", "t_in_ub", "t_out_ub"}
_INT_FIELDS = {"n_csp", "n_ssp"}


class DocumentError(ValueError):
    """Malformed document; ``path`` is the offending key path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# ---------------------------------------------------------------------------
# scenario documents

def _number(value: Any, path: str, name: str) -> float:
    if value is None:
        if name in _LOWER_FIELDS:
            return -math.inf
        if name in _UPPER_FIELDS:
            return math.inf
        raise DocumentError(path, "null is only allowed for bounds")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DocumentError(path, f"expected a number, got {type(value).__name__}")
    if name in _INT_FIELDS:
        if int(value) != value:
            raise DocumentError(path, "expected an integer")
        return int(value)
    if not math.isfinite(value):
        raise DocumentError(path, "write unbounded values as null")
    return float(value)


def _record(cls, data: Any, path: str, required: tuple = (), defaults: Optional[dict] = None):
    if not isinstance(data, dict):
        raise DocumentError(path, "expected an object")
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise DocumentError(f"{path}.{key}", "unknown key")
    for key in required:
        if key not in data:
            raise DocumentError(f"{path}.{key}", "missing required key")
    values = dict(defaults or {})
    values.update({k: _number(v, f"{path}.{k}", k) for k, v in data.items()})
    return values


def _section(doc: dict, key: str) -> Any:
    if key not in doc:
        raise DocumentError(key, "missing required key")
    return doc[key]


def scenario_from_dict(doc: Any) -> Scenario:
    """Build and validate a Scenario; errors carry the key path of the bad entry."""
    if not isinstance(doc, dict):
        raise DocumentError("$", "expected an object")
    for key in doc:
        if key not in ("fluid", "friction", "economics", "inlet", "stations", "gaps"):
            raise DocumentError(key, "unknown key")
    try:
        fl = _section(doc, "fluid")
        if not isinstance(fl, dict):
            raise DocumentError("fluid", "expected an object")
        visc = _record(ViscosityModel, _section_at(fl, "viscosity", "fluid"), "fluid.viscosity",
                       ("a1", "b1"))
        rest = {k: v for k, v in fl.items() if k != "viscosity"}
        fluid_vals = _record(FluidProps, rest, "fluid", ("density", "specific_heat"))
        fluid = FluidProps(viscosity=ViscosityModel(**visc), **fluid_vals)
        friction = FrictionModel(**_record(FrictionModel, doc.get("friction", {}), "friction"))
        economics = EconomicParams(**_record(
            EconomicParams, _section(doc, "economics"), "economics",
            ("electricity_price", "fuel_price", "heat_value")))
        inlet = _section(doc, "inlet")
        if not isinstance(inlet, dict):
            raise DocumentError("inlet", "expected an object")
        for key in inlet:
            if key not in ("head", "temperature"):
                raise DocumentError(f"inlet.{key}", "unknown key")
        head = _number(_section_at(inlet, "head", "inlet"), "inlet.head", "head")
        temp = _number(_section_at(inlet, "temperature", "inlet"), "inlet.temperature",
                       "temperature")

        raw_stations = _section(doc, "stations")
        if not isinstance(raw_stations, list):
            raise DocumentError("stations", "expected a list")
        stations = []
        for j, st in enumerate(raw_stations):
            defaults = {}
            if j == 0:
                # the first station's inlet is pinned to the pipeline inlet
                defaults = dict(h_in_lb=head, h_in_ub=head, t_in_lb=temp, t_in_ub=temp)
            stations.append(Station(**_record(Station, st, f"stations[{j}]", ("flow",),
                                              defaults)))
        raw_gaps = _section(doc, "gaps")
        if not isinstance(raw_gaps, list):
            raise DocumentError("gaps", "expected a list")
        gaps = []
        for j, gap in enumerate(raw_gaps):
            path = f"gaps[{j}]"
            if not isinstance(gap, dict) or set(gap) != {"segments"}:
                raise DocumentError(path, "expected an object with a single 'segments' key")
            if not isinstance(gap["segments"], list):
                raise DocumentError(f"{path}.segments", "expected a list")
            gaps.append(tuple(PipeSegment(**_record(
                PipeSegment, seg, f"{path}.segments[{r}]",
                ("length", "inner_diameter", "outer_diameter")))
                for r, seg in enumerate(gap["segments"])))
        return Scenario(fluid, economics, stations, gaps, head, temp, friction)
    except ScenarioError as exc:
        raise DocumentError(exc.path, str(exc).split(": ", 1)[-1]) from exc


def _section_at(obj: dict, key: str, path: str) -> Any:
    if key not in obj:
        raise DocumentError(f"{path}.{key}", "missing required key")
    return obj[key]


def _finite_or_null(v: float) -> Optional[float]:
    return float(v) if math.isfinite(v) else None


def _fields_dict(obj) -> dict:
    out = {}
    for f in fields(obj):
        v = getattr(obj, f.name)
        out[f.name] = int(v) if f.name in _INT_FIELDS else _finite_or_null(float(v))
    return out


def scenario_to_dict(scen: Scenario) -> dict:
    fl = scen.fluid
    return {
        "fluid": {"density": fl.density, "specific_heat": fl.specific_heat,
                  "viscosity": _fields_dict(fl.viscosity)},
        "friction": _fields_dict(scen.friction),
        "economics": _fields_dict(scen.economics),
        "inlet": {"head": float(scen.inlet_head), "temperature": float(scen.inlet_temp)},
        "stations": [_fields_dict(st) for st in scen.stations],
        "gaps": [{"segments": [_fields_dict(seg) for seg in gap]} for gap in scen.gaps],
    }


def scenario_hash(scen: Scenario) -> str:
    """SHA-256 of the canonical JSON form (sorted keys, no whitespace)."""
    text = json.dumps(scenario_to_dict(scen), sort_keys=True, separators=(",", ":"),
                      allow_nan=False)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def parse_json(text: str, what: str = "document") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"$ (line {exc.lineno}, column {exc.colno})",
                            f"invalid JSON in {what}: {exc.msg}") from exc


def load_scenario(path: str) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return scenario_from_dict(parse_json(fh.read(), "scenario"))


def dump_json(doc: Any) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# scheme documents

def scheme_to_dict(scheme: Scheme, scen: Scenario,
                   feasibility: Optional[FeasibilityReport] = None) -> dict:
    power, fuel = cost_breakdown(scheme.x, scheme.dh_sp, scheme.dt, scen)
    stations = []
    for j in range(scen.n_pumping):
        stations.append({
            "x": float(scheme.x[j]), "y": float(scheme.y[j]),
            "dH_sp": float(scheme.dh_sp[j]), "dT": float(scheme.dt[j]),
            "H_in": float(scheme.h_in[j]), "H_out": float(scheme.h_out[j]),
            "T_in": float(scheme.t_in[j]), "T_out": float(scheme.t_out[j]),
            "cost_power": float(power[j]), "cost_fuel": float(fuel[j]),
        })
    gaps = []
    for j, gap in enumerate(scen.gaps):
        ends = [{"length_m": float(seg.length), "elevation_change_m": float(seg.elevation_change),
                 "H": float(scheme.seg_head[j][r + 1]), "T": float(scheme.seg_temp[j][r + 1])}
                for r, seg in enumerate(gap)]
        gaps.append({"segment_ends": ends})
    doc = {
        "scenario_hash": scenario_hash(scen),
        "stations": stations,
        "terminal": {"H_in": float(scheme.h_in[-1]), "T_in": float(scheme.t_in[-1])},
        "gaps": gaps,
        "totals": {"cost_power": float(power.sum()), "cost_fuel": float(fuel.sum()),
                   "cost_per_day": float(power.sum() + fuel.sum())},
    }
    if feasibility is not None:
        doc["feasibility"] = feasibility_to_dict(feasibility)
    return doc


def feasibility_to_dict(rep: FeasibilityReport) -> dict:
    return {"feasible": rep.feasible, "max_violation": float(rep.max_violation),
            "violations": [{"constraint": v.constraint, "index": list(v.index),
                            "magnitude": float(v.magnitude)} for v in rep.violations]}


def _list_field(doc: Any, key: str, path: str) -> list:
    if not isinstance(doc, dict) or key not in doc:
        raise DocumentError(f"{path}.{key}" if path else key, "missing required key")
    value = doc[key]
    if not isinstance(value, list):
        raise DocumentError(f"{path}.{key}" if path else key, "expected a list")
    return value


def solution_from_scheme_dict(doc: Any, scen: Scenario) -> SolutionVector:
    """Decision vector (x, y, dH_sp, dT, H_out) read back from a scheme document."""
    rows = _list_field(doc, "stations", "")
    if len(rows) != scen.n_pumping:
        raise DocumentError("stations", f"expected {scen.n_pumping} pumping stations, "
                                        f"got {len(rows)}")
    cols = {k: [] for k in ("x", "y", "dH_sp", "dT", "H_out")}
    for j, row in enumerate(rows):
        for key in cols:
            path = f"stations[{j}].{key}"
            if not isinstance(row, dict) or key not in row:
                raise DocumentError(path, "missing required key")
            cols[key].append(_number(row[key], path, key))
    return SolutionVector(cols["x"], cols["y"], cols["dH_sp"], cols["dT"], cols["H_out"])


def profile_rows(doc: Any) -> list[tuple[float, float, float, float]]:
    """Rows (cumulative length, relative elevation, head, temperature) of a scheme document.

    The first row is the first station's outlet; each further row is a
    segment end. Elevation is relative to the first station.
    """
    stations = _list_field(doc, "stations", "")
    gaps = _list_field(doc, "gaps", "")
    if not stations or len(gaps) != len(stations):
        raise DocumentError("gaps", "need one gap per pumping station")
    try:
        first = stations[0]
        rows = [(0.0, 0.0, float(first["H_out"]), float(first["T_out"]))]
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError("stations[0]", "needs numeric H_out and T_out") from exc
    length = elevation = 0.0
    for j, gap in enumerate(gaps):
        for r, end in enumerate(_list_field(gap, "segment_ends", f"gaps[{j}]")):
            path = f"gaps[{j}].segment_ends[{r}]"
            try:
                length += float(end["length_m"])
                elevation += float(end["elevation_change_m"])
                rows.append((length, elevation, float(end["H"]), float(end["T"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise DocumentError(path, "needs numeric length_m, elevation_change_m, H, T") \
                    from exc
    return rows


def profile_csv(doc: Any) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PROFILE_HEADER)
    for row in profile_rows(doc):
        writer.writerow([repr(v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# comparison

def percent_saving(cost_a: float, cost_b: float) -> float:
    """Relative saving of B over A in percent."""
    return 100.0 * (cost_a - cost_b) / cost_a


def _total(doc: Any, name: str) -> float:
    try:
        return float(doc["totals"]["cost_per_day"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentError(f"{name}.totals.cost_per_day", "missing or not a number") from exc


def compare_documents(doc_a: Any, doc_b: Any) -> dict:
    """Per-station cost deltas (B minus A) and the percent saving of B over A."""
    hashes = [d.get("scenario_hash") if isinstance(d, dict) else None for d in (doc_a, doc_b)]
    if hashes[0] != hashes[1]:
        raise DocumentError("scenario_hash", "schemes belong to different scenarios")
    total_a, total_b = _total(doc_a, "A"), _total(doc_b, "B")
    rows_a, rows_b = doc_a.get("stations", []), doc_b.get("stations", [])
    if len(rows_a) != len(rows_b):
        raise DocumentError("stations", "schemes have different station counts")
    stations = []
    for j, (a, b) in enumerate(zip(rows_a, rows_b)):
        entry = {"station": j}
        for key in ("cost_power", "cost_fuel"):
            try:
                entry[f"delta_{key}"] = float(b[key]) - float(a[key])
            except (KeyError, TypeError, ValueError) as exc:
                raise DocumentError(f"stations[{j}].{key}", "missing or not a number") from exc
        stations.append(entry)
    return {"cost_a": total_a, "cost_b": total_b, "delta": total_b - total_a,
            "saving_percent": percent_saving(total_a, total_b), "stations": stations}


def format_comparison(result: dict) -> str:
    lines = [f"{'station':>7} {'d_power':>14} {'d_fuel':>14}"]
    for row in result["stations"]:
        lines.append(f"{row['station']:>7d} {row['delta_cost_power']:>14.2f} "
                     f"{row['delta_cost_fuel']:>14.2f}")
    lines.append(f"total A {result['cost_a']:.2f}  total B {result['cost_b']:.2f}  "
                 f"delta {result['delta']:.2f}")
    lines.append(f"saving {result['saving_percent']:.2f}%")
    return "\n".join(lines)

