"""Solution vectors, their propagation to full schemes, and feasibility."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .model import (Scenario, average_temperature, cost_breakdown, friction_head_loss,
                    segment_affine_maps)

FEAS_TOL = 1e-6
INT_TOL = 1e-6


@dataclass(frozen=True)
class NodeBounds:
    """Integer box on the running pump counts, one entry per pumping station."""

    x_lb: np.ndarray
    x_ub: np.ndarray
    y_lb: np.ndarray
    y_ub: np.ndarray

    def __post_init__(self):
        for name in ("x_lb", "x_ub", "y_lb", "y_ub"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=int))
        if np.any(self.x_lb > self.x_ub) or np.any(self.y_lb > self.y_ub):
            raise ValueError("node bounds must satisfy lower <= upper")
        if np.any(self.x_lb < 0) or np.any(self.y_lb < 0):
            raise ValueError("pump counts cannot be negative")

    @classmethod
    def root(cls, scen: Scenario) -> "NodeBounds":
        ncp, nsp = scen.max_counts
        return cls(np.zeros_like(ncp), ncp, np.zeros_like(nsp), nsp)

    def key(self) -> tuple:
        return (tuple(self.x_lb), tuple(self.x_ub), tuple(self.y_lb), tuple(self.y_ub))

    def with_bound(self, kind: str, j: int, lower: Optional[int] = None,
                   upper: Optional[int] = None) -> "NodeBounds":
        lb = getattr(self, f"{kind}_lb").copy()
        ub = getattr(self, f"{kind}_ub").copy()
        if lower is not None:
            lb[j] = lower
        if upper is not None:
            ub[j] = upper
        return replace(self, **{f"{kind}_lb": lb, f"{kind}_ub": ub})

    def __str__(self) -> str:
        def fmt(lo, hi):
            return ",".join(f"{a}-{b}" for a, b in zip(lo, hi))
        return f"x[{fmt(self.x_lb, self.x_ub)}] y[{fmt(self.y_lb, self.y_ub)}]"


@dataclass(frozen=True)
class SolutionVector:
    """Minimal decision tuple; ``friction`` is only set for relaxation points."""

    x: np.ndarray
    y: np.ndarray
    dh_sp: np.ndarray
    dt: np.ndarray
    h_out: np.ndarray
    friction: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("x", "y", "dh_sp", "dt", "h_out"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.friction is not None:
            object.__setattr__(self, "friction", np.asarray(self.friction, dtype=float))
        n = self.x.shape
        if not (self.y.shape == self.dh_sp.shape == self.dt.shape == self.h_out.shape == n):
            raise ValueError("decision vectors must share one length")

    def cost(self, scen: Scenario) -> float:
        power, fuel = cost_breakdown(self.x, self.dh_sp, self.dt, scen)
        return float(power.sum() + fuel.sum())

    def is_integral(self, tol: float = INT_TOL) -> bool:
        z = np.concatenate([self.x, self.y])
        return bool(np.all(np.abs(z - np.round(z)) <= tol))


@dataclass
class Scheme:
    """Every state quantity of an operating point.

    Per-gap arrays are indexed by segment end ``r = 0..N`` (``r = 0`` is the
    upstream station outlet) for heads and temperatures, and by segment
    ``r = 1..N`` (stored at 0..N-1) for averages and frictions.
    """

    x: np.ndarray
    y: np.ndarray
    dh_sp: np.ndarray
    dt: np.ndarray
    h_in: np.ndarray
    h_out: np.ndarray
    t_in: np.ndarray
    t_out: np.ndarray
    seg_head: list
    seg_temp: list
    seg_tave: list
    seg_friction: list

    @property
    def solution(self) -> SolutionVector:
        return SolutionVector(self.x, self.y, self.dh_sp, self.dt, self.h_out,
                              np.concatenate(self.seg_friction))

    def cost(self, scen: Scenario) -> float:
        return self.solution.cost(scen)


@dataclass
class Violation:
    constraint: str
    index: tuple
    magnitude: float


@dataclass
class FeasibilityReport:
    feasible: bool
    violations: list = field(default_factory=list)
    max_violation: float = 0.0

    def constraints(self) -> set:
        return {v.constraint for v in self.violations}


def _check_lengths(s: SolutionVector, scen: Scenario) -> None:
    k = scen.n_pumping
    if s.x.shape != (k,):
        raise ValueError(f"solution has {s.x.shape[0]} stations, scenario expects {k}")
    if s.friction is not None and s.friction.shape != (scen.n_segments,):
        raise ValueError(f"friction vector must have {scen.n_segments} entries")


def gap_temperatures(scen: Scenario, j: int, t_out: float):
    """Segment-end temperatures (N+1) and segment averages (N) of gap j."""
    maps = segment_affine_maps(scen.gaps[j], scen.fluid)
    temps = np.empty(len(maps) + 1)
    temps[0] = t_out
    for r, (a, b) in enumerate(maps):
        temps[r + 1] = a * temps[r] + b
    return temps, average_temperature(temps[:-1], temps[1:])


def gap_frictions(scen: Scenario, j: int, tave: np.ndarray) -> np.ndarray:
    return np.array([friction_head_loss(t, seg, scen.fluid, scen.friction)
                     for t, seg in zip(tave, scen.gaps[j])])


def gap_head_profile(scen: Scenario, j: int, h_out: float, friction: np.ndarray) -> np.ndarray:
    dz = np.array([seg.elevation_change for seg in scen.gaps[j]])
    return h_out - np.concatenate([[0.0], np.cumsum(friction + dz)])


def segment_head_bounds(scen: Scenario, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Head bounds at the N+1 segment ends of gap j (ends coincide with stations)."""
    up, down = scen.stations[j], scen.stations[j + 1]
    gap = scen.gaps[j]
    lb = np.array([up.h_out_lb] + [s.head_lb for s in gap])
    ub = np.array([up.h_out_ub] + [s.head_ub for s in gap])
    lb[-1] = max(lb[-1], down.h_in_lb)
    ub[-1] = min(ub[-1], down.h_in_ub)
    return lb, ub


def propagate(s: SolutionVector, scen: Scenario) -> Scheme:
    """Forward-simulate a solution vector; any friction carried by s is ignored."""
    _check_lengths(s, scen)
    ns = scen.n_stations
    h_in = np.empty(ns)
    t_in = np.empty(ns)
    h_in[0], t_in[0] = scen.inlet_head, scen.inlet_temp
    t_out = np.empty(ns - 1)
    seg_head, seg_temp, seg_tave, seg_fric = [], [], [], []
    for j in range(ns - 1):
        t_out[j] = t_in[j] + s.dt[j]
        temps, tave = gap_temperatures(scen, j, t_out[j])
        fric = gap_frictions(scen, j, tave)
        heads = gap_head_profile(scen, j, s.h_out[j], fric)
        seg_head.append(heads)
        seg_temp.append(temps)
        seg_tave.append(tave)
        seg_fric.append(fric)
        h_in[j + 1], t_in[j + 1] = heads[-1], temps[-1]
    return Scheme(s.x.copy(), s.y.copy(), s.dh_sp.copy(), s.dt.copy(), h_in, s.h_out.copy(),
                  t_in, t_out, seg_head, seg_temp, seg_tave, seg_fric)


def relaxed_head_profile(s: SolutionVector, scen: Scenario, j: int) -> np.ndarray:
    """Gap-j heads implied by the (possibly inflated) frictions carried in s."""
    off = sum(len(g) for g in scen.gaps[:j])
    fric = s.friction[off:off + len(scen.gaps[j])]
    return gap_head_profile(scen, j, s.h_out[j], fric)


def check_feasibility(scheme: Scheme, scen: Scenario, bounds: Optional[NodeBounds] = None,
                      feas_tol: float = FEAS_TOL, integral: bool = False) -> FeasibilityReport:
    """Check every inequality of the operating model against scen and the node box."""
    bounds = bounds or NodeBounds.root(scen)
    out: list[Violation] = []

    def flag(name, index, amount):
        if amount > feas_tol:
            out.append(Violation(name, index, float(amount)))

    for j, st in enumerate(scen.stations[:-1]):
        x, y, dh = scheme.x[j], scheme.y[j], scheme.dh_sp[j]
        flag("station_head_balance", (j,),
             scheme.h_out[j] - (scheme.h_in[j] + x * st.csp_head + dh))
        flag("ssp_head_band", (j,), y * st.ssp_head_lb - dh)
        flag("ssp_head_band", (j,), dh - y * st.ssp_head_ub)
        flag("csp_count", (j,), max(bounds.x_lb[j] - x, x - bounds.x_ub[j]))
        flag("ssp_count", (j,), max(bounds.y_lb[j] - y, y - bounds.y_ub[j]))
        if integral:
            flag("csp_count", (j,), abs(x - round(x)))
            flag("ssp_count", (j,), abs(y - round(y)))
        flag("temperature_rise", (j,), -scheme.dt[j])
        flag("outlet_head", (j,), max(st.h_out_lb - scheme.h_out[j], scheme.h_out[j] - st.h_out_ub))
        flag("outlet_temp", (j,), max(st.t_out_lb - scheme.t_out[j], scheme.t_out[j] - st.t_out_ub))
        heads = scheme.seg_head[j]
        for r, seg in enumerate(scen.gaps[j][:-1], start=1):
            flag("segment_head", (j, r), max(seg.head_lb - heads[r], heads[r] - seg.head_ub))
        last = scen.gaps[j][-1]
        # the last segment end is the next inlet; its own bounds still apply
        flag("segment_head", (j, len(heads) - 1),
             max(last.head_lb - heads[-1], heads[-1] - last.head_ub))
    for k, st in enumerate(scen.stations):
        flag("inlet_head", (k,), max(st.h_in_lb - scheme.h_in[k], scheme.h_in[k] - st.h_in_ub))
        flag("inlet_temp", (k,), max(st.t_in_lb - scheme.t_in[k], scheme.t_in[k] - st.t_in_ub))
    worst = max((v.magnitude for v in out), default=0.0)
    return FeasibilityReport(not out, out, worst)


def lift_integer(s: SolutionVector, scen: Scenario, int_tol: float = INT_TOL) -> SolutionVector:
    """Round pump counts up and move SSP head back into its band when needed."""
    x = np.ceil(s.x - int_tol)
    y = np.ceil(s.y - int_tol)
    lo = np.array([st.ssp_head_lb for st in scen.stations[:-1]]) * y
    hi = np.array([st.ssp_head_ub for st in scen.stations[:-1]]) * y
    inside = (lo <= s.dh_sp) & (s.dh_sp <= hi)
    dh = np.where(inside, s.dh_sp, lo)
    return SolutionVector(x, y, dh, s.dt.copy(), s.h_out.copy())


def reference_solution(scen: Scenario, bounds: NodeBounds,
                       feas_tol: float = FEAS_TOL) -> SolutionVector:
    """All pumps on at full head, outlets at lowest head and highest temperature.

    Only feasible once the bounds of ``scen`` have been tightened by
    preprocessing; raises ``ValueError`` otherwise.
    """
    k = scen.n_pumping
    t_in = scen.inlet_temp
    dt = np.empty(k)
    for j in range(k):
        t_top = scen.stations[j].t_out_ub
        dt[j] = max(t_top - t_in, 0.0) if t_top - t_in > -feas_tol else t_top - t_in
        temps, _ = gap_temperatures(scen, j, t_in + dt[j])
        t_in = temps[-1]
    ssp_top = np.array([st.ssp_head_ub for st in scen.stations[:-1]])
    s = SolutionVector(bounds.x_ub.astype(float), bounds.y_ub.astype(float),
                       bounds.y_ub * ssp_top, dt,
                       np.array([st.h_out_lb for st in scen.stations[:-1]]))
    report = check_feasibility(propagate(s, scen), scen, bounds, feas_tol)
    if not report.feasible:
        raise ValueError("reference point is infeasible; preprocess the scenario first "
                         f"(worst violation {report.max_violation:.3g} on "
                         f"{sorted(report.constraints())})")
    return s


def repair_exact_friction(relaxed: SolutionVector, reference: SolutionVector, scen: Scenario,
                     bounds: Optional[NodeBounds] = None,
                     feas_tol: float = FEAS_TOL) -> SolutionVector:
    """Turn a point of the convex relaxation into one with exact friction.

    Pump counts, SSP heads and heating stay untouched, so the cost is
    preserved. Per gap, the outlet head is shifted down just enough that the
    exact (smaller) friction no longer pushes any head above its upper bound.
    """
    if relaxed.friction is None:
        raise ValueError("repair needs the relaxation frictions")
    exact = propagate(relaxed, scen)
    ref = propagate(reference, scen)
    h_out = relaxed.h_out.copy()
    off = 0
    for j, gap in enumerate(scen.gaps):
        n = len(gap)
        fric = relaxed.friction[off:off + n]
        off += n
        if np.any(fric < exact.seg_friction[j] - feas_tol):
            raise ValueError(f"gap {j}: relaxation friction below the exact friction")
        _, ub = segment_head_bounds(scen, j)
        # exact heads for the relaxed outlet head, segment ends 1..N
        exact_heads = exact.seg_head[j][1:]
        excess = exact_heads - ub[1:]
        r1 = int(np.argmax(excess))
        if excess[r1] > 0:
            relaxed_heads = relaxed_head_profile(relaxed, scen, j)
            target = max(relaxed_heads[r1 + 1], ref.seg_head[j][r1 + 1])
            h_out[j] -= max(exact_heads[r1] - target, 0.0)
    return replace(relaxed, h_out=h_out, friction=None)


def shift_heads_into_bounds(s: SolutionVector, scen: Scenario,
                            bounds: Optional[NodeBounds] = None,
                            fractional: bool = False) -> SolutionVector:
    """Shift each gap's head profile by the smallest amount that fits its head box.

    Fallback for points whose exact profile misses the box by a hair (left
    over from the outer-approximation tolerance). A missing lift is taken from
    regulator slack first, then from spare SSP head, then, when ``fractional``
    allows it, from a sliver of extra CSP count.
    """
    bounds = bounds or NodeBounds.root(scen)
    x, dh, h_out = s.x.copy(), s.dh_sp.copy(), s.h_out.copy()
    for j in range(scen.n_pumping):
        cur = replace(s, x=x, dh_sp=dh, h_out=h_out, friction=None)
        scheme = propagate(cur, scen)
        lb, ub = segment_head_bounds(scen, j)
        heads = scheme.seg_head[j]
        lo, hi = np.max(lb - heads), np.min(ub - heads)
        if lo > hi:
            continue
        shift = lo if lo > 0 else min(hi, 0.0)
        st = scen.stations[j]
        slack = scheme.h_in[j] + x[j] * st.csp_head + dh[j] - h_out[j]
        extra = shift - slack
        if extra > 0:
            if s.y[j] > 0 and dh[j] + extra <= s.y[j] * st.ssp_head_ub:
                dh[j] += extra
            elif fractional and st.csp_head > 0 and x[j] + extra / st.csp_head <= bounds.x_ub[j]:
                x[j] += extra / st.csp_head
            else:
                continue
        h_out[j] += shift
    return replace(s, x=x, dh_sp=dh, h_out=h_out, friction=None)
