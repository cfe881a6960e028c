"""Bound tightening and infeasibility detection, processed from the last station upstream."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .model import (Scenario, chain_coefficients, friction_head_loss, gap_temperature_map,
                    inverse_temperature_to_station)
from .scheme import (NodeBounds, SolutionVector, gap_frictions, gap_head_profile,
                     gap_temperatures, reference_solution)

HEAD_TOL = 1e-9
MAX_TIGHTEN_ITERS = 50
STALL_TOL = 1e-9
SANITY_TOL = 1e-12

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"

# infeasibility causes
UPSTREAM_UPPER_BOUND = "upstream_upper_bound"
NO_ROOT = "no_root"
EMPTY_BOX = "empty_box"


class NoRootError(ArithmeticError):
    """The head budget cannot be met anywhere in the admissible temperature range."""


@dataclass
class BoundBox:
    """Mutable copy of the per-station head and temperature bounds."""

    h_in_lb: np.ndarray
    h_in_ub: np.ndarray
    h_out_lb: np.ndarray
    h_out_ub: np.ndarray
    t_in_lb: np.ndarray
    t_in_ub: np.ndarray
    t_out_lb: np.ndarray
    t_out_ub: np.ndarray

    FIELDS = ("h_in", "h_out", "t_in", "t_out")

    @classmethod
    def from_scenario(cls, scen: Scenario) -> "BoundBox":
        def col(name):
            return np.array([getattr(st, name) for st in scen.stations], dtype=float)
        return cls(**{f"{f}_{s}": col(f"{f}_{s}") for f in cls.FIELDS for s in ("lb", "ub")})

    def copy(self) -> "BoundBox":
        return BoundBox(**{k: v.copy() for k, v in vars(self).items()})

    def empty(self, tol: float = SANITY_TOL) -> list[str]:
        """Names of intervals with lb > ub + tol (outlet bounds only for pumping stations)."""
        bad = []
        n = len(self.h_in_lb)
        for f in self.FIELDS:
            lb, ub = getattr(self, f"{f}_lb"), getattr(self, f"{f}_ub")
            stop = n - 1 if f.endswith("out") else n
            for k in range(stop):
                if lb[k] > ub[k] + tol:
                    bad.append(f"{f}[{k}]")
        return bad

    def apply(self, scen: Scenario) -> Scenario:
        stations = []
        for k, st in enumerate(scen.stations):
            changes = {}
            for f in self.FIELDS:
                lb = float(getattr(self, f"{f}_lb")[k])
                ub = float(getattr(self, f"{f}_ub")[k])
                changes[f"{f}_lb"] = min(lb, ub)
                changes[f"{f}_ub"] = ub
            if k == 0:
                changes.update(h_in_lb=scen.inlet_head, h_in_ub=scen.inlet_head,
                               t_in_lb=scen.inlet_temp, t_in_ub=scen.inlet_temp)
            stations.append(replace(st, **changes))
        return scen.with_stations(stations)


@dataclass
class StationTightening:
    station: int
    t_out_ub_before: float
    t_out_ub_after: float
    h_out_lb_before: float
    h_out_lb_after: float
    iterations: int
    t_out_history: list = field(default_factory=list)
    hit_cap: bool = False


@dataclass
class PreprocessResult:
    status: str
    cause: Optional[str] = None
    station: Optional[int] = None
    scenario: Optional[Scenario] = None
    reference: Optional[SolutionVector] = None
    log: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE


def gap_head_bounds(box: BoundBox, scen: Scenario, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Head bounds at the N+1 ends of gap j under the working box."""
    gap = scen.gaps[j]
    lb = np.array([box.h_out_lb[j]] + [s.head_lb for s in gap])
    ub = np.array([box.h_out_ub[j]] + [s.head_ub for s in gap])
    lb[-1] = max(lb[-1], box.h_in_lb[j + 1])
    ub[-1] = min(ub[-1], box.h_in_ub[j + 1])
    return lb, ub


def domain_propagation(box: BoundBox, scen: Scenario, j: int) -> bool:
    """Tighten gap-j end temperatures and heads in place; False if a box empties."""
    a, b = gap_temperature_map(scen, j)
    box.t_in_lb[j + 1] = max(box.t_in_lb[j + 1], a * box.t_out_lb[j] + b)
    box.t_in_ub[j + 1] = min(box.t_in_ub[j + 1], a * box.t_out_ub[j] + b)
    box.t_out_lb[j] = max(box.t_out_lb[j], (box.t_in_lb[j + 1] - b) / a)
    box.t_out_ub[j] = min(box.t_out_ub[j], (box.t_in_ub[j + 1] - b) / a)
    last = scen.gaps[j][-1]
    box.h_in_lb[j + 1] = max(box.h_in_lb[j + 1], last.head_lb)
    box.h_in_ub[j + 1] = min(box.h_in_ub[j + 1], last.head_ub)
    return (box.t_in_lb[j + 1] <= box.t_in_ub[j + 1] + SANITY_TOL
            and box.t_out_lb[j] <= box.t_out_ub[j] + SANITY_TOL
            and box.h_in_lb[j + 1] <= box.h_in_ub[j + 1] + SANITY_TOL)


def head_budget_residual(scen: Scenario, j: int, r0: int, r1: int,
                         start_head: float, end_cap: float):
    """R(u): head left above the cap at end r1 when end r0 sits at start_head with temperature u.

    R is increasing in u because warmer oil loses less head.
    """
    coef = chain_coefficients(scen, j, r0, r1 - r0)
    segs = scen.gaps[j][r0:r1]
    dz = sum(s.elevation_change for s in segs)

    def residual(u: float) -> float:
        loss = sum(friction_head_loss(gain * u + offset, seg, scen.fluid, scen.friction)
                   for (gain, offset), seg in zip(coef, segs))
        return start_head - loss - dz - end_cap

    return residual


def solve_head_temperature_equation(scen: Scenario, j: int, r0: int, r1: int,
                                    start_head: float, end_cap: float,
                                    u_floor: float, u_ceil: float,
                                    head_tol: float = HEAD_TOL,
                                    secant_below: float = 0.1) -> float:
    """Largest temperature u at segment end r0 keeping end r1 at or below end_cap.

    Bisection on [u_floor, u_ceil], then Illinois-safeguarded secant steps once
    the bracket is narrower than ``secant_below`` degC (pass 0 for pure
    bisection). The returned u always satisfies R(u) <= 0 and R(u) >= -head_tol
    unless the bracket collapsed first.
    """
    if not r0 < r1:
        raise ValueError("need r0 < r1")
    res = head_budget_residual(scen, j, r0, r1, start_head, end_cap)
    lo, hi = u_floor, u_ceil
    r_lo = res(lo)
    if r_lo > 0:
        raise NoRootError(f"gap {j}: cap at end {r1} is exceeded even at {lo:.6g} degC")
    if r_lo >= -head_tol:
        return lo
    r_hi = res(hi)
    if r_hi <= 0:
        return hi
    side = 0
    for _ in range(500):
        width = hi - lo
        if width <= 1e-13 * max(1.0, abs(hi)):
            break
        if width > secant_below:
            mid = 0.5 * (lo + hi)
        else:
            mid = lo - r_lo * width / (r_hi - r_lo)
            if not lo < mid < hi:
                mid = 0.5 * (lo + hi)
        r_mid = res(mid)
        if r_mid <= 0:
            lo, r_lo = mid, r_mid
            if side == -1:
                r_hi *= 0.5
            side = -1
            if r_mid >= -head_tol:
                break
        else:
            hi, r_hi = mid, r_mid
            if side == 1:
                r_lo *= 0.5
            side = 1
    return lo


def _tighten_station(box: BoundBox, scen: Scenario, j: int, x_top: float, y_top: float,
                     head_tol: float, max_iters: int):
    """Tighten station j against gap j; returns (log entry, infeasibility cause or None)."""
    entry = StationTightening(j, float(box.t_out_ub[j]), float(box.t_out_ub[j]),
                              float(box.h_out_lb[j]), float(box.h_out_lb[j]), 0,
                              [float(box.t_out_ub[j])])
    lb, ub = gap_head_bounds(box, scen, j)
    heads = None
    for it in range(1, max_iters + 1):
        entry.iterations = it
        t_top = box.t_out_ub[j]
        temps, tave = gap_temperatures(scen, j, t_top)
        heads = gap_head_profile(scen, j, box.h_out_lb[j], gap_frictions(scen, j, tave))
        short = lb - heads
        r0 = int(np.argmax(short))
        heads = heads + max(short[r0], 0.0)
        over = heads - ub
        r1 = int(np.argmax(over))
        if over[r1] <= head_tol:
            break
        if r1 <= r0:
            return entry, UPSTREAM_UPPER_BOUND
        floor_a, floor_b = gap_temperature_map(scen, j, r0)
        u_floor = floor_a * box.t_out_lb[j] + floor_b
        try:
            u = solve_head_temperature_equation(scen, j, r0, r1, lb[r0], ub[r1],
                                                u_floor, temps[r0], head_tol)
        except NoRootError:
            return entry, NO_ROOT
        new_top = inverse_temperature_to_station(scen, j, r0, u)
        new_top = min(new_top, t_top)
        stalled = t_top - new_top < STALL_TOL
        box.t_out_ub[j] = new_top
        entry.t_out_history.append(float(new_top))
        if stalled:
            break
    else:
        entry.hit_cap = True
    entry.t_out_ub_after = float(box.t_out_ub[j])
    box.h_out_lb[j] = max(box.h_out_lb[j], heads[0])
    entry.h_out_lb_after = float(box.h_out_lb[j])
    st = scen.stations[j]
    box.h_in_lb[j] = max(box.h_in_lb[j], box.h_out_lb[j] - x_top * st.csp_head
                         - y_top * st.ssp_head_ub)
    box.t_in_ub[j] = min(box.t_in_ub[j], box.t_out_ub[j])
    return entry, None


def preprocess(scen: Scenario, bounds: Optional[NodeBounds] = None,
               head_tol: float = HEAD_TOL,
               max_iters: int = MAX_TIGHTEN_ITERS) -> PreprocessResult:
    """Tighten outlet temperature and head bounds; detect infeasible boxes.

    Returns a result whose ``scenario`` carries the tightened bounds and whose
    ``reference`` is the witness point with every outlet at its warmest
    admissible temperature and lowest admissible head.
    """
    bounds = bounds or NodeBounds.root(scen)
    box = BoundBox.from_scenario(scen)
    log: list[StationTightening] = []
    for j in reversed(range(scen.n_pumping)):
        if not domain_propagation(box, scen, j):
            return PreprocessResult(INFEASIBLE, EMPTY_BOX, j, log=log)
        entry, cause = _tighten_station(box, scen, j, bounds.x_ub[j], bounds.y_ub[j],
                                        head_tol, max_iters)
        log.append(entry)
        if cause:
            return PreprocessResult(INFEASIBLE, cause, j, log=log)
        if not domain_propagation(box, scen, j) or box.empty():
            return PreprocessResult(INFEASIBLE, EMPTY_BOX, j, log=log)
    if box.empty():
        return PreprocessResult(INFEASIBLE, EMPTY_BOX, 0, log=log)
    tightened = box.apply(scen)
    ref = reference_solution(tightened, bounds)
    return PreprocessResult(FEASIBLE, None, None, tightened, ref, log)


def tightened_contains(scen: Scenario, s_scheme, tol: float = 1e-6) -> bool:
    """True if a scheme's station heads and temperatures lie in scen's bounds."""
    for k, st in enumerate(scen.stations):
        if not (st.h_in_lb - tol <= s_scheme.h_in[k] <= st.h_in_ub + tol):
            return False
        if not (st.t_in_lb - tol <= s_scheme.t_in[k] <= st.t_in_ub + tol):
            return False
        if k < scen.n_pumping:
            if not (st.h_out_lb - tol <= s_scheme.h_out[k] <= st.h_out_ub + tol):
                return False
            if not (st.t_out_lb - tol <= s_scheme.t_out[k] <= st.t_out_ub + tol):
                return False
    return True
