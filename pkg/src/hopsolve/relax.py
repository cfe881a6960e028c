"""LP outer approximation of the convex relaxation and its tangent-cut pool."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import lp
from .model import (DomainError, Scenario, cost_coefficients, friction_head_loss,
                    friction_slope, segment_affine_maps)
from .scheme import NodeBounds, SolutionVector

OA_EPS = 1e-6
OA_MAX_ITERS = 500
TAVE_FLOOR = 1e-3

CONVERGED = "converged"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration_limit"
STALLED = "stalled"


@dataclass(frozen=True)
class Cut:
    """Tangent of the segment head loss at average temperature ``at_temp``.

    ``slope`` is d(loss)/dT in m/degC and ``value`` the loss at at_temp in m, so
    the cut reads F >= value + slope * (T_ave - at_temp).
    """

    gap: int
    segment: int
    at_temp: float
    slope: float
    value: float

    @property
    def key(self) -> tuple:
        return self.gap, self.segment, round(self.at_temp, 6)

    def __call__(self, t_ave):
        return self.value + self.slope * (np.asarray(t_ave) - self.at_temp)


class CutPool:
    """Ordered, deduplicated set of tangent cuts shared between nodes."""

    def __init__(self, cuts=()):
        self._cuts: list[Cut] = []
        self._keys: set = set()
        for c in cuts:
            self.add(c)

    def add(self, cut: Cut) -> bool:
        if cut.key in self._keys:
            return False
        self._keys.add(cut.key)
        self._cuts.append(cut)
        return True

    def copy(self) -> "CutPool":
        return CutPool(self._cuts)

    def __len__(self) -> int:
        return len(self._cuts)

    def __iter__(self):
        return iter(self._cuts)

    def __contains__(self, cut: Cut) -> bool:
        return cut.key in self._keys


def subgradient_cut(j: int, r: int, at_temp: float, scen: Scenario) -> Cut:
    """Tangent cut on segment r (0-based) of gap j at temperature at_temp."""
    if not at_temp > 0:
        raise DomainError(f"linearization temperature must be > 0, got {at_temp}")
    seg = scen.gaps[j][r]
    return Cut(j, r, float(at_temp),
               float(friction_slope(at_temp, seg, scen.fluid, scen.friction)),
               float(friction_head_loss(at_temp, seg, scen.fluid, scen.friction)))


@dataclass
class VariableMap:
    """Column indices of the relaxation LP."""

    x: list
    y: list
    dh_sp: list
    dt: list
    h_in: list
    h_out: list
    t_in: list
    t_out: list
    seg_head: list  # per gap, N columns (segment ends 1..N)
    seg_temp: list
    seg_tave: list
    seg_friction: list

    def friction_columns(self) -> list:
        return [k for gap in self.seg_friction for k in gap]

    def tave_columns(self) -> list:
        return [k for gap in self.seg_tave for k in gap]


def average_temperature_bounds(scen: Scenario) -> list[np.ndarray]:
    """Per gap, (N, 2) interval of each segment average from the outlet temperature box."""
    out = []
    for j, gap in enumerate(scen.gaps):
        st = scen.stations[j]
        lo, hi = st.t_out_lb, st.t_out_ub
        box = np.empty((len(gap), 2))
        for r, (a, b) in enumerate(segment_affine_maps(gap, scen.fluid)):
            nlo, nhi = a * lo + b, a * hi + b
            box[r] = (lo + 2 * nlo) / 3.0, (hi + 2 * nhi) / 3.0
            lo, hi = nlo, nhi
        box[:, 0] = np.maximum(box[:, 0], TAVE_FLOOR)
        out.append(box)
    return out


def build_relaxation_lp(scen: Scenario, bounds: NodeBounds, pool: CutPool) -> tuple[lp.LpProblem, VariableMap]:
    """Assemble the LP relaxation for one node box.

    Column order: per pumping station x, y, dH, dT, Hin, Hout, Tin, Tout; then the
    last station's Hin, Tin; then per gap and segment H, T, Tave, F.
    """
    b = lp.LpBuilder()
    k = scen.n_pumping
    c_x, c_dh, c_dt = cost_coefficients(scen)
    cols = {name: [] for name in ("x", "y", "dh_sp", "dt", "h_in", "h_out", "t_in", "t_out")}
    for j, st in enumerate(scen.stations):
        if j < k:
            cols["x"].append(b.add_var(f"x_{j}", bounds.x_lb[j], bounds.x_ub[j], c_x[j]))
            cols["y"].append(b.add_var(f"y_{j}", bounds.y_lb[j], bounds.y_ub[j], 0.0))
            cols["dh_sp"].append(b.add_var(f"dh_{j}", 0.0, bounds.y_ub[j] * st.ssp_head_ub,
                                           c_dh[j]))
            cols["dt"].append(b.add_var(f"dt_{j}", 0.0, math.inf, c_dt[j]))
        cols["h_in"].append(b.add_var(f"hin_{j}", st.h_in_lb, st.h_in_ub))
        if j < k:
            cols["h_out"].append(b.add_var(f"hout_{j}", st.h_out_lb, st.h_out_ub))
        cols["t_in"].append(b.add_var(f"tin_{j}", st.t_in_lb, st.t_in_ub))
        if j < k:
            cols["t_out"].append(b.add_var(f"tout_{j}", st.t_out_lb, st.t_out_ub))

    tave_box = average_temperature_bounds(scen)
    seg_head, seg_temp, seg_tave, seg_fric = [], [], [], []
    for j, gap in enumerate(scen.gaps):
        hs, ts, avs, fs = [], [], [], []
        for r, seg in enumerate(gap):
            hs.append(b.add_var(f"h_{j}_{r}", seg.head_lb, seg.head_ub))
            ts.append(b.add_var(f"t_{j}_{r}", -math.inf, math.inf))
            avs.append(b.add_var(f"tave_{j}_{r}", *tave_box[j][r]))
            fs.append(b.add_var(f"f_{j}_{r}", 0.0, math.inf))
        seg_head.append(hs)
        seg_temp.append(ts)
        seg_tave.append(avs)
        seg_fric.append(fs)

    for j, gap in enumerate(scen.gaps):
        maps = segment_affine_maps(gap, scen.fluid)
        prev_h, prev_t = cols["h_out"][j], cols["t_out"][j]
        for r, seg in enumerate(gap):
            h, t, av, f = seg_head[j][r], seg_temp[j][r], seg_tave[j][r], seg_fric[j][r]
            decay, shift = maps[r]
            b.add_row({h: 1.0, prev_h: -1.0, f: 1.0}, lp.EQ, -seg.elevation_change,
                      f"head_{j}_{r}")
            b.add_row({t: 1.0, prev_t: -decay}, lp.EQ, shift, f"temp_{j}_{r}")
            b.add_row({av: 1.0, prev_t: -1.0 / 3.0, t: -2.0 / 3.0}, lp.EQ, 0.0, f"tave_{j}_{r}")
            prev_h, prev_t = h, t
        b.add_row({prev_h: 1.0, cols["h_in"][j + 1]: -1.0}, lp.EQ, 0.0, f"hlink_{j}")
        b.add_row({prev_t: 1.0, cols["t_in"][j + 1]: -1.0}, lp.EQ, 0.0, f"tlink_{j}")

    for j in range(k):
        st = scen.stations[j]
        b.add_row({cols["h_in"][j]: 1.0, cols["x"][j]: st.csp_head, cols["dh_sp"][j]: 1.0,
                   cols["h_out"][j]: -1.0}, lp.GE, 0.0, f"balance_{j}")
        b.add_row({cols["dh_sp"][j]: 1.0, cols["y"][j]: -st.ssp_head_lb}, lp.GE, 0.0,
                  f"ssplo_{j}")
        b.add_row({cols["dh_sp"][j]: 1.0, cols["y"][j]: -st.ssp_head_ub}, lp.LE, 0.0,
                  f"sspup_{j}")
        b.add_row({cols["t_in"][j]: 1.0, cols["dt"][j]: 1.0, cols["t_out"][j]: -1.0}, lp.EQ,
                  0.0, f"heat_{j}")

    for n, cut in enumerate(pool):
        f, av = seg_fric[cut.gap][cut.segment], seg_tave[cut.gap][cut.segment]
        b.add_row({f: 1.0, av: -cut.slope}, lp.GE, cut.value - cut.slope * cut.at_temp,
                  f"cut_{n}")
    vmap = VariableMap(cols["x"], cols["y"], cols["dh_sp"], cols["dt"], cols["h_in"],
                       cols["h_out"], cols["t_in"], cols["t_out"], seg_head, seg_temp,
                       seg_tave, seg_fric)
    return b.build(), vmap


def row_census(scen: Scenario, n_cuts: int = 0) -> int:
    """Number of LP rows: three per segment, two links per gap, four per pumping station."""
    return sum(3 * len(g) + 2 for g in scen.gaps) + 4 * scen.n_pumping + n_cuts


def extract_solution(values: np.ndarray, vmap: VariableMap) -> SolutionVector:
    return SolutionVector(values[vmap.x], values[vmap.y], values[vmap.dh_sp], values[vmap.dt],
                          values[vmap.h_out], values[vmap.friction_columns()])


def exact_frictions(scen: Scenario, tave: np.ndarray) -> np.ndarray:
    segs = [seg for gap in scen.gaps for seg in gap]
    return np.array([friction_head_loss(t, seg, scen.fluid, scen.friction)
                     for t, seg in zip(tave, segs)])


@dataclass
class OaResult:
    status: str
    lower_bound: float
    solution: Optional[SolutionVector]
    tave: Optional[np.ndarray]
    iterations: int
    lp_solves: int
    lp_iterations: int
    max_violation: float
    objective_history: list = field(default_factory=list)
    cuts_added: int = 0

    @property
    def monotone(self) -> bool:
        h = self.objective_history
        return all(b >= a - 1e-9 * max(1.0, abs(a)) for a, b in zip(h, h[1:]))


def outer_approximate(scen: Scenario, bounds: NodeBounds, pool: Optional[CutPool] = None,
                      eps: float = OA_EPS, max_iters: int = OA_MAX_ITERS,
                      per_gap: bool = False) -> OaResult:
    """Cutting-plane loop on the convex relaxation; ``pool`` is extended in place.

    ``per_gap`` adds the most violated cut of every gap per round instead of
    only the overall most violated one.
    """
    pool = CutPool() if pool is None else pool
    seg_gap = np.array([j for j, g in enumerate(scen.gaps) for _ in g])
    seg_idx = np.array([r for g in scen.gaps for r in range(len(g))])
    history: list[float] = []
    lp_iters = 0
    added = 0
    worst = math.inf
    for it in range(1, max_iters + 1):
        problem, vmap = build_relaxation_lp(scen, bounds, pool)
        sol = lp.solve(problem)
        lp_iters += sol.iterations
        if sol.status == lp.INFEASIBLE:
            return OaResult(INFEASIBLE, math.inf, None, None, it, it, lp_iters, math.nan,
                            history, added)
        if sol.status != lp.OPTIMAL:
            raise lp.SimplexError(f"relaxation LP is {sol.status}")
        history.append(sol.objective)
        s = extract_solution(sol.x, vmap)
        tave = sol.x[vmap.tave_columns()]
        viol = exact_frictions(scen, tave) - s.friction
        worst = float(viol.max())
        if worst <= eps:
            return OaResult(CONVERGED, sol.objective, s, tave, it, it, lp_iters, worst,
                            history, added)
        if per_gap:
            picks = [int(np.flatnonzero(seg_gap == j)[np.argmax(viol[seg_gap == j])])
                     for j in range(len(scen.gaps))]
            picks = [p for p in picks if viol[p] > eps]
        else:
            picks = [int(np.argmax(viol))]
        fresh = 0
        for p in picks:
            fresh += pool.add(subgradient_cut(int(seg_gap[p]), int(seg_idx[p]), tave[p], scen))
        added += fresh
        if not fresh:
            return OaResult(STALLED, sol.objective, s, tave, it, it, lp_iters, worst,
                            history, added)
    return OaResult(ITERATION_LIMIT, history[-1], s, tave, max_iters, max_iters, lp_iters,
                    worst, history, added)
