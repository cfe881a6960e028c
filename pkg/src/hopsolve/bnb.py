"""Best-first branch-and-bound over pump counts."""
from __future__ import annotations

import heapq
import itertools
import logging
import math
import os
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import lp
from .model import Scenario
from .preprocess import preprocess
from .relax import CutPool, OA_EPS, OA_MAX_ITERS, build_relaxation_lp, outer_approximate
from .scheme import (FEAS_TOL, INT_TOL, NodeBounds, Scheme, SolutionVector, check_feasibility,
                     lift_integer, propagate, repair_exact_friction, shift_heads_into_bounds)

log = logging.getLogger("hopsolve.bnb")

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
GAP_LIMIT = "gap_limit"

POLISH_FACTOR = 1e-3

LOG_FORMAT = "node=%d box=%s lb=%.10g gub=%.10g glb=%.10g pool=%d oa=%d"


@dataclass
class SolveOptions:
    eps: float = OA_EPS
    gap_tol: float = 1e-6
    int_tol: float = INT_TOL
    feas_tol: float = FEAS_TOL
    warm_start: bool = True
    max_nodes: Optional[int] = None
    oa_max_iters: int = OA_MAX_ITERS
    per_gap_cuts: bool = False
    lp_dump_dir: Optional[str] = None  # final relaxation LP of every node as node_<id>.mps


@dataclass(order=True)
class BnbNode:
    lb: float
    seq: int
    bounds: NodeBounds = field(compare=False)
    depth: int = field(default=0, compare=False)


class NodeQueue:
    """Smallest lower bound first; equal bounds leave in insertion order."""

    def __init__(self):
        self._heap: list[BnbNode] = []
        self._seq = itertools.count()

    def push(self, bounds: NodeBounds, lb: float, depth: int = 0) -> BnbNode:
        node = BnbNode(lb, next(self._seq), bounds, depth)
        heapq.heappush(self._heap, node)
        return node

    def pop(self) -> BnbNode:
        return heapq.heappop(self._heap)

    @property
    def min_lb(self) -> float:
        return self._heap[0].lb if self._heap else math.inf

    def __len__(self) -> int:
        return len(self._heap)


@dataclass
class NodeRecord:
    node: int
    box: str
    parent_lb: float
    outcome: str
    lb: float = math.nan
    cause: Optional[str] = None
    oa_status: Optional[str] = None
    oa_iterations: int = 0
    lp_solves: int = 0
    oa_max_violation: float = math.nan
    oa_monotone: bool = True
    relaxed_cost: float = math.nan
    repaired_feasible: Optional[bool] = None
    repaired_max_violation: float = math.nan
    repaired_cost: float = math.nan
    repair_fallback: bool = False
    lifted_feasible: Optional[bool] = None
    lifted_cost: float = math.nan
    reference_feasible: Optional[bool] = None
    reference_temperature_tight: Optional[bool] = None
    polished: bool = False
    branched: Optional[tuple] = None


@dataclass
class SolveReport:
    status: str
    incumbent: Optional[SolutionVector]
    scheme: Optional[Scheme]
    gub: float
    glb: float
    root_lb: float
    nodes: int
    oa_iterations: int
    lp_solves: int
    lp_iterations: int
    wall_time: float
    pool_size: int
    records: list = field(default_factory=list)

    @property
    def gap(self) -> float:
        if not math.isfinite(self.gub):
            return math.inf
        return (self.gub - self.glb) / max(1.0, abs(self.gub))


def select_branch_variable(s: SolutionVector, int_tol: float = INT_TOL) -> Optional[tuple]:
    """Most fractional pump count as ("x" | "y", station), or None if all integral."""
    best, pick = int_tol, None
    for kind, values in (("x", s.x), ("y", s.y)):
        for j, v in enumerate(values):
            frac = abs(v - round(v))
            if frac > best + 1e-12:
                best, pick = frac, (kind, j)
    return pick


def split_box(bounds: NodeBounds, kind: str, j: int, value: float) -> tuple[NodeBounds, NodeBounds]:
    down = bounds.with_bound(kind, j, upper=math.floor(value))
    up = bounds.with_bound(kind, j, lower=math.ceil(value))
    return down, up


def _verified(s: SolutionVector, scen: Scenario, bounds: NodeBounds, feas_tol: float,
              integral: bool):
    scheme = propagate(s, scen)
    return scheme, check_feasibility(scheme, scen, bounds, feas_tol, integral)


@dataclass
class _Candidates:
    repaired: SolutionVector
    repaired_ok: bool
    repaired_violation: float
    repair_fallback: bool
    lifted: SolutionVector
    lifted_ok: bool
    scheme: Scheme


def _candidates(relaxed: SolutionVector, pre, scen: Scenario, bounds: NodeBounds,
                opt: SolveOptions) -> _Candidates:
    """Repair a relaxation point to exact friction, then round its pump counts up."""
    repaired = repair_exact_friction(relaxed, pre.reference, pre.scenario, bounds, opt.feas_tol)
    _, rep = _verified(repaired, scen, bounds, opt.feas_tol, False)
    fallback = False
    if not rep.feasible:
        fallback = True
        repaired = shift_heads_into_bounds(repaired, scen, bounds, fractional=True)
        _, rep = _verified(repaired, scen, bounds, opt.feas_tol, False)
    lifted = lift_integer(repaired, scen, opt.int_tol)
    scheme, lifted_rep = _verified(lifted, scen, bounds, opt.feas_tol, True)
    if not lifted_rep.feasible:
        lifted = shift_heads_into_bounds(lifted, scen, bounds)
        scheme, lifted_rep = _verified(lifted, scen, bounds, opt.feas_tol, True)
    return _Candidates(repaired, rep.feasible, rep.max_violation, fallback, lifted,
                       lifted_rep.feasible, scheme)


def solve(scen: Scenario, options: Optional[SolveOptions] = None) -> SolveReport:
    """Globally minimize daily operating cost over pump counts and continuous settings."""
    opt = options or SolveOptions()
    start = time.perf_counter()
    queue = NodeQueue()
    queue.push(NodeBounds.root(scen), -math.inf)
    shared = CutPool()
    pool = shared
    gub, incumbent, best_scheme = math.inf, None, None
    root_lb = -math.inf
    nodes = oa_iters = lp_solves = lp_iters = 0
    records: list[NodeRecord] = []
    limited = False

    def closed(bound: float) -> bool:
        return bound >= gub - opt.gap_tol * max(1.0, abs(gub))

    def emit(node: BnbNode, lb: float, oa_count: int) -> None:
        log.info(LOG_FORMAT, nodes, node.bounds, lb, gub, min(queue.min_lb, gub), len(pool),
                 oa_count)

    while queue:
        if gub < math.inf and closed(queue.min_lb):
            break
        if opt.max_nodes is not None and nodes >= max(opt.max_nodes, 1):
            limited = True
            break
        node = queue.pop()
        nodes += 1
        rec = NodeRecord(nodes, str(node.bounds), node.lb, "open")
        records.append(rec)
        if node.lb >= gub:
            rec.outcome = "pruned_bound"
            emit(node, node.lb, 0)
            continue
        pre = preprocess(scen, node.bounds)
        if not pre.feasible:
            rec.outcome, rec.cause = "infeasible", pre.cause
            emit(node, math.inf, 0)
            continue
        tight = pre.scenario
        ref_scheme, ref_report = _verified(pre.reference, tight, node.bounds, opt.feas_tol, False)
        rec.reference_feasible = ref_report.feasible
        rec.reference_temperature_tight = bool(np.allclose(
            ref_scheme.t_out, [st.t_out_ub for st in tight.stations[:-1]], rtol=0, atol=1e-9))

        pool = shared if opt.warm_start else CutPool()
        oa = outer_approximate(tight, node.bounds, pool, opt.eps, opt.oa_max_iters,
                               opt.per_gap_cuts)
        oa_iters += oa.iterations
        lp_solves += oa.lp_solves
        lp_iters += oa.lp_iterations
        rec.oa_status, rec.oa_iterations, rec.lp_solves = oa.status, oa.iterations, oa.lp_solves
        rec.oa_max_violation, rec.oa_monotone = oa.max_violation, oa.monotone
        if oa.solution is None:
            rec.outcome, rec.cause = "infeasible", "relaxation"
            emit(node, math.inf, oa.iterations)
            continue
        lb = max(node.lb, oa.lower_bound)
        rec.lb = lb
        if nodes == 1:
            root_lb = lb

        cand = _candidates(oa.solution, pre, scen, node.bounds, opt)
        relaxed = oa.solution
        if not (cand.repaired_ok and cand.lifted_ok):
            # ε-slack can add up along a gap; re-solve with a much finer tolerance
            polish = outer_approximate(tight, node.bounds, pool, opt.eps * POLISH_FACTOR,
                                       opt.oa_max_iters, opt.per_gap_cuts)
            oa_iters += polish.iterations
            lp_solves += polish.lp_solves
            lp_iters += polish.lp_iterations
            rec.polished = True
            rec.oa_monotone = rec.oa_monotone and polish.monotone
            if polish.solution is not None:
                lb = max(lb, polish.lower_bound)
                rec.lb = lb
                relaxed = polish.solution
                cand = _candidates(relaxed, pre, scen, node.bounds, opt)
        if opt.lp_dump_dir:
            final, _ = build_relaxation_lp(tight, node.bounds, pool)
            lp.write_mps(final, os.path.join(opt.lp_dump_dir, f"node_{nodes}.mps"),
                         name=f"NODE{nodes}")
        rec.relaxed_cost = relaxed.cost(scen)
        rec.repaired_feasible = cand.repaired_ok
        rec.repaired_max_violation = cand.repaired_violation
        rec.repaired_cost = cand.repaired.cost(scen)
        rec.repair_fallback = cand.repair_fallback
        rec.lifted_feasible = cand.lifted_ok
        rec.lifted_cost = cand.lifted.cost(scen)
        if cand.lifted_ok and rec.lifted_cost < gub:
            gub, incumbent, best_scheme = rec.lifted_cost, cand.lifted, cand.scheme

        pick = select_branch_variable(relaxed, opt.int_tol)
        if closed(lb) or pick is None:
            rec.outcome = "fathomed" if pick is None else "pruned_bound"
        else:
            kind, j = pick
            value = getattr(relaxed, kind)[j]
            for child in split_box(node.bounds, kind, j, value):
                queue.push(child, lb, node.depth + 1)
            rec.outcome, rec.branched = "branched", pick
        emit(node, lb, oa.iterations)

    if limited and len(queue) and not (gub < math.inf and closed(queue.min_lb)):
        status = GAP_LIMIT
    elif incumbent is None:
        status = INFEASIBLE
    else:
        status = OPTIMAL
    glb = min(queue.min_lb, gub) if status != INFEASIBLE else math.inf
    if status == GAP_LIMIT and not len(queue):
        glb = gub
    return SolveReport(status, incumbent, best_scheme, gub, glb, root_lb, nodes, oa_iters,
                       lp_solves, lp_iters, time.perf_counter() - start, len(shared)
                       if opt.warm_start else 0, records)
