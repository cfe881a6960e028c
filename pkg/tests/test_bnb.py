import logging
import math
import re

import numpy as np
import pytest
from scipy.optimize import linprog

import oracles
from helpers import node_violations, random_corpus
from hopsolve import bnb, instances, lp
from hopsolve.scheme import NodeBounds, SolutionVector, check_feasibility, propagate


def vec(x, y):
    k = len(x)
    return SolutionVector(x, y, np.zeros(k), np.zeros(k), np.zeros(k))


class TestQueue:
    def test_best_first_with_fifo_ties(self):
        q = bnb.NodeQueue()
        box = NodeBounds([0], [1], [0], [1])
        q.push(box, 5.0)
        first = q.push(box, 3.0)
        second = q.push(box, 3.0)
        assert q.min_lb == 3.0 and len(q) == 3
        assert q.pop() is first and q.pop() is second and q.pop().lb == 5.0
        assert q.min_lb == math.inf


class TestBranching:
    def test_most_fractional(self):
        assert bnb.select_branch_variable(vec([0.1, 1.45], [0.3, 0.0])) == ("x", 1)
        assert bnb.select_branch_variable(vec([1.0, 2.0], [0.0, 0.7])) == ("y", 1)

    def test_ties_go_to_first(self):
        assert bnb.select_branch_variable(vec([0.5, 1.5], [0.5, 0.0])) == ("x", 0)

    def test_integral_returns_none(self):
        assert bnb.select_branch_variable(vec([1.0, 2.0 + 1e-9], [0.0, 1.0])) is None

    def test_split_box(self):
        box = NodeBounds([0, 0], [3, 2], [0, 0], [1, 1])
        down, up = bnb.split_box(box, "x", 0, 1.4)
        assert down.x_ub[0] == 1 and up.x_lb[0] == 2
        assert down.x_lb[0] == 0 and up.x_ub[0] == 3
        assert np.array_equal(down.y_ub, box.y_ub)


def test_impossible_demand_is_infeasible():
    scen = instances.cutting_stock_scenario(100.0, [3.0, 4.0], [2, 2], [1.0, 1.0])
    rep = bnb.solve(scen)
    assert rep.status == bnb.INFEASIBLE and rep.incumbent is None
    assert rep.gub == math.inf


@pytest.mark.parametrize("demand,heads,counts,costs", [
    (10.0, [3.0, 4.0, 5.0], [3, 3, 3], [4.0, 5.0, 6.0]),
    (17.0, [2.0, 7.0], [5, 2], [1.0, 3.0]),
    (23.0, [3.0, 5.0, 9.0, 11.0], [4, 2, 1, 1], [2.0, 3.0, 5.5, 6.0]),
])
def test_cutting_stock_matches_dp(demand, heads, counts, costs):
    scen = instances.cutting_stock_scenario(demand, heads, counts, costs)
    rep = bnb.solve(scen)
    dp = oracles.min_cost_cover(demand, heads, counts, costs)
    assert rep.status == bnb.OPTIMAL
    assert rep.gub == pytest.approx(dp, rel=1e-9)
    assert check_feasibility(propagate(rep.incumbent, scen), scen, integral=True).feasible


def test_constant_speed_only_instances_match_grid():
    for scen in random_corpus(61, 4, max_ssp=0, n_stations=3):
        rep = bnb.solve(scen)
        grid = oracles.grid_optimum(scen)
        if not math.isfinite(grid):
            assert rep.status == bnb.INFEASIBLE
            continue
        assert rep.status == bnb.OPTIMAL
        assert rep.gub <= grid * (1 + 1e-4)
        assert grid - rep.gub <= oracles.grid_resolution(scen) + 1e-4 * grid


def log_lines(caplog):
    pat = re.compile(r"node=(\d+) box=(.+) lb=(\S+) gub=(\S+) glb=(\S+) pool=(\d+) oa=(\d+)$")
    rows = []
    for r in caplog.records:
        if r.name == "hopsolve.bnb":
            m = pat.match(r.getMessage())
            assert m, r.getMessage()
            rows.append(m.groups())
    return rows


def test_search_trace(caplog):
    scen = random_corpus(62, 1, n_stations=4)[0]
    with caplog.at_level(logging.INFO, logger="hopsolve.bnb"):
        rep = bnb.solve(scen)
    rows = log_lines(caplog)
    assert len(rows) == rep.nodes == len(rep.records)
    assert [int(r[0]) for r in rows] == list(range(1, rep.nodes + 1))
    glb = [float(r[4]) for r in rows]
    gub = [float(r[3]) for r in rows]
    assert all(b >= a - 1e-9 * abs(a) for a, b in zip(glb, glb[1:]))
    assert all(b <= a for a, b in zip(gub, gub[1:]))
    assert all(lo <= up * (1 + 1e-12) for lo, up in zip(glb, gub) if math.isfinite(up))
    boxes = [r.box for r in rep.records]
    assert len(set(boxes)) == len(boxes)
    xs, ys = scen.max_counts
    points = int(np.prod(xs + 1) * np.prod(ys + 1))
    assert rep.nodes <= 2 * points - 1


def test_node_invariants():
    for scen in random_corpus(63, 4, n_stations=3):
        rep = bnb.solve(scen)
        bad = node_violations(rep)
        assert bad == {"sandwich": [], "repair": [], "oa": []}
        if rep.status == bnb.OPTIMAL:
            assert rep.root_lb <= rep.gub * (1 + 1e-9)
            assert rep.glb <= rep.gub


def test_warm_and_cold_agree():
    scen = random_corpus(64, 1, n_stations=3)[0]
    warm = bnb.solve(scen)
    cold = bnb.solve(scen, bnb.SolveOptions(warm_start=False))
    assert warm.gub == pytest.approx(cold.gub, rel=1e-6)
    assert warm.lp_solves <= cold.lp_solves
    assert cold.pool_size == 0


def test_node_limit():
    scen = random_corpus(65, 1, n_stations=4)[0]
    rep = bnb.solve(scen, bnb.SolveOptions(max_nodes=0))
    assert rep.nodes == 1 and math.isfinite(rep.root_lb)
    full = bnb.solve(scen)
    if full.nodes > 1:
        assert rep.status == bnb.GAP_LIMIT
        assert rep.glb <= full.gub * (1 + 1e-9)


def test_deterministic():
    scen = random_corpus(66, 1, n_stations=3)[0]
    a, b = bnb.solve(scen), bnb.solve(scen)
    assert a.gub == b.gub and a.nodes == b.nodes and a.lp_solves == b.lp_solves
    assert np.array_equal(a.incumbent.h_out, b.incumbent.h_out)


def test_dumped_node_lps_reproduce_bounds(tmp_path):
    # the dumped files, re-read and solved by a different LP code, give each node's bound
    scen = random_corpus(67, 1, n_stations=3)[0]
    rep = bnb.solve(scen, bnb.SolveOptions(lp_dump_dir=str(tmp_path)))
    solved = [r for r in rep.records if math.isfinite(r.relaxed_cost)]
    assert sorted(p.name for p in tmp_path.iterdir()) == sorted(
        f"node_{r.node}.mps" for r in solved)
    for r in solved:
        p = lp.read_mps((tmp_path / f"node_{r.node}.mps").read_text())
        bnds = [(None if np.isinf(a) else a, None if np.isinf(b) else b)
                for a, b in zip(p.lb, p.ub)]
        A_ub = [row if s_ == lp.LE else -row for row, s_ in zip(p.A, p.sense) if s_ != lp.EQ]
        b_ub = [v if s_ == lp.LE else -v for v, s_ in zip(p.b, p.sense) if s_ != lp.EQ]
        A_eq = [row for row, s_ in zip(p.A, p.sense) if s_ == lp.EQ]
        b_eq = [v for v, s_ in zip(p.b, p.sense) if s_ == lp.EQ]
        res = linprog(p.c, A_ub=np.array(A_ub), b_ub=b_ub, A_eq=np.array(A_eq), b_eq=b_eq,
                      bounds=bnds, method="highs")
        assert res.status == 0
        assert res.fun == pytest.approx(r.relaxed_cost, rel=1e-7)
        assert res.fun <= r.lb * (1 + 1e-7)
