import io
import math

import numpy as np
import pytest
from scipy.optimize import linprog

import oracles
from hopsolve import lp


def random_lp(rng, n=None, m=None):
    n = n or int(rng.integers(2, 5))
    m = m or int(rng.integers(1, 5))
    A = rng.integers(-5, 6, (m, n)).astype(float)
    lb = rng.integers(-3, 1, n).astype(float)
    ub = lb + rng.integers(1, 6, n)
    x0 = rng.uniform(lb, ub)
    sense = list(rng.choice([lp.LE, lp.GE, lp.EQ], m, p=[0.45, 0.45, 0.1]))
    b = A @ x0 + np.where(np.array(sense) == lp.LE, 1.0, np.where(np.array(sense) == lp.GE,
                                                                    -1.0, 0.0))
    c = rng.integers(-6, 7, n).astype(float)
    return lp.LpProblem(c, A, sense, b, lb, ub)


def highs(p):
    ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
    for a, s, v in zip(p.A, p.sense, p.b):
        if s == lp.LE:
            ub_rows.append(a), ub_rhs.append(v)
        elif s == lp.GE:
            ub_rows.append(-a), ub_rhs.append(-v)
        else:
            eq_rows.append(a), eq_rhs.append(v)
    res = linprog(p.c, A_ub=np.array(ub_rows) if ub_rows else None, b_ub=ub_rhs or None,
                  A_eq=np.array(eq_rows) if eq_rows else None, b_eq=eq_rhs or None,
                  bounds=list(zip(p.lb, p.ub)), method="highs")
    return res.fun if res.status == 0 else math.inf


def test_bounds_only():
    p = lp.LpProblem([1.0, -2.0], np.zeros((0, 2)), [], [], [0.0, -1.0], [3.0, 4.0])
    sol = lp.solve(p)
    assert sol.status == lp.OPTIMAL and list(sol.x) == [0.0, 4.0] and sol.objective == -8.0


def test_small_example():
    # max x + y subject to x + 2y <= 4, 3x + y <= 6
    p = lp.LpProblem([-1.0, -1.0], [[1, 2], [3, 1]], [lp.LE, lp.LE], [4, 6], [0, 0],
                     [math.inf, math.inf])
    sol = lp.solve(p)
    assert sol.status == lp.OPTIMAL
    assert sol.x == pytest.approx([1.6, 1.2], abs=1e-12)
    assert sol.objective == pytest.approx(-2.8, abs=1e-12)


def test_infeasible_rows():
    p = lp.LpProblem([1.0], [[1.0], [1.0]], [lp.GE, lp.LE], [3.0, 2.0], [0.0], [10.0])
    assert lp.solve(p).status == lp.INFEASIBLE


def test_crossed_bounds():
    p = lp.LpProblem([1.0], [[1.0]], [lp.LE], [3.0], [2.0], [1.0])
    assert lp.solve(p).status == lp.INFEASIBLE


def test_unbounded():
    p = lp.LpProblem([-1.0, 0.0], [[1.0, -1.0]], [lp.LE], [1.0], [0, 0], [math.inf, math.inf])
    assert lp.solve(p).status == lp.UNBOUNDED


def test_validation():
    with pytest.raises(ValueError):
        lp.LpProblem([1.0], [[1.0]], ["<"], [1.0], [0.0], [1.0])
    with pytest.raises(ValueError):
        lp.LpProblem([1.0], [[1.0]], [lp.LE], [1.0, 2.0], [0.0], [1.0])


def test_against_vertex_enumeration_and_highs():
    rng = np.random.default_rng(31)
    for _ in range(20):
        p = random_lp(rng)
        sol = lp.solve(p)
        enum = oracles.lp_by_vertices(p.c, p.A, p.sense, p.b, p.lb, p.ub)
        ref = highs(p)
        assert ref == pytest.approx(enum, rel=1e-9, abs=1e-9)
        assert sol.status == lp.OPTIMAL
        assert sol.objective == pytest.approx(enum, rel=1e-6, abs=1e-6)
        assert p.max_infeasibility(sol.x) <= 1e-8


def test_beale_cycling_example():
    c = [-0.75, 20.0, -0.5, 6.0]
    A = [[0.25, -8.0, -1.0, 9.0], [0.5, -12.0, -0.5, 3.0], [0.0, 0.0, 1.0, 0.0]]
    p = lp.LpProblem(c, A, [lp.LE] * 3, [0.0, 0.0, 1.0], np.zeros(4), np.full(4, math.inf))
    sol = lp.solve(p)
    assert sol.status == lp.OPTIMAL
    assert sol.objective == pytest.approx(-1.25, abs=1e-12)


def test_reduced_cost_signs():
    rng = np.random.default_rng(32)
    for _ in range(30):
        p = random_lp(rng, n=5, m=3)
        sol = lp.solve(p)
        assert sol.status == lp.OPTIMAL
        d = sol.reduced_costs
        free_lo = sol.at_lower & ~sol.at_upper
        free_hi = sol.at_upper & ~sol.at_lower
        assert np.all(d[free_lo] >= -1e-7)
        assert np.all(d[free_hi] <= 1e-7)
        assert np.all(d[sol.basic] == 0.0)


def test_degenerate_many_ties():
    # every row is tight at the optimum vertex
    n = 6
    A = np.vstack([np.eye(n), np.ones((4, n))])
    p = lp.LpProblem(-np.ones(n), A, [lp.LE] * (n + 4), np.r_[np.ones(n), np.full(4, n)],
                     np.zeros(n), np.full(n, 2.0))
    sol = lp.solve(p)
    assert sol.objective == pytest.approx(-n, abs=1e-12)


def test_deterministic():
    p = random_lp(np.random.default_rng(33), n=4, m=4)
    a, b = lp.solve(p), lp.solve(p)
    assert np.array_equal(a.x, b.x) and a.iterations == b.iterations


def test_builder():
    bld = lp.LpBuilder()
    bld.add_var("u", 0, 5, cost=-1.0)
    bld.add_var("v", 0, 5, cost=-2.0)
    bld.add_row({"u": 1.0, "v": 1.0}, lp.LE, 6.0, "cap")
    p = bld.build()
    assert p.col_names == ["u", "v"] and p.row_names == ["cap"]
    assert lp.solve(p).objective == pytest.approx(-11.0)
    with pytest.raises(KeyError):
        bld.add_var("u")


def test_mps_round_trip():
    rng = np.random.default_rng(34)
    for _ in range(10):
        p = random_lp(rng)
        p.ub[0] = math.inf
        p.lb[-1] = -math.inf
        buf = io.StringIO()
        lp.write_mps(p, buf)
        q = lp.read_mps(buf.getvalue())
        assert q.col_names == p.col_names and q.row_names == p.row_names
        assert q.sense == p.sense
        for name in ("c", "A", "b", "lb", "ub"):
            assert np.array_equal(getattr(q, name), getattr(p, name))


def test_mps_column_order(tmp_path):
    p = lp.LpProblem([0.0, 1.0, 0.0], [[1.0, 0.0, 0.0]], [lp.GE], [1.0], [0, 0, 3.0],
                     [1, 1, 3.0], ["z", "a", "m"])
    path = tmp_path / "p.mps"
    lp.write_mps(p, path)
    text = path.read_text()
    cols = [ln.split()[0] for ln in text.split("COLUMNS\n")[1].split("RHS")[0].splitlines()]
    assert list(dict.fromkeys(cols)) == ["z", "a", "m"]
    assert " FX BND m 3.0" in text
