"""Shared test utilities: instance corpora and a sampler of feasible operating points."""
from __future__ import annotations

import math

import numpy as np

import oracles
from hopsolve import instances
from hopsolve.scheme import SolutionVector, check_feasibility, propagate


def random_corpus(seed: int, count: int, **kw):
    rng = np.random.default_rng(seed)
    return [instances.random_scenario(rng, **kw) for _ in range(count)]


def sample_feasible(scen, rng, count: int, integral: bool = False, attempts: int = 4000,
                    bounds=None):
    """Feasible solution vectors found by forward simulation.

    Outlet temperatures are drawn uniformly, outlet heads uniformly inside the
    window that keeps every end of the gap within bounds (from the independent
    oracle physics), and pumps are set just high enough to reach that head.
    """
    x_cap, y_cap = scen.max_counts
    if bounds is not None:
        x_cap, y_cap = bounds.x_ub, bounds.y_ub
    found = []
    for _ in range(attempts):
        if len(found) >= count:
            break
        k = scen.n_pumping
        x, y, dh, dt, h_out = (np.zeros(k) for _ in range(5))
        h_in, t_in = scen.inlet_head, scen.inlet_temp
        ok = True
        for j in range(k):
            st, nxt = scen.stations[j], scen.stations[j + 1]
            t_out = rng.uniform(max(st.t_out_lb, t_in), st.t_out_ub)
            if t_out < t_in:
                ok = False
                break
            dt[j] = t_out - t_in
            temps, drops = oracles.gap_profile(np.array([t_out]), scen.gaps[j], scen)
            lb = np.array([st.h_out_lb] + [s.head_lb for s in scen.gaps[j]])
            ub = np.array([st.h_out_ub] + [s.head_ub for s in scen.gaps[j]])
            lb[-1], ub[-1] = max(lb[-1], nxt.h_in_lb), min(ub[-1], nxt.h_in_ub)
            lo, hi = np.max(lb + drops[:, 0]), np.min(ub + drops[:, 0])
            cap = h_in + x_cap[j] * st.csp_head + y_cap[j] * st.ssp_head_ub
            hi = min(hi, cap)
            if lo > hi:
                ok = False
                break
            h_out[j] = rng.uniform(lo, hi)
            need = h_out[j] - h_in
            if integral:
                best = None
                for xc in range(int(x_cap[j]) + 1):
                    for yc in range(int(y_cap[j]) + 1):
                        rest = need - xc * st.csp_head
                        d = max(rest, yc * st.ssp_head_lb)
                        if yc == 0 and rest > 1e-9 or d > yc * st.ssp_head_ub + 1e-9:
                            continue
                        d = d if yc else 0.0
                        best = best or (xc, yc, d)
                        if rng.random() < 0.5:
                            best = (xc, yc, d)
                if best is None:
                    ok = False
                    break
                x[j], y[j], dh[j] = best
            else:
                y[j] = rng.uniform(0, y_cap[j])
                dh[j] = rng.uniform(y[j] * st.ssp_head_lb, y[j] * st.ssp_head_ub)
                rest = need - dh[j]
                base = max(rest, 0.0) / st.csp_head if st.csp_head else 0.0
                if rest > 1e-12 and (not st.csp_head or base > x_cap[j]):
                    ok = False
                    break
                x[j] = rng.uniform(base, x_cap[j]) if base < x_cap[j] else base
            h_in, t_in = h_out[j] - drops[-1, 0], temps[-1, 0]
        if not ok:
            continue
        s = SolutionVector(x, y, dh, dt, h_out)
        rep = check_feasibility(propagate(s, scen), scen, bounds, integral=integral)
        if rep.feasible:
            found.append(s)
    return found


def finite(v: float) -> bool:
    return v is not None and math.isfinite(v)


def node_violations(report, eps: float = 1e-6, rel: float = 1e-5) -> dict:
    """Per-invariant lists of node ids breaking the bound sandwich, repair or OA checks."""
    out = {"sandwich": [], "repair": [], "oa": []}
    for rec in report.records:
        if rec.oa_status is None:
            continue
        lb = rec.lb
        if math.isfinite(rec.lifted_cost) and rec.lifted_feasible:
            if lb > rec.lifted_cost * (1 + 1e-9) + 1e-9:
                out["sandwich"].append(rec.node)
        if math.isfinite(report.gub) and rec.node == 1 and lb > report.gub * (1 + 1e-9):
            out["sandwich"].append(rec.node)
        if not rec.repaired_feasible or abs(rec.repaired_cost - rec.relaxed_cost) > rel * max(
                1.0, abs(rec.relaxed_cost)):
            out["repair"].append(rec.node)
        if not (rec.oa_max_violation <= eps and rec.oa_iterations <= 500 and rec.oa_monotone):
            out["oa"].append(rec.node)
    return out
