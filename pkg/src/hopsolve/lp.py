"""Dense bounded-variable two-phase primal simplex.

Small and self-contained: the relaxations it serves have a few hundred
columns at most. Rows are scaled to unit max-norm and the objective to unit
max-coefficient before solving; results are reported unscaled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

LP_TOL = 1e-8
PIVOT_TOL = 1e-9
HARRIS_TOL = 1e-9
REINVERT_EVERY = 100
DEGENERATE_STREAK = 50
MAX_ITERS = 50_000

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

LE, EQ, GE = "<=", "==", ">="


class SimplexError(RuntimeError):
    """The basis became numerically singular and could not be recovered."""


@dataclass
class LpProblem:
    """minimize c.x  s.t.  A x (sense) b,  lb <= x <= ub."""

    c: np.ndarray
    A: np.ndarray
    sense: Sequence[str]
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    col_names: Optional[list] = None
    row_names: Optional[list] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.shape[0]
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        self.sense = list(self.sense)
        m = self.A.shape[0]
        if self.b.shape != (m,) or len(self.sense) != m:
            raise ValueError("row data sizes disagree")
        if self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("bound vectors must match the number of columns")
        if any(s not in (LE, EQ, GE) for s in self.sense):
            raise ValueError(f"row relations must be one of {LE!r}, {EQ!r}, {GE!r}")
        self.col_names = self.col_names or [f"C{k}" for k in range(n)]
        self.row_names = self.row_names or [f"R{i}" for i in range(m)]

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def row_activity(self, x) -> np.ndarray:
        return self.A @ np.asarray(x, dtype=float)

    def max_infeasibility(self, x) -> float:
        x = np.asarray(x, dtype=float)
        act = self.row_activity(x)
        viol = [0.0]
        for a, s, rhs in zip(act, self.sense, self.b):
            if s == LE:
                viol.append(a - rhs)
            elif s == GE:
                viol.append(rhs - a)
            else:
                viol.append(abs(a - rhs))
        viol.extend(self.lb - x)
        viol.extend(x - self.ub)
        return float(max(viol))


@dataclass
class LpSolution:
    status: str
    x: Optional[np.ndarray]
    objective: float
    iterations: int
    reduced_costs: Optional[np.ndarray] = None
    at_lower: Optional[np.ndarray] = None
    at_upper: Optional[np.ndarray] = None
    basic: Optional[np.ndarray] = None


class LpBuilder:
    """Incremental construction of an LpProblem by named columns and sparse rows."""

    def __init__(self):
        self._cols: list[str] = []
        self._index: dict[str, int] = {}
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._cost: list[float] = []
        self._rows: list[dict] = []
        self._sense: list[str] = []
        self._rhs: list[float] = []
        self._row_names: list[str] = []

    def add_var(self, name: str, lb: float = 0.0, ub: float = math.inf, cost: float = 0.0) -> int:
        if name in self._index:
            raise KeyError(f"duplicate column {name}")
        self._index[name] = len(self._cols)
        self._cols.append(name)
        self._lb.append(lb)
        self._ub.append(ub)
        self._cost.append(cost)
        return self._index[name]

    def index(self, name: str) -> int:
        return self._index[name]

    def add_row(self, coefs: dict, sense: str, rhs: float, name: Optional[str] = None) -> int:
        row = {}
        for key, v in coefs.items():
            k = self._index[key] if isinstance(key, str) else key
            row[k] = row.get(k, 0.0) + v
        self._rows.append(row)
        self._sense.append(sense)
        self._rhs.append(rhs)
        self._row_names.append(name or f"R{len(self._rows) - 1}")
        return len(self._rows) - 1

    @property
    def n_rows(self) -> int:
        return len(self._rows)

    def build(self) -> LpProblem:
        A = np.zeros((len(self._rows), len(self._cols)))
        for i, row in enumerate(self._rows):
            for k, v in row.items():
                A[i, k] = v
        return LpProblem(np.array(self._cost), A, list(self._sense), np.array(self._rhs),
                         np.array(self._lb), np.array(self._ub), list(self._cols),
                         list(self._row_names))


@dataclass
class _Tableau:
    T: np.ndarray  # B^-1 [A | I_slack | I_art]
    A: np.ndarray  # the unreduced constraint matrix, kept for reinversion
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    x: np.ndarray
    basis: np.ndarray
    is_basic: np.ndarray
    iterations: int = 0
    since_reinvert: int = 0
    history: list = field(default_factory=list)

    def reinvert(self) -> None:
        B = self.A[:, self.basis]
        try:
            self.T = np.linalg.solve(B, self.A)
        except np.linalg.LinAlgError as exc:
            raise SimplexError("singular basis") from exc
        nb = ~self.is_basic
        rhs = self.b - self.A[:, nb] @ self.x[nb]
        self.x[self.basis] = np.linalg.solve(B, rhs)
        self.since_reinvert = 0


def _standard_form(p: LpProblem):
    """Scale rows, add slack and artificial columns and pick a starting basis."""
    m, n = p.A.shape
    A = p.A.copy()
    b = p.b.copy()
    scale = np.abs(A).max(axis=1) if n else np.zeros(m)
    scale[scale == 0] = 1.0
    A /= scale[:, None]
    b /= scale
    slack_sign = np.array([1.0 if s == LE else -1.0 if s == GE else 0.0 for s in p.sense])
    slack_rows = np.flatnonzero(slack_sign)
    ns = len(slack_rows)
    S = np.zeros((m, ns))
    S[slack_rows, np.arange(ns)] = slack_sign[slack_rows]

    x0 = np.where(np.isfinite(p.lb), p.lb, np.where(np.isfinite(p.ub), p.ub, 0.0))
    resid = b - A @ x0
    slack_of_row = -np.ones(m, dtype=int)
    slack_of_row[slack_rows] = np.arange(ns)
    art_rows, basis = [], np.empty(m, dtype=int)
    xs = np.zeros(ns)
    for i in range(m):
        k = slack_of_row[i]
        if k >= 0 and slack_sign[i] * resid[i] >= 0:
            basis[i] = n + k
            xs[k] = slack_sign[i] * resid[i]
        else:
            art_rows.append(i)
    na = len(art_rows)
    R = np.zeros((m, na))
    xa = np.zeros(na)
    for k, i in enumerate(art_rows):
        sign = 1.0 if resid[i] >= 0 else -1.0
        R[i, k] = sign
        xa[k] = abs(resid[i])
        basis[i] = n + ns + k
    full = np.hstack([A, S, R])
    lb = np.concatenate([p.lb, np.zeros(ns + na)])
    ub = np.concatenate([p.ub, np.full(ns + na, math.inf)])
    x = np.concatenate([x0, xs, xa])
    is_basic = np.zeros(n + ns + na, dtype=bool)
    is_basic[basis] = True
    # the starting basis is a signed identity, so B^-1 A is a row-sign flip
    signs = np.array([full[i, basis[i]] for i in range(m)])
    tab = _Tableau(full / signs[:, None], full, b, lb, ub, x, basis, is_basic)
    return tab, n, ns, na


def _simplex(tab: _Tableau, cost: np.ndarray, max_iters: int, tol: float) -> str:
    """Run primal simplex on tab for the given cost; returns OPTIMAL or UNBOUNDED."""
    bland = False
    streak = 0
    fixed = tab.lb == tab.ub
    while True:
        if tab.iterations >= max_iters:
            raise SimplexError(f"iteration limit {max_iters} reached")
        d = cost - cost[tab.basis] @ tab.T
        d[tab.is_basic] = 0.0
        d[fixed & ~tab.is_basic] = 0.0
        at_lb = np.isclose(tab.x, tab.lb, rtol=0, atol=1e-11)
        at_ub = np.isclose(tab.x, tab.ub, rtol=0, atol=1e-11)
        free = ~at_lb & ~at_ub
        up = (d < -tol) & ~at_ub
        down = (d > tol) & (at_ub | free)
        # a nonbasic variable sitting at its lower bound cannot decrease
        down &= ~at_lb
        eligible = (up | down) & ~tab.is_basic
        if not eligible.any():
            return OPTIMAL
        cand = np.flatnonzero(eligible)
        q = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
        direction = 1.0 if up[q] else -1.0

        alpha = direction * tab.T[:, q]
        xb = tab.x[tab.basis]
        lbb, ubb = tab.lb[tab.basis], tab.ub[tab.basis]
        dec = alpha > PIVOT_TOL
        inc = alpha < -PIVOT_TOL
        ratios = np.full(alpha.shape, math.inf)
        ratios[dec] = (xb[dec] - lbb[dec]) / alpha[dec]
        ratios[inc] = (ubb[inc] - xb[inc]) / -alpha[inc]
        ratios = np.maximum(ratios, 0.0)
        # Harris pass: widen each bound by HARRIS_TOL to find how far we may go
        relaxed = np.full(alpha.shape, math.inf)
        relaxed[dec] = (xb[dec] - lbb[dec] + HARRIS_TOL) / alpha[dec]
        relaxed[inc] = (ubb[inc] - xb[inc] + HARRIS_TOL) / -alpha[inc]
        flip = tab.ub[q] - tab.x[q] if direction > 0 else tab.x[q] - tab.lb[q]
        t_min = ratios.min() if ratios.size else math.inf
        if min(t_min, flip) == math.inf:
            return UNBOUNDED
        tab.iterations += 1
        if flip <= t_min:
            tab.x[q] = tab.ub[q] if direction > 0 else tab.lb[q]
            tab.x[tab.basis] = xb - direction * flip * tab.T[:, q]
            streak = 0
            bland = False
            continue
        if bland:
            near = np.flatnonzero(ratios <= t_min + 1e-12)
            p = int(near[np.argmin(tab.basis[near])])
        else:
            # among rows blocking within the widened step, pivot on the largest entry
            near = np.flatnonzero(ratios <= relaxed.min())
            p = int(near[np.argmax(np.abs(alpha[near]))])
        t = ratios[p]
        tab.x[q] += direction * t
        tab.x[tab.basis] = xb - direction * t * tab.T[:, q]
        leaving = tab.basis[p]
        tab.x[leaving] = tab.lb[leaving] if alpha[p] > 0 else tab.ub[leaving]
        _pivot(tab, p, q)
        if t <= tol:
            streak += 1
            if streak >= DEGENERATE_STREAK:
                bland = True
        else:
            streak = 0
            bland = False
        if tab.since_reinvert >= REINVERT_EVERY:
            tab.reinvert()


def _pivot(tab: _Tableau, p: int, q: int) -> None:
    T = tab.T
    T[p] /= T[p, q]
    col = T[:, q].copy()
    col[p] = 0.0
    T -= np.outer(col, T[p])
    tab.is_basic[tab.basis[p]] = False
    tab.is_basic[q] = True
    tab.basis[p] = q
    tab.since_reinvert += 1


def _drive_out_artificials(tab: _Tableau, first_art: int) -> None:
    for p in range(len(tab.basis)):
        if tab.basis[p] < first_art:
            continue
        row = np.abs(tab.T[p, :first_art])
        row[tab.is_basic[:first_art]] = 0.0
        q = int(np.argmax(row)) if row.size else -1
        if q >= 0 and row[q] > PIVOT_TOL:
            leaving = tab.basis[p]
            _pivot(tab, p, q)
            tab.x[leaving] = 0.0
    tab.lb[first_art:] = 0.0
    tab.ub[first_art:] = 0.0


def solve(p: LpProblem, tol: float = LP_TOL, max_iters: int = MAX_ITERS) -> LpSolution:
    """Solve an LP; statuses are OPTIMAL, INFEASIBLE or UNBOUNDED."""
    m, n = p.A.shape
    if np.any(p.lb > p.ub):
        return LpSolution(INFEASIBLE, None, math.nan, 0)
    if m == 0:
        x = np.where(p.c > 0, p.lb, np.where(p.c < 0, p.ub, np.clip(0.0, p.lb, p.ub)))
        if not np.all(np.isfinite(x)):
            return LpSolution(UNBOUNDED, None, -math.inf, 0)
        return LpSolution(OPTIMAL, x, float(p.c @ x), 0, p.c.copy(),
                          x == p.lb, x == p.ub, np.zeros(n, dtype=bool))
    tab, n, ns, na = _standard_form(p)
    first_art = n + ns
    if na:
        phase1 = np.zeros(n + ns + na)
        phase1[first_art:] = 1.0
        _simplex(tab, phase1, max_iters, tol)
        tab.reinvert()
        if tab.x[first_art:].sum() > max(tol, 1e-9) * max(1.0, na):
            return LpSolution(INFEASIBLE, None, math.nan, tab.iterations)
        _drive_out_artificials(tab, first_art)
        tab.reinvert()
    cscale = float(np.abs(p.c).max()) if n else 1.0
    cscale = cscale if cscale > 0 else 1.0
    cost = np.concatenate([p.c / cscale, np.zeros(ns + na)])
    status = _simplex(tab, cost, max_iters, tol)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, None, -math.inf, tab.iterations)
    tab.reinvert()
    x = tab.x[:n].copy()
    nonbasic = ~tab.is_basic[:n]
    # snap nonbasic columns exactly onto the bound they rest at
    lo = nonbasic & np.isclose(x, p.lb, rtol=0, atol=1e-9)
    hi = nonbasic & np.isclose(x, p.ub, rtol=0, atol=1e-9)
    x[lo], x[hi] = p.lb[lo], p.ub[hi]
    d = (cost - cost[tab.basis] @ tab.T)[:n] * cscale
    d[tab.is_basic[:n]] = 0.0
    return LpSolution(OPTIMAL, x, float(p.c @ x), tab.iterations, d, lo, hi,
                      tab.is_basic[:n].copy())


# ---------------------------------------------------------------------------
# MPS debug dumps (free-format MPS, columns in problem order)

def _fmt(v: float) -> str:
    return repr(float(v))


def write_mps(p: LpProblem, path_or_file, name: str = "RELAX") -> None:
    """Write p as free MPS; columns keep their problem order, rows theirs."""
    lines = [f"NAME {name}", "ROWS", " N OBJ"]
    tag = {LE: "L", EQ: "E", GE: "G"}
    lines += [f" {tag[s]} {r}" for s, r in zip(p.sense, p.row_names)]
    lines.append("COLUMNS")
    for k, col in enumerate(p.col_names):
        if p.c[k] != 0:
            lines.append(f" {col} OBJ {_fmt(p.c[k])}")
        for i in np.flatnonzero(p.A[:, k]):
            lines.append(f" {col} {p.row_names[i]} {_fmt(p.A[i, k])}")
        if p.c[k] == 0 and not p.A[:, k].any():
            lines.append(f" {col} OBJ 0.0")
    lines.append("RHS")
    for i in np.flatnonzero(p.b):
        lines.append(f" RHS {p.row_names[i]} {_fmt(p.b[i])}")
    lines.append("BOUNDS")
    for k, col in enumerate(p.col_names):
        lo, hi = p.lb[k], p.ub[k]
        if lo == -math.inf and hi == math.inf:
            lines.append(f" FR BND {col}")
            continue
        if lo == hi:
            lines.append(f" FX BND {col} {_fmt(lo)}")
            continue
        if lo == -math.inf:
            lines.append(f" MI BND {col}")
        elif lo != 0:
            lines.append(f" LO BND {col} {_fmt(lo)}")
        if hi != math.inf:
            lines.append(f" UP BND {col} {_fmt(hi)}")
    lines.append("ENDATA")
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def read_mps(lines: Iterable[str] | str) -> LpProblem:
    """Parse the free-MPS subset produced by write_mps."""
    if isinstance(lines, str):
        lines = lines.splitlines()
    section = None
    rows, sense, cols = [], [], []
    entries: dict[tuple[str, str], float] = {}
    rhs: dict[str, float] = {}
    bounds: dict[str, list] = {}
    back = {"L": LE, "E": EQ, "G": GE}
    for raw in lines:
        if not raw.strip():
            continue
        if not raw.startswith(" "):
            section = raw.split()[0]
            continue
        tok = raw.split()
        if section == "ROWS":
            if tok[0] != "N":
                sense.append(back[tok[0]])
                rows.append(tok[1])
        elif section == "COLUMNS":
            if not cols or cols[-1] != tok[0]:
                cols.append(tok[0])
                bounds[tok[0]] = [0.0, math.inf]
            for r, v in zip(tok[1::2], tok[2::2]):
                entries[(tok[0], r)] = float(v)
        elif section == "RHS":
            for r, v in zip(tok[1::2], tok[2::2]):
                rhs[r] = float(v)
        elif section == "BOUNDS":
            kind, col = tok[0], tok[2]
            b = bounds[col]
            if kind == "FR":
                b[:] = [-math.inf, math.inf]
            elif kind == "MI":
                b[0] = -math.inf
            elif kind == "FX":
                b[:] = [float(tok[3])] * 2
            elif kind == "LO":
                b[0] = float(tok[3])
            elif kind == "UP":
                b[1] = float(tok[3])
    ri = {r: i for i, r in enumerate(rows)}
    A = np.zeros((len(rows), len(cols)))
    c = np.zeros(len(cols))
    for k, col in enumerate(cols):
        for (cname, r), v in entries.items():
            if cname != col:
                continue
            if r == "OBJ":
                c[k] = v
            else:
                A[ri[r], k] = v
    return LpProblem(c, A, sense, np.array([rhs.get(r, 0.0) for r in rows]),
                     np.array([bounds[c_][0] for c_ in cols]),
                     np.array([bounds[c_][1] for c_ in cols]), cols, rows)
