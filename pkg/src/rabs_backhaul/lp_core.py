"""Linear programming with primal and dual solutions.

The default backend is a dense bounded-variable revised simplex. It keeps an
explicit basis inverse updated by elementary row operations and refactored
periodically. Pricing is Dantzig's largest-coefficient rule; after a run of
degenerate pivots it switches to Bland's smallest-index rule, which cannot
cycle. Ties are always broken by lowest index, so a given problem always
follows the same pivot sequence.

Dual values are reported as shadow prices in the caller's sense: the rate of
change of the objective per unit increase of a constraint's right-hand side.
For a maximisation, ``<=`` rows therefore have non-negative duals.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

TOL_FEAS = 1e-8
TOL_GAP = 1e-7
TOL_OPT = 1e-9
TOL_PIVOT = 1e-9
HARRIS_TOL = 1e-9

LE, EQ, GE = "<=", "=", ">="
_SENSES = (LE, EQ, GE)


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LpNumericalError(RuntimeError):
    """Raised when a solve cannot be completed reliably (iteration limit,
    singular basis, or a result that fails its own feasibility check)."""


class _SingularBasis(LpNumericalError):
    pass


@dataclass
class LpProblem:
    """``max`` (or ``min``) ``c @ x`` subject to ``A @ x (senses) b`` and
    ``lo <= x <= hi``. Lower bounds must be finite; upper bounds may be inf."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    senses: Sequence[str]
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None
    maximize: bool = True
    var_names: Optional[list] = None
    row_names: Optional[list] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        m = self.A.shape[0]
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.senses = list(self.senses)
        self.lo = np.zeros(n) if self.lo is None else np.asarray(self.lo, dtype=float).ravel()
        self.hi = np.full(n, np.inf) if self.hi is None else np.asarray(self.hi, dtype=float).ravel()
        if self.b.size != m or len(self.senses) != m:
            raise ValueError(f"inconsistent row dimensions: A has {m} rows, b {self.b.size}, senses {len(self.senses)}")
        if self.lo.size != n or self.hi.size != n:
            raise ValueError("bound vectors must match the number of variables")
        bad = [s for s in self.senses if s not in _SENSES]
        if bad:
            raise ValueError(f"unknown constraint sense(s) {sorted(set(bad))}")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise ValueError("objective, matrix and right-hand side must be finite")
        if not np.all(np.isfinite(self.lo)):
            raise ValueError("lower bounds must be finite")
        if np.any(self.lo > self.hi):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def shape(self):
        return self.A.shape

    def dump(self) -> str:
        """Human-readable listing of the problem, for debugging."""
        m, n = self.A.shape
        vn = self.var_names or [f"v{j}" for j in range(n)]
        rn = self.row_names or [f"r{i}" for i in range(m)]

        def linear(coefs):
            terms = [f"{coefs[j]:+.6g} {vn[j]}" for j in range(n) if coefs[j] != 0.0]
            return " ".join(terms) if terms else "0"

        lines = [("maximize" if self.maximize else "minimize") + " " + linear(self.c), "subject to"]
        for i in range(m):
            lines.append(f"  {rn[i]}: {linear(self.A[i])} {self.senses[i]} {self.b[i]:.6g}")
        lines.append("bounds")
        for j in range(n):
            lines.append(f"  {self.lo[j]:.6g} <= {vn[j]} <= {self.hi[j]:.6g}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Basis:
    """Final simplex basis, in a form that survives appending columns.

    Entries are ``("x", j)`` for structural columns and ``("s", i)`` for row
    slacks. ``at_upper`` lists nonbasic structurals resting at their upper
    bound.
    """

    basic: tuple
    at_upper: tuple = ()


@dataclass
class LpSolution:
    status: LpStatus
    x: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None
    reduced_costs: Optional[np.ndarray] = None
    objective: float = math.nan
    iterations: int = 0
    basis: Optional[Basis] = None

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    def dual_objective(self, problem: LpProblem) -> float:
        """Lagrangian dual bound built from row duals and bound multipliers."""
        d = self.reduced_costs
        scale = 1.0 + np.abs(problem.c).max(initial=0.0)
        d = np.where(np.abs(d) <= TOL_OPT * scale, 0.0, d)
        sign = 1.0 if problem.maximize else -1.0
        # bound multipliers: reduced cost pushing toward an upper (max) or lower bound
        up = np.where(sign * d > 0, d, 0.0)
        down = d - up
        with np.errstate(invalid="ignore"):
            hi_term = np.where(up != 0.0, up * problem.hi, 0.0)
        return float(self.duals @ problem.b + hi_term.sum() + (down * problem.lo).sum())


def solve_lp(
    problem: LpProblem,
    *,
    method: str = "simplex",
    warm_start: Optional[Basis] = None,
    max_iter: Optional[int] = None,
    tol_feas: float = TOL_FEAS,
) -> LpSolution:
    """Solve ``problem``; on optimality primal values, duals and reduced costs
    are all populated. ``method`` is ``"simplex"`` (built in) or ``"highs"``
    (scipy's HiGHS wrapper)."""
    if method == "simplex":
        try:
            return _RevisedSimplex(problem, max_iter=max_iter, tol_feas=tol_feas).solve(warm_start)
        except _SingularBasis:
            return _RevisedSimplex(problem, max_iter=max_iter, tol_feas=tol_feas, safe_mode=True).solve()
    if method == "highs":
        return _solve_highs(problem)
    raise ValueError(f"unknown LP method {method!r}")


class _RevisedSimplex:
    refactor_every = 64
    degenerate_switch = 20

    def __init__(self, problem: LpProblem, max_iter=None, tol_feas=TOL_FEAS, safe_mode=False):
        self.p = problem
        # safe mode: Bland's rule throughout, stricter pivots, frequent refactoring
        self.safe_mode = safe_mode
        self.pivot_tol = 1e-7 if safe_mode else TOL_PIVOT
        if safe_mode:
            self.refactor_every = 16
        m, n = problem.A.shape
        self.m, self.n = m, n
        # internal form: minimise, every row "<=" or "=", slack per row
        self.row_sign = np.array([-1.0 if s == GE else 1.0 for s in problem.senses])
        self.obj_sign = -1.0 if problem.maximize else 1.0
        A = problem.A * self.row_sign[:, None]
        self.b = problem.b * self.row_sign
        self.M = np.hstack([A, np.eye(m)])
        self.cost = np.concatenate([self.obj_sign * problem.c, np.zeros(m)])
        slack_hi = np.array([0.0 if s == EQ else np.inf for s in problem.senses])
        self.lo = np.concatenate([problem.lo, np.zeros(m)])
        self.hi = np.concatenate([problem.hi, slack_hi])
        self.max_iter = max_iter if max_iter is not None else 50 * (m + n) + 1000
        self.tol_feas = tol_feas
        self.iterations = 0

    # -- setup -------------------------------------------------------------

    def _cold_basis(self):
        m, n = self.m, self.n
        x = np.concatenate([self.lo[:n].copy(), np.zeros(m)])
        r = self.b - self.M[:, :n] @ x[:n]
        basic = np.empty(m, dtype=int)
        art_cols, art_rows = [], []
        for i in range(m):
            if r[i] >= 0 and (self.hi[n + i] > 0 or r[i] == 0):
                basic[i] = n + i
                x[n + i] = r[i]
            else:
                art_rows.append(i)
                art_cols.append(math.copysign(1.0, r[i]) if r[i] != 0 else 1.0)
        if art_rows:
            k = len(art_rows)
            art = np.zeros((m, k))
            for a, (i, s) in enumerate(zip(art_rows, art_cols)):
                art[i, a] = s
                basic[i] = n + m + a
            self.M = np.hstack([self.M, art])
            self.lo = np.concatenate([self.lo, np.zeros(k)])
            self.hi = np.concatenate([self.hi, np.full(k, np.inf)])
            self.cost = np.concatenate([self.cost, np.zeros(k)])
            x = np.concatenate([x, np.abs(r[art_rows])])
        self.n_art = len(art_rows)
        return basic, x

    def _warm_basis(self, ws: Basis):
        m, n = self.m, self.n
        if len(ws.basic) != m:
            return None
        basic = np.empty(m, dtype=int)
        for k, (kind, idx) in enumerate(ws.basic):
            if kind == "x" and idx < n:
                basic[k] = idx
            elif kind == "s" and idx < m:
                basic[k] = n + idx
            else:
                return None
        if len(set(basic.tolist())) != m:
            return None
        x = np.concatenate([self.lo[:n].copy(), np.zeros(m)])
        for j in ws.at_upper:
            if j < n and np.isfinite(self.hi[j]):
                x[j] = self.hi[j]
        try:
            Binv = np.linalg.inv(self.M[:, basic])
        except np.linalg.LinAlgError:
            return None
        mask = np.ones(n + m, bool)
        mask[basic] = False
        x[basic] = 0.0
        xb = Binv @ (self.b - self.M[:, mask] @ x[mask])
        tol = self.tol_feas * (1.0 + np.abs(xb))
        if np.any(xb < self.lo[basic] - tol) or np.any(xb > self.hi[basic] + tol):
            return None
        x[basic] = np.clip(xb, self.lo[basic], self.hi[basic])
        self.n_art = 0
        return basic, x, Binv

    # -- main loop ---------------------------------------------------------

    def solve(self, warm_start: Optional[Basis] = None) -> LpSolution:
        state = self._warm_basis(warm_start) if warm_start is not None else None
        if state is not None:
            basic, x, Binv = state
        else:
            basic, x = self._cold_basis()
            Binv = np.linalg.inv(self.M[:, basic])

        if self.n_art:
            total = self.M.shape[1]
            phase1 = np.zeros(total)
            phase1[total - self.n_art:] = 1.0
            status, basic, x, Binv = self._iterate(phase1, basic, x, Binv)
            infeas = x[total - self.n_art:].sum()
            scale = 1.0 + np.abs(self.b).max(initial=0.0)
            if infeas > self.tol_feas * scale:
                return LpSolution(LpStatus.INFEASIBLE, iterations=self.iterations)
            # artificials are pinned at zero for phase 2
            self.hi[total - self.n_art:] = 0.0
            x[total - self.n_art:] = 0.0

        status, basic, x, Binv = self._iterate(self.cost, basic, x, Binv)
        if status is LpStatus.UNBOUNDED:
            return LpSolution(LpStatus.UNBOUNDED, iterations=self.iterations)
        return self._finish(basic, x, Binv)

    def _iterate(self, cost, basic, x, Binv):
        M, lo, hi = self.M, self.lo, self.hi
        total = M.shape[1]
        nonbasic = np.ones(total, bool)
        nonbasic[basic] = False
        movable = hi > lo
        degenerate_run = 0
        since_refactor = 0
        while True:
            if self.iterations >= self.max_iter:
                raise LpNumericalError(f"simplex iteration limit ({self.max_iter}) exceeded")
            if since_refactor >= self.refactor_every:
                Binv, x = self._refactor(basic, x, nonbasic)
                since_refactor = 0
            y = cost[basic] @ Binv
            d = cost - y @ M
            at_upper = x >= hi
            improving = nonbasic & movable & (
                ((d < -TOL_OPT) & ~at_upper) | ((d > TOL_OPT) & at_upper)
            )
            cand = np.flatnonzero(improving)
            if cand.size == 0:
                return LpStatus.OPTIMAL, basic, x, Binv
            bland = self.safe_mode or degenerate_run >= self.degenerate_switch
            if bland:
                q = int(cand[0])
            else:
                q = int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if d[q] < 0 else -1.0

            alpha = Binv @ M[:, q]
            g = direction * alpha
            xb = x[basic]
            theta = hi[q] - lo[q]
            leave = -1
            leave_to_upper = False
            piv_tol = self.pivot_tol * max(1.0, float(np.abs(g).max(initial=0.0)))
            pos = g > piv_tol
            neg = g < -piv_tol
            lb, ub = lo[basic], hi[basic]
            ratios = np.full(self.m, np.inf)
            ratios[pos] = (xb[pos] - lb[pos]) / g[pos]
            ratios[neg] = (ub[neg] - xb[neg]) / -g[neg]
            ratios = np.maximum(ratios, 0.0)
            if bland:
                rmin = ratios.min()
                ties = np.flatnonzero(ratios <= rmin + 1e-12)
                r = int(ties[np.argmin(basic[ties])]) if ties.size else -1
            else:
                # Harris: relax bounds by HARRIS_TOL, then take the largest pivot
                relaxed = np.full(self.m, np.inf)
                relaxed[pos] = (xb[pos] - lb[pos] + HARRIS_TOL) / g[pos]
                relaxed[neg] = (ub[neg] - xb[neg] + HARRIS_TOL) / -g[neg]
                rmax = relaxed.min()
                ties = np.flatnonzero(ratios <= rmax)
                r = int(ties[np.argmax(np.abs(g[ties]))]) if ties.size else -1
                rmin = ratios[r] if r >= 0 else np.inf
            if r >= 0 and rmin < theta:
                theta = rmin
                leave = r
                leave_to_upper = bool(neg[r])
            if not np.isfinite(theta):
                return LpStatus.UNBOUNDED, basic, x, Binv

            self.iterations += 1
            degenerate_run = degenerate_run + 1 if theta <= 1e-12 else 0
            x[basic] = xb - theta * g
            if leave < 0:
                # bound flip, basis unchanged
                x[q] = hi[q] if direction > 0 else lo[q]
                continue
            out = basic[leave]
            x[q] = x[q] + direction * theta
            x[out] = hi[out] if leave_to_upper else lo[out]
            piv = alpha[leave]
            row = Binv[leave] / piv
            Binv -= np.outer(alpha, row)
            Binv[leave] = row
            basic[leave] = q
            nonbasic[q] = False
            nonbasic[out] = True
            since_refactor += 1

    def _refactor(self, basic, x, nonbasic):
        B = self.M[:, basic]
        try:
            Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise _SingularBasis("singular basis during refactorisation") from exc
        x = x.copy()
        x[basic] = Binv @ (self.b - self.M[:, nonbasic] @ x[nonbasic])
        return Binv, x

    def _finish(self, basic, x, Binv) -> LpSolution:
        p, m, n = self.p, self.m, self.n
        nonbasic = np.ones(self.M.shape[1], bool)
        nonbasic[basic] = False
        Binv, x = self._refactor(basic, x, nonbasic)
        xs = np.clip(x[:n], p.lo, p.hi)
        y_int = self.cost[basic] @ Binv
        duals = self.obj_sign * y_int * self.row_sign
        duals = duals + 0.0  # normalise -0.0
        reduced = p.c - p.A.T @ duals
        self._check_feasible(xs)
        labels = tuple(("x", int(j)) if j < n else ("s", int(j - n)) for j in basic)
        if any(j >= n + m for j in basic):
            labels = None
        upper = tuple(int(j) for j in range(n) if nonbasic[j] and np.isfinite(p.hi[j]) and x[j] >= p.hi[j])
        return LpSolution(
            LpStatus.OPTIMAL,
            x=xs,
            duals=duals,
            reduced_costs=reduced,
            objective=float(p.c @ xs),
            iterations=self.iterations,
            basis=Basis(labels, upper) if labels is not None else None,
        )

    def _check_feasible(self, xs):
        p = self.p
        ax = p.A @ xs
        scale = 1.0 + np.abs(p.b) + np.abs(p.A) @ np.abs(xs)
        viol = np.zeros_like(ax)
        for i, s in enumerate(p.senses):
            if s == LE:
                viol[i] = ax[i] - p.b[i]
            elif s == GE:
                viol[i] = p.b[i] - ax[i]
            else:
                viol[i] = abs(ax[i] - p.b[i])
        if np.any(viol > self.tol_feas * scale):
            worst = int(np.argmax(viol / scale))
            raise LpNumericalError(f"primal infeasibility {viol[worst]:.3g} on row {worst} after solve")


def _solve_highs(problem: LpProblem) -> LpSolution:
    from scipy.optimize import linprog

    p = problem
    sign = -1.0 if p.maximize else 1.0
    le = [i for i, s in enumerate(p.senses) if s != EQ]
    eq = [i for i, s in enumerate(p.senses) if s == EQ]
    flip = np.array([-1.0 if p.senses[i] == GE else 1.0 for i in le])
    A_ub = p.A[le] * flip[:, None] if le else None
    b_ub = p.b[le] * flip if le else None
    kwargs = dict(
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=p.A[eq] if eq else None,
        b_eq=p.b[eq] if eq else None,
        bounds=list(zip(p.lo, [None if not np.isfinite(h) else h for h in p.hi])),
        method="highs",
    )
    res = linprog(sign * p.c, **kwargs)
    if res.status == 2:
        # presolve can report unbounded models as infeasible
        res = linprog(sign * p.c, options={"presolve": False}, **kwargs)
    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE)
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED)
    if res.status != 0:
        raise LpNumericalError(f"HiGHS failed: {res.message}")
    duals = np.zeros(p.A.shape[0])
    if le:
        duals[le] = sign * res.ineqlin.marginals * flip
    if eq:
        duals[eq] = sign * res.eqlin.marginals
    duals = duals + 0.0
    return LpSolution(
        LpStatus.OPTIMAL,
        x=res.x,
        duals=duals,
        reduced_costs=p.c - p.A.T @ duals,
        objective=float(p.c @ res.x),
        iterations=int(getattr(res, "nit", 0)),
    )
