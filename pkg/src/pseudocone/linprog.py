"""Linear programs over constraint systems.

Two engines sit behind :func:`solve`:

* a dense two-phase tableau simplex with Bland's rule, run over ``Fraction``
  (exact mode) or ``float64`` (``backend="simplex"``);
* HiGHS dual simplex through :func:`scipy.optimize.linprog` for float mode,
  with a post-solve primal feasibility and duality-gap check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog as _scipy_linprog

from pseudocone.errors import InputError, LpError
from pseudocone.polytope import ConstraintSystem, LinearConstraint

EXACT_MAX_N = 64
FLOAT_EPS = 1e-9
KKT_TOL = 1e-8

Mode = Literal["auto", "exact", "float"]
Backend = Literal["highs", "simplex"]


@dataclass
class LpProblem:
    objective: Sequence
    system: ConstraintSystem
    direction: Literal["min", "max"] = "min"
    extra: Sequence[LinearConstraint] = field(default_factory=tuple)


@dataclass
class LpResult:
    status: Literal["optimal", "unbounded", "infeasible"]
    optimum: Fraction | float | None = None
    point: tuple | np.ndarray | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def normalization(n: int) -> LinearConstraint:
    """The compactifying equality ``1^T x = 1``."""
    return LinearConstraint(tuple(Fraction(1) for _ in range(n)), Fraction(1), "=")


def _is_rational(v) -> bool:
    return isinstance(v, (int, np.integer, Fraction))


def _resolve_mode(mode: Mode, n: int, objective) -> str:
    if mode == "auto":
        rational = all(_is_rational(v) for v in objective)
        return "exact" if n <= EXACT_MAX_N and rational else "float"
    if mode not in ("exact", "float"):
        raise InputError(f"unknown LP mode {mode!r}")
    return mode


# ---------------------------------------------------------------------------
# dense tableau simplex


class _Tableau:
    """Two-phase primal simplex on ``min c x, A_ub x <= b_ub, A_eq x = b_eq, x >= 0``.

    Bland's rule: entering variable is the lowest index with negative reduced
    cost, leaving row is the minimum ratio with ties broken by lowest basic index.
    """

    def __init__(self, c, a_ub, b_ub, a_eq, b_eq, exact: bool):
        self.exact = exact
        self.eps = 0 if exact else FLOAT_EPS
        dtype = object if exact else float
        conv = Fraction if exact else float
        nv = len(c)
        m_ub, m_eq = len(b_ub), len(b_eq)
        m = m_ub + m_eq
        rows_a = [list(r) for r in a_ub] + [list(r) for r in a_eq]
        rhs = list(b_ub) + list(b_eq)
        need_art = []
        for i in range(m):
            neg = rhs[i] < 0
            need_art.append(i >= m_ub or neg)
        n_art = sum(need_art)
        ncols = nv + m_ub + n_art
        t = np.empty((m, ncols + 1), dtype=dtype)
        t[...] = conv(0)
        basis = []
        art = nv + m_ub
        self.art_start = art
        for i in range(m):
            sign = -1 if rhs[i] < 0 else 1
            for j, v in enumerate(rows_a[i]):
                if v:
                    t[i, j] = conv(v) * sign
            if i < m_ub:
                t[i, nv + i] = conv(sign)
            t[i, -1] = conv(rhs[i]) * sign
            if need_art[i]:
                t[i, art] = conv(1)
                basis.append(art)
                art += 1
            else:
                basis.append(nv + i)
        self.t = t
        self.basis = basis
        self.nv = nv
        self.c = [conv(v) for v in c] + [conv(0)] * (m_ub + n_art)
        self.conv = conv

    def _reduced_costs(self, cost):
        d = np.array(list(cost) + [self.conv(0)], dtype=self.t.dtype)
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                d = d - cb * self.t[i]
        return d

    def _pivot(self, r, col, d):
        t = self.t
        t[r] = t[r] / t[r, col]
        nz = np.flatnonzero(t[r] != 0) if self.exact else slice(None)
        pr = t[r, nz]
        for i in np.flatnonzero(t[:, col] != 0):
            if i != r:
                t[i, nz] = t[i, nz] - t[i, col] * pr
        if d[col] != 0:
            d[nz] = d[nz] - d[col] * pr
        self.basis[r] = col
        return d

    def _iterate(self, d, allowed: int):
        eps = self.eps
        t = self.t
        while True:
            neg = np.flatnonzero(d[:allowed] < -eps) if not self.exact else [
                j for j in range(allowed) if d[j] < 0
            ]
            if len(neg) == 0:
                return "optimal", d
            col = int(neg[0])
            colv = t[:, col]
            best, best_r = None, None
            for i in np.flatnonzero(colv > eps) if not self.exact else [i for i in range(len(colv)) if colv[i] > 0]:
                ratio = t[i, -1] / colv[i]
                if (
                    best is None
                    or ratio < best - eps
                    or (abs(ratio - best) <= eps and self.basis[i] < self.basis[best_r])
                ):
                    best, best_r = ratio, i
            if best_r is None:
                return "unbounded", d
            d = self._pivot(best_r, col, d)

    def solve(self):
        eps = self.eps
        m = self.t.shape[0]
        ncols = self.t.shape[1] - 1
        if self.art_start < ncols:
            phase1 = [self.conv(0)] * ncols
            for j in range(self.art_start, ncols):
                phase1[j] = self.conv(1)
            d = self._reduced_costs(phase1)
            status, d = self._iterate(d, ncols)
            if -d[-1] > eps:
                return "infeasible", None
            # drive artificials out of the basis; drop redundant rows
            keep = []
            for i in range(m):
                if self.basis[i] >= self.art_start:
                    row = self.t[i, : self.art_start]
                    cand = np.flatnonzero(np.abs(row.astype(float)) > eps) if not self.exact else [
                        j for j in range(self.art_start) if row[j] != 0
                    ]
                    if len(cand):
                        d = self._pivot(i, int(cand[0]), d)
                        keep.append(i)
                else:
                    keep.append(i)
            self.t = np.concatenate([self.t[keep, : self.art_start], self.t[keep, -1:]], axis=1)
            self.basis = [self.basis[i] for i in keep]
        d = self._reduced_costs(self.c[: self.art_start])
        status, d = self._iterate(d, self.art_start)
        if status == "unbounded":
            return "unbounded", None
        x = [self.conv(0)] * self.nv
        for i, b in enumerate(self.basis):
            if b < self.nv:
                x[b] = self.t[i, -1]
        return "optimal", x


# ---------------------------------------------------------------------------
# problem compilation


class CompiledLp:
    """Constraint data prepared once, solved for many objectives.

    Rows of the form ``-x_i <= 0`` become variable bounds; variables without such a
    row are free (split into two nonnegative parts for the tableau engine).
    """

    def __init__(self, system: ConstraintSystem, extra: Sequence[LinearConstraint] = ()):
        self.n = n = system.n
        self.system = system
        nonneg = system.nonneg_rows
        nonneg_vars = np.zeros(n, dtype=bool)
        nonneg_vars[np.argmin(system.matrix[nonneg], axis=1)] = True
        self.free = np.flatnonzero(~nonneg_vars)
        rest = ~nonneg
        ub = rest & ~system.equality
        eq = rest & system.equality

        extra = list(extra)
        ex_ub = [c for c in extra if c.sense == "<="]
        ex_eq = [c for c in extra if c.sense == "="]
        self.a_ub = [system.matrix[ub].astype(object), *(np.array(c.coeffs, dtype=object)[None] for c in ex_ub)]
        self.b_ub = [system.rhs[ub].astype(object), np.array([c.rhs for c in ex_ub], dtype=object)]
        self.a_eq = [system.matrix[eq].astype(object), *(np.array(c.coeffs, dtype=object)[None] for c in ex_eq)]
        self.b_eq = [system.rhs[eq].astype(object), np.array([c.rhs for c in ex_eq], dtype=object)]
        self.a_ub = np.vstack([a.reshape(-1, n) for a in self.a_ub])
        self.b_ub = np.concatenate(self.b_ub)
        self.a_eq = np.vstack([a.reshape(-1, n) for a in self.a_eq])
        self.b_eq = np.concatenate(self.b_eq)

        self._float = None

    # -- float arrays for HiGHS -------------------------------------------------
    def _float_data(self):
        if self._float is None:
            a_ub = self.a_ub.astype(float)
            b_ub = self.b_ub.astype(float)
            # single-variable rows x_i <= u become bounds
            nz = (a_ub != 0).sum(axis=1)
            single = (nz == 1) & (a_ub.max(axis=1) > 0)
            upper = np.full(self.n, np.inf)
            for row, b in zip(a_ub[single], b_ub[single]):
                i = int(np.argmax(row))
                upper[i] = min(upper[i], b / row[i])
            lower = np.zeros(self.n)
            lower[self.free] = -np.inf
            a_ub, b_ub = a_ub[~single], b_ub[~single]
            self._float = (
                sp.csr_matrix(a_ub) if len(b_ub) else None,
                b_ub if len(b_ub) else None,
                sp.csr_matrix(self.a_eq.astype(float)) if len(self.b_eq) else None,
                self.b_eq.astype(float) if len(self.b_eq) else None,
                np.column_stack([lower, upper]),
            )
        return self._float

    def _solve_highs(self, c: np.ndarray) -> LpResult:
        a_ub, b_ub, a_eq, b_eq, bounds = self._float_data()
        bnds = [(None if np.isinf(lo) else lo, None if np.isinf(hi) else hi) for lo, hi in bounds]
        res = _scipy_linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bnds, method="highs-ds")
        if res.status == 2:
            return LpResult("infeasible")
        if res.status == 3:
            return LpResult("unbounded")
        if res.status != 0:
            raise LpError(f"HiGHS failed: {res.message}")
        x = np.asarray(res.x, dtype=float)
        self._check_kkt(c, x, res, bounds)
        return LpResult("optimal", float(res.fun), x)

    def _check_kkt(self, c, x, res, bounds):
        a_ub, b_ub, a_eq, b_eq, _ = self._float_data()
        scale = 1.0 + float(np.abs(x).max(initial=0.0))
        resid = 0.0
        if a_ub is not None:
            resid = max(resid, float((a_ub @ x - b_ub).max(initial=0.0)))
        if a_eq is not None:
            resid = max(resid, float(np.abs(a_eq @ x - b_eq).max(initial=0.0)))
        lo, hi = bounds[:, 0], bounds[:, 1]
        resid = max(resid, float(np.nan_to_num(lo - x, neginf=0.0).max(initial=0.0)))
        resid = max(resid, float(np.nan_to_num(x - hi, neginf=0.0).max(initial=0.0)))
        if resid > KKT_TOL * scale:
            raise LpError(f"primal residual {resid:.3g} exceeds tolerance")
        dual = 0.0
        if a_ub is not None:
            dual += float(b_ub @ res.ineqlin.marginals)
        if a_eq is not None:
            dual += float(b_eq @ res.eqlin.marginals)
        finite_hi = np.isfinite(hi)
        dual += float(hi[finite_hi] @ res.upper.marginals[finite_hi])
        finite_lo = np.isfinite(lo)
        dual += float(lo[finite_lo] @ res.lower.marginals[finite_lo])
        gap = abs(float(res.fun) - dual)
        if gap > KKT_TOL * (1.0 + abs(float(res.fun)) + float(np.abs(c).max(initial=0.0))):
            raise LpError(f"duality gap {gap:.3g} exceeds tolerance")

    # -- tableau engine -------------------------------------------------------------
    def _solve_tableau(self, c, exact: bool) -> LpResult:
        conv = Fraction if exact else float
        free = self.free
        # x = x' with free columns split into (x+ , x-) appended at the end
        def expand(a):
            a = np.asarray(a, dtype=object).reshape(-1, self.n)
            return np.hstack([a, -a[:, free]]) if len(free) else a

        cc = [conv(v) for v in c] + [-conv(c[i]) for i in free]
        status, x = _Tableau(
            cc,
            expand(self.a_ub),
            [conv(v) for v in self.b_ub],
            expand(self.a_eq),
            [conv(v) for v in self.b_eq],
            exact,
        ).solve()
        if status != "optimal":
            return LpResult(status)
        point = list(x[: self.n])
        for k, i in enumerate(free):
            point[i] = point[i] - x[self.n + k]
        opt = sum((conv(ci) * xi for ci, xi in zip(c, point)), conv(0))
        if exact:
            return LpResult("optimal", opt, tuple(point))
        return LpResult("optimal", float(opt), np.array(point, dtype=float))

    def solve(self, objective, direction="min", mode: Mode = "auto", backend: Backend = "highs") -> LpResult:
        if len(objective) != self.n:
            raise InputError(f"objective has length {len(objective)}, expected {self.n}")
        if direction not in ("min", "max"):
            raise InputError(f"unknown direction {direction!r}")
        kind = _resolve_mode(mode, self.n, objective)
        sign = -1 if direction == "max" else 1
        if kind == "exact":
            c = [sign * Fraction(v) if not isinstance(v, np.integer) else Fraction(sign * int(v)) for v in objective]
            res = self._solve_tableau(c, exact=True)
        else:
            c = sign * np.asarray(objective, dtype=float)
            res = self._solve_highs(c) if backend == "highs" else self._solve_tableau(list(c), exact=False)
        if res.optimal and sign < 0:
            res.optimum = -res.optimum
        return res


def solve(problem: LpProblem, mode: Mode = "auto", backend: Backend = "highs") -> LpResult:
    """Optimize ``problem.objective`` over its system plus extra constraints."""
    if problem.system.n < 1:
        raise InputError("LP needs at least one variable")
    return CompiledLp(problem.system, problem.extra).solve(
        problem.objective, problem.direction, mode=mode, backend=backend
    )


def cone_slice(system: ConstraintSystem) -> CompiledLp:
    """The compact slice ``K ∩ {1^T x = 1}`` ready for repeated objectives."""
    if system.kind != "cone":
        raise InputError("expected a cone constraint system")
    return CompiledLp(system, [normalization(system.n)])


def is_nonnegative_over_cone(cone: ConstraintSystem, gamma, tol: float = FLOAT_EPS, mode: Mode = "auto") -> bool:
    """True iff ``min gamma . x`` over the cone is 0 (bounded), via the normalized slice."""
    return nonneg_over_slice(cone_slice(cone), gamma, tol, mode)


def nonneg_over_slice(lp: CompiledLp, gamma, tol: float = FLOAT_EPS, mode: Mode = "auto") -> bool:
    res = lp.solve(gamma, "min", mode=mode)
    if res.status == "infeasible":
        # the cone is {0}: every objective is nonnegative on it
        return True
    if res.status != "optimal":
        raise LpError(f"unexpected LP status {res.status} on a compact slice")
    if isinstance(res.optimum, Fraction):
        return res.optimum >= 0
    scale = max(1.0, float(np.abs(np.asarray(gamma, dtype=float)).max(initial=0.0)))
    return res.optimum >= -tol * scale
