"""Lower and upper bounds on the minimum AWGN pseudo-weight.

Every lower bound here is the reciprocal of an upper bound on
``max ||x||^2`` over the normalized cone slice ``K ∩ {1^T x = 1}``, obtained
by relaxing the slice to boxes (first order) or to boxes plus pairwise caps
(second order). The upper bound comes from a feasible point found by local
search.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from pseudocone._parallel import chunked, parallel_map
from pseudocone.codes import ParityCheckMatrix
from pseudocone.errors import InputError, LpError
from pseudocone.generators import PseudoCodeword, pseudo_weight_exact
from pseudocone.linprog import CompiledLp, Mode, cone_slice
from pseudocone.polytope import ConstraintSystem, fundamental_cone, polytope_contains

log = logging.getLogger(__name__)

LP_CHUNK = 64
SWEEP_GRID_STEP = 1e-3
# |d/dt| of the sub-problem objective is at most 2t + 2 sum(c) + 2r j <= 8
SWEEP_LIPSCHITZ = 8.0
BREAKPOINT_MERGE = 1e-14


@dataclass
class BoxCaps:
    alpha: np.ndarray
    beta: np.ndarray | None = None


@dataclass
class BoundReport:
    code: str
    n: int
    column_weight_bound: float | None
    first_order: float
    second_order: float | None
    upper_bound: float | None
    caps: BoxCaps
    witness: PseudoCodeword | None = None
    timings: dict[str, float] = field(default_factory=dict)

    def to_dict(self, include_timings: bool = False) -> dict:
        return {
            "code": self.code,
            "n": self.n,
            "bounds": {
                "cw": _g6(self.column_weight_bound),
                "first": _g6(self.first_order),
                "second": _g6(self.second_order),
                "upper": _g6(self.upper_bound),
            },
            "alpha": [_g6(float(a)) for a in self.caps.alpha],
            "witness": [] if self.witness is None else [_frac(v) for v in self.witness.vector],
            "timings": {k: round(v, 3) for k, v in self.timings.items()} if include_timings else {},
        }

    def to_json(self, include_timings: bool = False) -> str:
        return json.dumps(self.to_dict(include_timings), indent=2) + "\n"

    CSV_HEADER = "code,n,cw,first,second,upper"

    def to_csv_row(self) -> str:
        vals = [self.column_weight_bound, self.first_order, self.second_order, self.upper_bound]
        return ",".join([self.code, str(self.n)] + ["" if v is None else f"{v:.6g}" for v in vals])


def _g6(v):
    if v is None:
        return None
    return float(f"{float(v):.6g}")


def _frac(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


# ---------------------------------------------------------------------------
# closed-form pieces


def column_weight_bound(h: ParityCheckMatrix) -> float | None:
    """Minimum column weight plus one, or None when two columns share two rows."""
    if not h.is_four_cycle_free():
        return None
    return float(h.column_weights.min() + 1)


def box_max_norm(alpha: Sequence, budget=1):
    """Maximize ``||x||^2`` over ``0 <= x <= alpha, sum(x) = budget``.

    Fill the largest caps first (ties by index); the first cap that would
    overshoot the budget takes the remainder. Exact when every input is rational.
    Returns ``(value, argmax)``.
    """
    exact = all(isinstance(a, (int, Fraction, np.integer)) for a in alpha) and isinstance(
        budget, (int, Fraction, np.integer)
    )
    conv = Fraction if exact else float
    caps = [conv(int(a)) if isinstance(a, np.integer) else conv(a) for a in alpha]
    budget = conv(budget)
    if any(c < 0 for c in caps):
        raise InputError("caps must be nonnegative")
    if budget <= 0:
        raise InputError("budget must be positive")
    if sum(caps) < budget:
        raise InputError(f"infeasible: caps sum to {float(sum(caps)):.6g} < budget {float(budget):.6g}")
    order = sorted(range(len(caps)), key=lambda i: (-caps[i], i))
    x = [conv(0)] * len(caps)
    left = budget
    for i in order:
        take = min(caps[i], left)
        x[i] = take
        left -= take
        if left <= 0:
            break
    value = sum(v * v for v in x)
    return value, (tuple(x) if exact else np.array(x))


def _greedy_values(caps: np.ndarray, budget: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Vectorized :func:`box_max_norm` value for each row of ``caps``; -inf if infeasible."""
    c = -np.sort(-np.maximum(caps, 0.0), axis=1)
    cs = np.cumsum(c, axis=1)
    sq = np.cumsum(c * c, axis=1)
    m = c.shape[1]
    j = (cs < budget[:, None]).sum(axis=1)
    jj = np.minimum(j, m - 1)
    prev_cs = np.where(j > 0, cs[np.arange(len(c)), np.maximum(j - 1, 0)], 0.0)
    prev_sq = np.where(j > 0, sq[np.arange(len(c)), np.maximum(j - 1, 0)], 0.0)
    rem = np.clip(budget - prev_cs, 0.0, None)
    rem = np.where(j < m, np.minimum(rem, c[np.arange(len(c)), jj]), 0.0)
    val = prev_sq + rem * rem
    feasible = cs[:, -1] >= budget - tol
    return np.where(feasible, val, -np.inf)


# ---------------------------------------------------------------------------
# LP caps

_STATE: dict = {}


def _init_worker(system: ConstraintSystem, mode: str):
    _STATE["lp"] = cone_slice(system)
    _STATE["mode"] = mode


def _max_sum_task(index_sets):
    lp: CompiledLp = _STATE["lp"]
    out = []
    for idx in index_sets:
        c = [0] * lp.n
        for i in idx:
            c[i] = 1
        res = lp.solve(c, "max", mode=_STATE["mode"])
        if res.status == "infeasible":
            raise InputError("the fundamental cone is {0}: no pseudo-codewords, bounds are undefined")
        if not res.optimal:
            raise LpError(f"cap LP for {idx} returned {res.status}")
        out.append(res.optimum)
    return out


def _check_cone(system: ConstraintSystem):
    if system.kind != "cone":
        raise InputError("expected a fundamental cone constraint system")


def _run_cap_lps(system, index_sets, mode, threads):
    tasks = chunked(index_sets, LP_CHUNK)
    results = parallel_map(_max_sum_task, tasks, threads, _init_worker, (system, mode))
    return [v for chunk in results for v in chunk]


def compute_alpha(cone: ConstraintSystem, mode: Mode = "auto", threads: int | None = None) -> np.ndarray:
    """Per-coordinate maxima ``max x_i`` over the normalized slice.

    Float array in float mode; object array of Fractions in exact mode.
    """
    _check_cone(cone)
    vals = _run_cap_lps(cone, [(i,) for i in range(cone.n)], mode, threads)
    return np.array(vals, dtype=object if isinstance(vals[0], Fraction) else float)


def compute_beta(
    cone: ConstraintSystem, mode: Mode = "auto", threads: int | None = None, alpha=None
) -> np.ndarray:
    """Pairwise maxima ``max x_i + x_j``; symmetric, diagonal holds ``2 max x_i``.

    Pass an already computed ``alpha`` to skip re-solving the diagonal.
    """
    _check_cone(cone)
    n = cone.n
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    singles = [] if alpha is not None else [(i,) for i in range(n)]
    vals = _run_cap_lps(cone, pairs + singles, mode, threads)
    diag = list(alpha) if alpha is not None else vals[len(pairs) :]
    exact = isinstance(diag[0], Fraction)
    beta = np.zeros((n, n), dtype=object if exact else float)
    for (i, j), v in zip(pairs, vals):
        beta[i, j] = beta[j, i] = v
    for i, v in enumerate(diag):
        beta[i, i] = 2 * v
    return beta


def first_order_bound(cone: ConstraintSystem, alpha=None, **kw) -> float:
    """``1 / box_max_norm(alpha)``."""
    if alpha is None:
        alpha = compute_alpha(cone, **kw)
    value, _ = box_max_norm(list(alpha), 1)
    return float(1 / value)


# ---------------------------------------------------------------------------
# second order


def _caps_at(t: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.minimum(np.minimum(a[None, :], b[None, :] - t[:, None]), t[:, None])


def _subproblem_value(t: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return t * t + _greedy_values(_caps_at(t, a, b), 1.0 - t)


def second_order_subproblem(k: int, alpha, beta, check_grid: bool = True) -> tuple[float, float]:
    """Certified maximum of sub-problem ``k`` (x_k is the largest entry); ``(value, t_at_max)``.

    With ``t = x_k`` fixed, the others solve a box problem with caps
    ``min(alpha_i, beta_ki - t, t)`` and budget ``1 - t``. Between consecutive
    breakpoints (where a cap switches formula or two caps cross) the fill order
    is fixed; the value is then a convex quadratic in t except at points where
    the partially filled index moves, which are solved for explicitly. Evaluating
    at all those points gives the maximum; nearby breakpoints are merged on a
    grid of width 1e-14 and the merge error is added back as slack.
    Returns ``(-inf, nan)`` if the sub-problem is infeasible.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    n = len(alpha)
    others = np.r_[0:k, k + 1 : n]
    a = alpha[others]
    b = beta[k, others]
    t_lo = 1.0 / n
    t_hi = min(alpha[k], b.max(initial=-np.inf)) if n > 1 else alpha[k]
    if n == 1:
        return (1.0, 1.0) if alpha[0] >= 1.0 - 1e-12 else (-np.inf, np.nan)
    if t_hi < t_lo:
        return -np.inf, np.nan

    a_u = np.unique(a)
    b_u = np.unique(b)
    cand = np.concatenate([[t_lo, t_hi], a_u, b_u / 2, (b_u[:, None] - a_u[None, :]).ravel()])
    cand = cand[(cand >= t_lo) & (cand <= t_hi)]
    cand = np.unique(np.floor(cand / BREAKPOINT_MERGE)) * BREAKPOINT_MERGE
    cand = np.unique(np.clip(np.concatenate([cand, [t_lo, t_hi]]), t_lo, t_hi))

    points = [cand]
    if len(cand) > 1:
        lo, hi = cand[:-1], cand[1:]
        mid = 0.5 * (lo + hi)
        stack = np.stack(
            [np.broadcast_to(a, (len(mid), len(a))), b[None, :] - mid[:, None], np.broadcast_to(mid[:, None], (len(mid), len(a)))]
        )
        which = np.argmin(stack, axis=0)
        slope = np.choose(which, [0.0, -1.0, 1.0])
        icpt = np.choose(which, [np.broadcast_to(a, which.shape), np.broadcast_to(b, which.shape), 0.0])
        caps_mid = np.take_along_axis(stack, which[None], axis=0)[0]
        order = np.argsort(-caps_mid, axis=1, kind="stable")
        q = np.cumsum(np.take_along_axis(icpt, order, axis=1), axis=1)
        s = np.cumsum(np.take_along_axis(slope, order, axis=1), axis=1)
        denom = 1.0 + s
        with np.errstate(divide="ignore", invalid="ignore"):
            tj = np.where(denom != 0, (1.0 - q) / denom, np.nan)
        inside = (tj > lo[:, None]) & (tj < hi[:, None])
        points.append(tj[inside])
    pts = np.unique(np.concatenate(points))
    vals = _subproblem_value(pts, a, b)
    best = int(np.argmax(vals))
    value, t_star = float(vals[best]), float(pts[best])
    if not np.isfinite(value):
        return -np.inf, np.nan
    value += 2 * SWEEP_LIPSCHITZ * BREAKPOINT_MERGE

    if check_grid:
        steps = max(2, int(math.ceil((t_hi - t_lo) / SWEEP_GRID_STEP)) + 1)
        grid = np.linspace(t_lo, t_hi, steps)
        gv = _subproblem_value(grid, a, b)
        if gv.max() > value + 1e-12:
            h = (t_hi - t_lo) / (steps - 1)
            cell = np.maximum(gv[:-1], gv[1:]) + SWEEP_LIPSCHITZ * h / 2
            log.warning("sub-problem %d: grid exceeded breakpoint maximum; using Lipschitz cell bound", k)
            gi = int(np.argmax(gv))
            value, t_star = max(value, float(cell.max())), float(grid[gi])
    return value, t_star


def second_order_bound(cone: ConstraintSystem | None = None, alpha=None, beta=None, **kw) -> float:
    """``1 / max_k`` of the relaxed sub-problems, never looser than the first-order bound."""
    if alpha is None:
        alpha = compute_alpha(cone, **kw)
    if beta is None:
        beta = compute_beta(cone, **kw)
    alpha_f = np.asarray(alpha, dtype=float)
    beta_f = np.asarray(beta, dtype=float)
    best = max(second_order_subproblem(k, alpha_f, beta_f)[0] for k in range(len(alpha_f)))
    first_val = float(box_max_norm(list(alpha), 1)[0])
    return 1.0 / min(best, first_val)


# ---------------------------------------------------------------------------
# upper bound by local search

ASCENT_MAX_STEPS = 200
ASCENT_TOL = 1e-12


def _ascent_task(restart_seed: tuple[int, int]):
    lp: CompiledLp = _STATE["lp"]
    rng = np.random.default_rng(list(restart_seed))
    start = rng.exponential(size=lp.n)
    res = lp.solve(start, "max", mode="float")
    x = res.point
    for _ in range(ASCENT_MAX_STEPS):
        y = lp.solve(x, "max", mode="float").point
        if y @ y <= x @ x + ASCENT_TOL:
            break
        x = y
    return float(x.sum()) ** 2 / float(x @ x), x


def _solve_exact(rows: list[list[Fraction]], rhs: list[Fraction], nvar: int) -> list[Fraction] | None:
    """Unique solution of a consistent linear system by Gauss-Jordan, else None."""
    a = [r[:] + [b] for r, b in zip(rows, rhs)]
    piv_cols = []
    r = 0
    for c in range(nvar):
        p = next((i for i in range(r, len(a)) if a[i][c] != 0), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        inv = 1 / a[r][c]
        a[r] = [v * inv for v in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [vi - f * vr for vi, vr in zip(a[i], a[r])]
        piv_cols.append(c)
        r += 1
    if len(piv_cols) < nvar:
        return None
    if any(row[-1] != 0 for row in a[r:]):
        return None
    return [a[i][-1] for i in range(nvar)]


def exact_vertex(cone: ConstraintSystem, x: np.ndarray, tol: float = 1e-9) -> tuple[Fraction, ...] | None:
    """Rational point of the normalized slice near float vertex ``x``, verified exactly.

    Rebuilds the vertex from its active constraints; falls back to rounding with
    bounded denominators. Returns None if neither verifies.
    """
    x = np.asarray(x, dtype=float)
    n = cone.n
    support = np.flatnonzero(x > tol)
    parity = cone.parity_rows
    m = cone.matrix[parity]
    active = np.abs(m @ x) <= tol * max(1.0, float(x.max(initial=0.0)))
    rows = [[Fraction(int(v)) for v in r[support]] for r in m[active] if r[support].any()]
    rows.append([Fraction(1)] * len(support))
    rhs = [Fraction(0)] * (len(rows) - 1) + [Fraction(1)]
    candidates = []
    sol = _solve_exact(rows, rhs, len(support))
    if sol is not None:
        full = [Fraction(0)] * n
        for i, v in zip(support, sol):
            full[i] = v
        candidates.append(full)
    for bound in (10**4, 10**6, 10**9):
        approx = [Fraction(float(v)).limit_denominator(bound) for v in x]
        total = sum(approx)
        if total > 0:
            candidates.append([v / total for v in approx])
    for cand in candidates:
        if sum(cand) == 1 and all(v >= 0 for v in cand) and polytope_contains(cone, cand):
            return tuple(cand)
    return None


def upper_bound_search(
    cone: ConstraintSystem, restarts: int = 200, seed: int = 0, threads: int | None = None
) -> tuple[float, PseudoCodeword]:
    """Best pseudo-weight over multi-start linearized norm ascent.

    Each restart maximizes a random exponential objective over the normalized
    slice, then repeatedly maximizes ``<x, y>`` until ``||x||^2`` stops growing
    (every step is an LP, every iterate a vertex). The witness is rebuilt and
    checked in exact arithmetic.
    """
    _check_cone(cone)
    if restarts < 1:
        raise InputError("restarts must be >= 1")
    tasks = [(seed, r) for r in range(restarts)]
    found = parallel_map(_ascent_task, tasks, threads, _init_worker, (cone, "float"))
    order = sorted(range(restarts), key=lambda r: (found[r][0], r))
    for r in order:
        vec = exact_vertex(cone, found[r][1])
        if vec is not None:
            w = PseudoCodeword.from_ray(vec, cone.code)
            return w.pseudo_weight, w
        log.warning("restart %d: witness failed exact verification", r)
    raise LpError("no restart produced an exactly verifiable witness")


# ---------------------------------------------------------------------------
# orchestration


def compute_bounds(
    h: ParityCheckMatrix,
    order: int = 2,
    with_upper: bool = False,
    restarts: int = 200,
    seed: int = 0,
    threads: int | None = None,
    mode: Mode = "auto",
    name: str | None = None,
) -> BoundReport:
    """All requested bounds for one code, with per-stage wall-clock timings."""
    if order not in (1, 2):
        raise InputError("order must be 1 or 2")
    cone = fundamental_cone(h)
    timings = {}
    t0 = time.perf_counter()
    alpha = compute_alpha(cone, mode=mode, threads=threads)
    timings["alpha"] = time.perf_counter() - t0
    first = first_order_bound(cone, alpha)
    caps = BoxCaps(alpha=alpha)
    second = None
    if order == 2:
        t0 = time.perf_counter()
        beta = compute_beta(cone, mode=mode, threads=threads, alpha=alpha)
        timings["beta"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        second = second_order_bound(cone, alpha, beta)
        timings["sweep"] = time.perf_counter() - t0
        caps.beta = beta
    upper, witness = None, None
    if with_upper:
        t0 = time.perf_counter()
        upper, witness = upper_bound_search(cone, restarts, seed, threads)
        timings["upper"] = time.perf_counter() - t0
    return BoundReport(
        code=name or h.name or "code",
        n=h.cols,
        column_weight_bound=column_weight_bound(h),
        first_order=first,
        second_order=second,
        upper_bound=upper,
        caps=caps,
        witness=witness,
        timings=timings,
    )
