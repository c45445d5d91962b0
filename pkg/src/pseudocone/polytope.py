"""Fundamental polytope and fundamental cone of a parity-check matrix.

Constraints are stored as an integer matrix with one row per inequality
``a . x <= b`` (or equality). All systems built here have integer data, so
membership can be decided exactly for rational points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Literal

import numpy as np

from pseudocone.codes import ParityCheckMatrix
from pseudocone.errors import GuardExceeded, InputError

DEFAULT_POLYTOPE_GUARD = 2**20
DEFAULT_TOL = 1e-9

Sense = Literal["<=", "="]


@dataclass(frozen=True)
class LinearConstraint:
    coeffs: tuple[Fraction, ...]
    rhs: Fraction
    sense: Sense = "<="

    def __post_init__(self):
        if self.sense not in ("<=", "="):
            raise InputError(f"unknown constraint sense {self.sense!r}")
        if not any(self.coeffs):
            raise InputError("constraint with all-zero coefficients")

    def evaluate(self, x) -> Fraction:
        return sum((c * Fraction(v) for c, v in zip(self.coeffs, x) if c), Fraction(0))

    def satisfied_by(self, x) -> bool:
        lhs = self.evaluate(x)
        return lhs == self.rhs if self.sense == "=" else lhs <= self.rhs


@dataclass(frozen=True, eq=False)
class ConstraintSystem:
    """Integer constraint data ``matrix @ x (<=|=) rhs`` of kind polytope or cone."""

    n: int
    matrix: np.ndarray
    rhs: np.ndarray
    equality: np.ndarray
    kind: Literal["polytope", "cone"]
    code: ParityCheckMatrix | None = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("matrix", "rhs", "equality"):
            arr = np.array(getattr(self, name), copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.matrix.ndim != 2 or self.matrix.shape[1] != self.n:
            raise InputError(f"constraint matrix shape {self.matrix.shape} does not match n={self.n}")
        if not (len(self.rhs) == len(self.equality) == self.matrix.shape[0]):
            raise InputError("rhs / sense lengths do not match constraint count")
        if (~self.matrix.any(axis=1)).any():
            raise InputError("constraint with all-zero coefficients")
        if self.kind == "cone" and self.rhs.any():
            raise InputError("cone constraints must have zero right-hand side")

    def __len__(self):
        return self.matrix.shape[0]

    @property
    def constraints(self) -> list[LinearConstraint]:
        return [
            LinearConstraint(
                tuple(Fraction(int(c)) for c in row),
                Fraction(int(b)),
                "=" if eq else "<=",
            )
            for row, b, eq in zip(self.matrix, self.rhs, self.equality)
        ]

    @cached_property
    def nonneg_rows(self) -> np.ndarray:
        """Mask of rows of the form ``-x_i <= 0``."""
        m = self.matrix
        single = (m != 0).sum(axis=1) == 1
        return single & (m.min(axis=1) == -1) & (m.max(axis=1) == 0) & (self.rhs == 0) & ~self.equality

    @cached_property
    def parity_rows(self) -> np.ndarray:
        """Mask of the parity inequalities (everything except the box rows)."""
        m = self.matrix
        single = (m != 0).sum(axis=1) == 1
        upper = single & (m.max(axis=1) == 1) & (m.min(axis=1) == 0) & (self.rhs == 1)
        return ~(self.nonneg_rows | upper)

    def cone_part(self) -> ConstraintSystem:
        """Subsystem of rows with zero right-hand side, i.e. those active at the origin."""
        keep = self.rhs == 0
        return ConstraintSystem(
            self.n, self.matrix[keep], self.rhs[keep], self.equality[keep], "cone", self.code
        )


def _check_code(h) -> ParityCheckMatrix:
    if not isinstance(h, ParityCheckMatrix):
        h = ParityCheckMatrix(h)
    return h


def _box_rows(n: int, upper: bool):
    rows = [-np.eye(n, dtype=np.int64)]
    rhs = [np.zeros(n, dtype=np.int64)]
    if upper:
        rows.append(np.eye(n, dtype=np.int64))
        rhs.append(np.ones(n, dtype=np.int64))
    return rows, rhs


def fundamental_polytope(h: ParityCheckMatrix, guard: int = DEFAULT_POLYTOPE_GUARD) -> ConstraintSystem:
    """All odd-set parity inequalities of every check, followed by ``0 <= x <= 1``.

    For a check with support ``U`` and each odd ``V`` subset of ``U`` (enumerated
    in bitmask order over the sorted support) the row is
    ``sum_V x - sum_{U \\ V} x <= |V| - 1``.
    """
    h = _check_code(h)
    n = h.cols
    total = sum(2 ** (len(u) - 1) for u in h.row_supports)
    if total > guard:
        raise GuardExceeded(f"fundamental polytope would have {total} parity constraints (guard {guard})")
    rows, rhs = [], []
    for support in h.row_supports:
        w = len(support)
        u = np.array(support)
        for mask in range(1, 2**w):
            size = bin(mask).count("1")
            if size % 2 == 0:
                continue
            in_v = ((mask >> np.arange(w)) & 1).astype(bool)
            row = np.zeros(n, dtype=np.int64)
            row[u] = np.where(in_v, 1, -1)
            rows.append(row)
            rhs.append(size - 1)
    box, box_rhs = _box_rows(n, upper=True)
    matrix = np.vstack([np.array(rows, dtype=np.int64).reshape(-1, n), *box])
    b = np.concatenate([np.array(rhs, dtype=np.int64), *box_rhs])
    return ConstraintSystem(n, matrix, b, np.zeros(len(b), dtype=bool), "polytope", h)


def fundamental_cone(h: ParityCheckMatrix) -> ConstraintSystem:
    """The ``|V| = 1`` parity inequalities ``x_i <= sum_{U \\ i} x_j`` plus ``x >= 0``."""
    h = _check_code(h)
    n = h.cols
    rows = []
    for support in h.row_supports:
        u = np.array(support)
        for i in support:
            row = np.zeros(n, dtype=np.int64)
            row[u] = -1
            row[i] = 1
            rows.append(row)
    box, box_rhs = _box_rows(n, upper=False)
    matrix = np.vstack([np.array(rows, dtype=np.int64).reshape(-1, n), *box])
    b = np.concatenate([np.zeros(len(rows), dtype=np.int64), *box_rhs])
    return ConstraintSystem(n, matrix, b, np.zeros(len(b), dtype=bool), "cone", h)


def _as_exact(x) -> list[Fraction] | None:
    """Fractions for int/Fraction input; None when the input is floating point."""
    out = []
    for v in x:
        if isinstance(v, (int, np.integer, Fraction)):
            out.append(Fraction(int(v)) if isinstance(v, np.integer) else Fraction(v))
        else:
            return None
    return out


def _exact_lhs(system: ConstraintSystem, x: list[Fraction]) -> tuple[np.ndarray, int]:
    """Scaled integer left-hand sides and the common denominator."""
    denom = math.lcm(*(v.denominator for v in x)) if x else 1
    scaled = np.array([int(v * denom) for v in x], dtype=object)
    return system.matrix.astype(object) @ scaled, denom


def polytope_contains(system: ConstraintSystem, x, tol: float = DEFAULT_TOL) -> bool:
    """Membership test; exact for int/Fraction points, within ``tol`` for floats."""
    if len(x) != system.n:
        raise InputError(f"point has dimension {len(x)}, system has {system.n}")
    exact = _as_exact(x)
    if exact is not None:
        lhs, denom = _exact_lhs(system, exact)
        rhs = system.rhs.astype(object) * denom
        le = lhs <= rhs
        eq = lhs == rhs
        return bool(np.where(system.equality, eq, le).all())
    xf = np.asarray(x, dtype=float)
    lhs = system.matrix @ xf
    slack = tol * max(1.0, float(np.abs(xf).max(initial=0.0)))
    viol = np.where(system.equality, np.abs(lhs - system.rhs), lhs - system.rhs)
    return bool((viol <= slack).all())


def cone_scaling_link(h: ParityCheckMatrix, x) -> bool:
    """Whether ``x`` lies in the fundamental cone of ``h`` (exact for rational input)."""
    return polytope_contains(fundamental_cone(h), x)


def polytope_scale(h: ParityCheckMatrix, x) -> Fraction | None:
    """A positive ``a`` with ``a * x`` in the fundamental polytope, or None if x is not in the cone.

    For x in the cone the ``|V| = 1`` rows are scale invariant, and every row with
    ``|V| >= 3`` has left side at most ``|V| a max(x)``, so ``a = 2 / (3 max x)``
    satisfies it; ``a <= 1 / max x`` keeps the box.
    """
    h = _check_code(h)
    xe = _as_exact(x)
    if xe is None:
        xe = [Fraction(float(v)) for v in x]
    if not cone_scaling_link(h, xe):
        return None
    top = max(xe)
    if top == 0:
        return Fraction(1)
    return Fraction(2, 3) / top


def dual_cone_contains(generators, z, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``z . w >= -tol |z| |w|`` for every generator ``w``."""
    if not generators:
        raise InputError("empty generator list")
    z = np.asarray(z, dtype=float)
    znorm = float(np.linalg.norm(z))
    for g in generators:
        w = np.asarray(getattr(g, "vector", g), dtype=float)
        if z @ w < -tol * znorm * float(np.linalg.norm(w)):
            return False
    return True


def to_ine(system: ConstraintSystem, comment: str = "") -> str:
    """CDD ``.ine`` text: rows ``b - A x >= 0``, equalities listed under ``linearity``."""
    out = []
    if comment:
        out.append(f"* {comment}")
    out.append("H-representation")
    eq_rows = np.flatnonzero(system.equality) + 1
    if eq_rows.size:
        out.append("linearity " + " ".join(map(str, [eq_rows.size, *eq_rows.tolist()])))
    out.append("begin")
    out.append(f" {len(system)} {system.n + 1} integer")
    for row, b in zip(system.matrix, system.rhs):
        out.append(" " + " ".join(str(int(v)) for v in [b, *(-row)]))
    out.append("end")
    return "\n".join(out) + "\n"
