from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_code
from pseudocone.errors import InputError
from pseudocone.linprog import (
    CompiledLp,
    LpProblem,
    cone_slice,
    is_nonnegative_over_cone,
    normalization,
    solve,
)
from pseudocone.polytope import (
    ConstraintSystem,
    LinearConstraint,
    fundamental_cone,
    fundamental_polytope,
    polytope_contains,
)


def random_system(rng, n: int, m: int, box: int | None = 5) -> ConstraintSystem:
    """``A x <= b`` with b >= 0 (so 0 is feasible), x >= 0, optional box."""
    while True:
        a = rng.integers(-3, 4, size=(m, n))
        if a.any(axis=1).all() and a.any(axis=0).all():
            break
    b = rng.integers(0, 6, size=m)
    rows = [a, -np.eye(n, dtype=int)]
    rhs = [b, np.zeros(n, dtype=int)]
    if box is not None:
        rows.append(np.eye(n, dtype=int))
        rhs.append(np.full(n, box))
    matrix = np.vstack(rows)
    rhs = np.concatenate(rhs)
    return ConstraintSystem(n, matrix, rhs, np.zeros(len(rhs), bool), "polytope")


def vertex_oracle(system: ConstraintSystem, c) -> Fraction:
    """Max of c.x over all basic feasible solutions, in sympy rationals."""
    a = sympy.Matrix(system.matrix.tolist())
    b = sympy.Matrix(system.rhs.tolist())
    best = None
    for rows in itertools.combinations(range(a.rows), system.n):
        sub = a.extract(list(rows), list(range(system.n)))
        if sub.det() == 0:
            continue
        x = sub.LUsolve(b.extract(list(rows), [0]))
        if all(v <= 0 for v in (a * x - b)):
            val = sum(ci * xi for ci, xi in zip(c, x))
            best = val if best is None else max(best, val)
    return Fraction(int(sympy.fraction(best)[0]), int(sympy.fraction(best)[1]))


def dual_system(system: ConstraintSystem, c) -> tuple[ConstraintSystem, list]:
    """Dual of max c.x s.t. A x <= b, x >= 0:  min b.y s.t. A^T y >= c, y >= 0.

    Expects a box-free system from ``random_system``: the last n rows are x >= 0.
    """
    a = system.matrix[: -system.n]
    b = system.rhs[: -system.n]
    m, n = a.shape
    matrix = np.vstack([-a.T, -np.eye(m, dtype=int)])
    rhs = np.concatenate([-np.asarray(c, dtype=int), np.zeros(m, dtype=int)])
    return ConstraintSystem(m, matrix, rhs, np.zeros(len(rhs), bool), "polytope"), b.tolist()


class TestExact:
    @given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 4))
    @settings(max_examples=80, deadline=None)
    def test_matches_vertex_enumeration(self, seed, n, m):
        rng = np.random.default_rng(seed)
        system = random_system(rng, n, m)
        c = rng.integers(-4, 5, size=n).tolist()
        res = solve(LpProblem(c, system, "max"), mode="exact")
        assert res.status == "optimal"
        assert isinstance(res.optimum, Fraction)
        assert res.optimum == vertex_oracle(system, c)
        assert polytope_contains(system, list(res.point))

    def test_zero_duality_gap(self):
        rng = np.random.default_rng(2024)
        checked = 0
        while checked < 100:
            n, m = int(rng.integers(2, 6)), int(rng.integers(2, 6))
            system = random_system(rng, n, m, box=None)
            c = rng.integers(-3, 4, size=n).tolist()
            primal = solve(LpProblem(c, system, "max"), mode="exact")
            if primal.status != "optimal":
                assert primal.status == "unbounded"
                continue
            dual, b = dual_system(system, c)
            d = solve(LpProblem(b, dual, "min"), mode="exact")
            assert d.status == "optimal"
            assert primal.optimum == d.optimum
            checked += 1

    def test_unbounded_and_infeasible(self):
        s = ConstraintSystem(2, np.array([[-1, 0], [0, -1]]), np.array([0, 0]), np.array([False, False]), "cone")
        assert solve(LpProblem([1, 1], s, "max"), mode="exact").status == "unbounded"
        bad = ConstraintSystem(1, np.array([[1], [-1]]), np.array([-1, 0]), np.array([False, False]), "polytope")
        assert solve(LpProblem([1], bad), mode="exact").status == "infeasible"
        assert solve(LpProblem([1.0], bad), mode="float").status == "infeasible"

    def test_equality_rows(self):
        s = ConstraintSystem(2, np.array([[-1, 0], [0, -1]]), np.array([0, 0]), np.array([False, False]), "cone")
        res = solve(LpProblem([3, 1], s, "max", extra=[normalization(2)]), mode="exact")
        assert res.optimum == 3 and res.point == (1, 0)

    def test_free_variables(self):
        # x free, y >= 0; min x subject to x >= -2 + y, y <= 1
        s = ConstraintSystem(
            2,
            np.array([[-1, 1], [0, -1], [0, 1]]),
            np.array([2, 0, 1]),
            np.array([False, False, False]),
            "polytope",
        )
        res = solve(LpProblem([1, 0], s), mode="exact")
        assert res.optimum == -2


class TestFloat:
    @given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 6))
    @settings(max_examples=80, deadline=None)
    def test_backends_agree(self, seed, n, m):
        rng = np.random.default_rng(seed)
        system = random_system(rng, n, m)
        c = rng.normal(size=n)
        lp = CompiledLp(system)
        a = lp.solve(c, "max", mode="float", backend="highs")
        b = lp.solve(c, "max", mode="float", backend="simplex")
        exact = lp.solve([Fraction(float(v)) for v in c], "max", mode="exact")
        assert a.optimal and b.optimal
        assert a.optimum == pytest.approx(float(exact.optimum), abs=1e-8)
        assert b.optimum == pytest.approx(float(exact.optimum), abs=1e-8)

    def test_auto_mode(self, h7):
        lp = cone_slice(fundamental_cone(h7))
        assert isinstance(lp.solve([1] * 7, "max").optimum, Fraction)
        assert isinstance(lp.solve([1.0] * 7, "max").optimum, float)


class TestCone:
    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_cone_optimum_zero_or_unbounded(self, seed):
        rng = np.random.default_rng(seed)
        h = random_code(rng, 3, 6)
        cone = fundamental_cone(h)
        c = rng.integers(-3, 4, size=6).tolist()
        res = solve(LpProblem(c, cone), mode="exact")
        assert res.status in ("optimal", "unbounded")
        if res.optimal:
            assert res.optimum == 0
        assert (res.status == "optimal") == is_nonnegative_over_cone(cone, c, mode="exact")

    def test_slice_requires_cone(self, h7):
        with pytest.raises(InputError):
            cone_slice(fundamental_polytope(h7))

    def test_bad_inputs(self, h7):
        lp = cone_slice(fundamental_cone(h7))
        with pytest.raises(InputError):
            lp.solve([1, 2], "min")
        with pytest.raises(InputError):
            lp.solve([1] * 7, "sideways")
        with pytest.raises(InputError):
            lp.solve([1] * 7, "min", mode="fuzzy")

    def test_deterministic(self, h7):
        lp = cone_slice(fundamental_cone(h7))
        c = [Fraction(1, 3), 2, -1, 0, 5, Fraction(-7, 2), 1]
        assert lp.solve(c, "max") == lp.solve(c, "max")

    def test_extra_constraint(self):
        n = 3
        s = ConstraintSystem(n, -np.eye(n, dtype=int), np.zeros(n, int), np.zeros(n, bool), "cone")
        cap = LinearConstraint((Fraction(1), Fraction(0), Fraction(0)), Fraction(1, 4))
        res = solve(LpProblem([1, 0, 0], s, "max", extra=[normalization(n), cap]), mode="exact")
        assert res.optimum == Fraction(1, 4)
