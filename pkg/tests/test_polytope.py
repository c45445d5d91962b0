from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog as scipy_linprog

from conftest import all_binary, random_code
from pseudocone.codes import ParityCheckMatrix, codewords, tanner_group_code
from pseudocone.errors import GuardExceeded, InputError
from pseudocone.polytope import (
    ConstraintSystem,
    LinearConstraint,
    cone_scaling_link,
    dual_cone_contains,
    fundamental_cone,
    fundamental_polytope,
    polytope_contains,
    polytope_scale,
    to_ine,
)


def local_hull_oracle(h: ParityCheckMatrix, x) -> bool:
    """x is in P iff each check's restriction is a convex combination of even-weight local words."""
    x = np.asarray(x, dtype=float)
    if (x < -1e-12).any() or (x > 1 + 1e-12).any():
        return False
    for u in h.row_supports:
        even = np.array([w for w in itertools.product((0, 1), repeat=len(u)) if sum(w) % 2 == 0], float)
        a_eq = np.vstack([even.T, np.ones(len(even))])
        b_eq = np.concatenate([x[list(u)], [1.0]])
        res = scipy_linprog(np.zeros(len(even)), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
        if res.status != 0:
            return False
    return True


def row_set(system: ConstraintSystem):
    return {(tuple(r), int(b)) for r, b in zip(system.matrix.tolist(), system.rhs.tolist())}


class TestConstruction:
    def test_hamming_counts(self, h7):
        p = fundamental_polytope(h7)
        assert len(p) == 3 * 2**3 + 2 * 7
        c = fundamental_cone(h7)
        assert len(c) == 3 * 4 + 7

    @given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(2, 9))
    @settings(max_examples=40, deadline=None)
    def test_counts_random(self, seed, m, n):
        h = random_code(np.random.default_rng(seed), m, n)
        w = h.row_weights
        assert len(fundamental_polytope(h)) == int(sum(2 ** (w - 1))) + 2 * n
        assert len(fundamental_cone(h)) == int(w.sum()) + n

    def test_single_check_rows(self):
        p = fundamental_polytope(ParityCheckMatrix(np.array([[1, 1, 1]])))
        parity = {(tuple(r), int(b)) for r, b, keep in zip(p.matrix.tolist(), p.rhs, p.parity_rows) if keep}
        assert parity == {
            ((1, -1, -1), 0),
            ((-1, 1, -1), 0),
            ((-1, -1, 1), 0),
            ((1, 1, 1), 2),
        }

    @given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(2, 9))
    @settings(max_examples=40, deadline=None)
    def test_cone_is_zero_rhs_subset(self, seed, m, n):
        h = random_code(np.random.default_rng(seed), m, n)
        part = fundamental_polytope(h).cone_part()
        assert part.kind == "cone"
        assert row_set(part) == row_set(fundamental_cone(h))

    def test_guard(self):
        with pytest.raises(GuardExceeded):
            fundamental_polytope(tanner_group_code(31), guard=100)

    def test_zero_row_rejected(self):
        with pytest.raises(InputError):
            ConstraintSystem(2, np.array([[0, 0]]), np.array([0]), np.array([False]), "cone")
        with pytest.raises(InputError):
            LinearConstraint((Fraction(0), Fraction(0)), Fraction(1))

    def test_cone_rhs_must_vanish(self):
        with pytest.raises(InputError):
            ConstraintSystem(2, np.array([[1, 0]]), np.array([1]), np.array([False]), "cone")

    def test_constraints_view(self, h7):
        c = fundamental_cone(h7)
        lc = c.constraints
        assert len(lc) == len(c)
        x = [Fraction(1, 3)] * 7
        assert all(con.satisfied_by(x) for con in lc)

    def test_to_ine(self, h7):
        text = to_ine(fundamental_cone(h7), "hamming")
        lines = text.splitlines()
        assert lines[1] == "H-representation"
        assert lines[3] == " 19 8 integer"
        assert lines[-1] == "end"
        # b - A x >= 0 for the first |V| = 1 row of check 0 (x_3 <= x_4 + x_5 + x_6)
        assert lines[4].split()[0] == "0"


class TestMembership:
    @pytest.mark.parametrize("seed", range(12))
    def test_binary_points_are_codewords(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 13))
        m = int(rng.integers(1, min(n, 6) + 1))
        h = random_code(rng, m, n, density=0.4)
        p = fundamental_polytope(h)
        words = all_binary(n)
        inside = np.array([polytope_contains(p, w.tolist()) for w in words])
        is_cw = ~((words.astype(int) @ h.entries.T.astype(int)) % 2).any(axis=1)
        assert np.array_equal(inside, is_cw)
        assert np.array_equal(words[inside], codewords(h))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_fractional_points_match_local_hulls(self, seed):
        rng = np.random.default_rng(seed)
        h = random_code(rng, 3, 6)
        p = fundamental_polytope(h)
        x = rng.choice([0.0, 0.25, 0.5, 0.75, 1.0], size=6)
        assert polytope_contains(p, x) == local_hull_oracle(h, x)

    def test_exact_boundary(self, h7):
        p = fundamental_polytope(h7)
        x = [Fraction(1, 2)] * 7
        assert polytope_contains(p, x)
        y = list(x)
        y[0] = Fraction(1) + Fraction(1, 10**30)
        assert not polytope_contains(p, y)

    def test_dimension_mismatch(self, h7):
        with pytest.raises(InputError):
            polytope_contains(fundamental_cone(h7), [0, 0])


class TestScaling:
    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_cone_points_scale_into_polytope(self, seed):
        rng = np.random.default_rng(seed)
        h = random_code(rng, 3, 7)
        p = fundamental_polytope(h)
        # random rational point; only cone members get a scale factor
        x = [Fraction(int(v), 7) for v in rng.integers(0, 8, size=7)]
        a = polytope_scale(h, x)
        assert (a is not None) == cone_scaling_link(h, x)
        if a is not None:
            assert a > 0
            assert polytope_contains(p, [a * v for v in x])

    def test_polytope_points_near_zero_are_cone_points(self, h7):
        p, c = fundamental_polytope(h7), fundamental_cone(h7)
        rng = np.random.default_rng(1)
        for _ in range(200):
            x = [Fraction(int(v), 1000) for v in rng.integers(0, 4, size=7)]
            # small points: only rows tight at the origin can be violated
            assert polytope_contains(p, x) == polytope_contains(c, x)


class TestDualCone:
    def test_basic(self):
        gens = [[1, 0], [0, 1]]
        assert dual_cone_contains(gens, [1, 2])
        assert dual_cone_contains(gens, [0, 0])
        assert not dual_cone_contains(gens, [1, -1])

    def test_relative_tolerance(self):
        assert dual_cone_contains([[1, 0]], [-1e-12, 5])
        assert not dual_cone_contains([[1, 0]], [-1e-3, 5])

    def test_empty(self):
        with pytest.raises(InputError):
            dual_cone_contains([], [1, 1])
