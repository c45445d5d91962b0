from __future__ import annotations

import itertools
import json
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog as scipy_linprog

from conftest import random_code
from pseudocone.codes import ParityCheckMatrix, codewords, minimal_support_codewords, tanner_group_code
from pseudocone.errors import GuardExceeded, InputError
from pseudocone.generators import (
    PseudoCodeword,
    enumerate_generators,
    format_generators,
    min_pseudo_weight,
    pseudo_weight,
    pseudo_weight_exact,
    spectrum,
)
from pseudocone.polytope import fundamental_cone, fundamental_polytope, polytope_contains


def extreme_ray_oracle(cone) -> set[tuple[Fraction, ...]]:
    """Rays whose tight rows have rank n - 1, found by trying every (n-1)-row subset."""
    a = sympy.Matrix(cone.matrix.tolist())
    n = cone.n
    found = set()
    for rows in itertools.combinations(range(a.rows), n - 1):
        null = a.extract(list(rows), list(range(n))).nullspace()
        if len(null) != 1:
            continue
        v = null[0]
        for sign in (1, -1):
            r = [sign * x for x in v]
            if all(x >= 0 for x in r) and all(x <= 0 for x in a * sympy.Matrix(r)):
                total = sum(r)
                found.add(tuple(Fraction(int(sympy.fraction(x / total)[0]), int(sympy.fraction(x / total)[1])) for x in r))
    return found


@pytest.fixture(scope="module")
def gens7(h7):
    return enumerate_generators(fundamental_cone(h7))


@pytest.fixture(scope="module")
def gens15(h15):
    return enumerate_generators(fundamental_cone(h15))


class TestPseudoWeight:
    def test_examples(self):
        assert pseudo_weight([1, 1, 0, 0, 0]) == 2
        assert pseudo_weight([1] * 7) == 7
        assert pseudo_weight_exact([2, 1, 1]) == Fraction(16, 6)
        assert pseudo_weight([2, 1, 1]) == pytest.approx(2.6666666667)

    def test_zero(self):
        with pytest.raises(InputError):
            pseudo_weight([0, 0])
        with pytest.raises(InputError):
            pseudo_weight_exact([0, 0])

    @given(st.lists(st.fractions(min_value=0, max_value=10), min_size=1, max_size=10), st.fractions(min_value=Fraction(1, 1000), max_value=1000))
    @settings(max_examples=300)
    def test_scale_invariance_exact(self, x, a):
        if not any(x):
            return
        assert pseudo_weight_exact([a * v for v in x]) == pseudo_weight_exact(x)

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=20))
    def test_binary_vectors_give_hamming_weight(self, x):
        if any(x):
            assert pseudo_weight_exact(x) == sum(x)


class TestEnumeration:
    def test_two_columns(self):
        gens = enumerate_generators(fundamental_cone(ParityCheckMatrix(np.array([[1, 1]]))))
        assert [g.vector for g in gens] == [(Fraction(1, 2), Fraction(1, 2))]

    def test_single_check(self):
        gens = enumerate_generators(fundamental_cone(ParityCheckMatrix(np.array([[1, 1, 1]]))))
        h = Fraction(1, 2)
        assert {g.vector for g in gens} == {(h, h, 0), (h, 0, h), (0, h, h)}
        assert all(g.pseudo_weight == 2 for g in gens)
        # the uniform point is a combination, not an extreme ray
        assert (Fraction(1, 3),) * 3 not in {g.vector for g in gens}

    def test_hamming7(self, gens7):
        assert len(gens7) == 42
        assert min_pseudo_weight(gens7) == 3
        assert all(sum(g.vector) == 1 for g in gens7)
        keys = [(pseudo_weight_exact(g.vector), g.vector) for g in gens7]
        assert keys == sorted(keys)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(2, 5))
    @settings(max_examples=25, deadline=None)
    def test_matches_vertex_oracle(self, seed, m, n):
        h = random_code(np.random.default_rng(seed), m, n)
        cone = fundamental_cone(h)
        assert {g.vector for g in enumerate_generators(cone)} == extreme_ray_oracle(cone)

    def test_guard(self):
        with pytest.raises(GuardExceeded):
            enumerate_generators(fundamental_cone(tanner_group_code(31)))

    def test_requires_cone(self, h7):
        with pytest.raises(InputError):
            enumerate_generators(fundamental_polytope(h7))

    def test_generators_lie_in_cone(self, gens15, h15):
        cone = fundamental_cone(h15)
        assert all(polytope_contains(cone, g.vector) for g in gens15)
        assert len({g.vector for g in gens15}) == len(gens15)


class TestProperties:
    def test_mediant(self):
        assert Fraction(1 + 2, 2 + 1) >= min(Fraction(1, 2), Fraction(2, 1))
        rng = np.random.default_rng(11)
        a, b, c, d = rng.uniform(1e-6, 1e3, size=(4, 10_000))
        assert ((a + c) / (b + d) >= np.minimum(a / b, c / d) * (1 - 1e-15)).all()
        ints = rng.integers(1, 10**6, size=(10_000, 4))
        for p, q, r, s in ints.tolist():
            assert Fraction(p + r, q + s) >= min(Fraction(p, q), Fraction(r, s))

    @pytest.mark.parametrize("which", ["gens7", "gens15"])
    def test_min_over_cone_attained_on_generators(self, which, request):
        gens = request.getfixturevalue(which)
        w = np.array([g.as_float() for g in gens])
        floor = min_pseudo_weight(gens)
        rng = np.random.default_rng(5)
        lam = rng.exponential(size=(10_000, len(gens)))
        # sparse combinations probe the faces as well as the interior
        lam *= rng.random((10_000, len(gens))) < rng.uniform(0.001, 1, size=(10_000, 1))
        lam[~lam.any(axis=1), 0] = 1.0
        x = lam @ w
        pw = x.sum(axis=1) ** 2 / (x**2).sum(axis=1)
        assert pw.min() >= floor - 1e-12

    def test_completeness(self, gens7, h7):
        cone = fundamental_cone(h7)
        w = np.array([g.as_float() for g in gens7])
        rng = np.random.default_rng(3)
        checked = 0
        while checked < 100:
            x = rng.random(7) * (rng.random(7) < 0.8)
            if not x.any() or not polytope_contains(cone, x):
                continue
            res = scipy_linprog(np.zeros(len(w)), A_eq=w.T, b_eq=x, bounds=(0, None), method="highs")
            assert res.status == 0
            checked += 1

    @pytest.mark.parametrize("which,code", [("gens7", "h7"), ("gens15", "h15")])
    def test_codeword_rays_are_minimal_codewords(self, which, code, request):
        gens = request.getfixturevalue(which)
        h = request.getfixturevalue(code)
        minimal = set(minimal_support_codewords(codewords(h)))
        flagged = [g for g in gens if g.is_codeword_ray]
        assert flagged
        for g in flagged:
            assert tuple(1 if v else 0 for v in g.vector) in minimal

    def test_hamming7_codeword_rays(self, gens7):
        weights = sorted(len(g.support()) for g in gens7 if g.is_codeword_ray)
        assert weights == [3] * 7 + [4] * 4


class TestSpectrum:
    def test_single_generator(self):
        hist = spectrum([PseudoCodeword.from_ray([1, 1])])
        assert hist.bins == [(2.0, 1)] and hist.generator_count == 1

    def test_empty_and_resolution(self, gens7):
        with pytest.raises(InputError):
            spectrum([])
        with pytest.raises(InputError):
            spectrum(gens7, 0)

    def test_counts_and_min(self, gens7):
        hist = spectrum(gens7, 0.1)
        assert hist.min_pw == 3.0
        assert sum(c for _, c in hist.bins) == 42
        coarse = spectrum(gens7, 1.0)
        assert sum(c for _, c in coarse.bins) == 42

    def test_min_pw_unrounded(self):
        g = PseudoCodeword.from_ray([2, 1, 1])
        hist = spectrum([g], 1.0)
        assert hist.bins == [(3.0, 1)]
        assert hist.min_pw == pytest.approx(8 / 3)

    def test_exports(self, gens7):
        hist = spectrum(gens7)
        assert hist.to_csv().splitlines()[0] == "pseudo_weight,count"
        assert json.loads(hist.to_json())["generator_count"] == 42

    def test_format_generators(self):
        text = format_generators([PseudoCodeword.from_ray([2, 1, 1])])
        assert text == "1/2 1/4 1/4\n"

    def test_from_ray_rejects(self):
        with pytest.raises(InputError):
            PseudoCodeword.from_ray([0, 0])
        with pytest.raises(InputError):
            PseudoCodeword.from_ray([1, -1])
