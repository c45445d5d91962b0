"""Extreme rays of the fundamental cone and the pseudo-weight spectrum.

Rays are enumerated with the double description method in exact integer
arithmetic, starting from the nonnegative orthant and inserting the parity
inequalities one at a time (smallest support first).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from pseudocone.errors import GuardExceeded, InputError
from pseudocone.polytope import ConstraintSystem

DEFAULT_ENUMERATION_GUARD = 20
DEFAULT_RESOLUTION = 0.1
_PAIR_CHUNK = 1 << 22


def pseudo_weight_exact(x) -> Fraction:
    """``(sum x)^2 / sum x^2`` as a Fraction for rational input."""
    xs = [Fraction(v) for v in x]
    sq = sum(v * v for v in xs)
    if sq == 0:
        raise InputError("pseudo-weight of the zero vector is undefined")
    return sum(xs) ** 2 / sq


def pseudo_weight(x) -> float:
    """AWGN pseudo-weight ``(1^T x)^2 / ||x||^2`` of a nonzero vector."""
    x = np.asarray(x, dtype=float)
    sq = float(x @ x)
    if sq == 0.0:
        raise InputError("pseudo-weight of the zero vector is undefined")
    return float(x.sum()) ** 2 / sq


@dataclass(frozen=True)
class PseudoCodeword:
    vector: tuple[Fraction, ...]
    pseudo_weight: float
    is_codeword_ray: bool = False

    @classmethod
    def from_ray(cls, ray, code=None) -> PseudoCodeword:
        """Normalize an integer/rational ray to unit coordinate sum."""
        ray = [Fraction(v) for v in ray]
        total = sum(ray)
        if total <= 0 or any(v < 0 for v in ray):
            raise InputError("a pseudo-codeword ray must be nonnegative and nonzero")
        vec = tuple(v / total for v in ray)
        flag = False
        if code is not None:
            nz = {v for v in vec if v}
            if len(nz) == 1:
                flag = code.is_codeword(np.array([1 if v else 0 for v in vec]))
        return cls(vec, float(pseudo_weight_exact(vec)), flag)

    def as_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.vector])

    def support(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.vector) if v)


@dataclass(frozen=True)
class SpectrumHistogram:
    bins: list[tuple[float, int]]
    min_pw: float
    generator_count: int

    def to_csv(self) -> str:
        lines = ["pseudo_weight,count"]
        lines += [f"{w:.6g},{c}" for w, c in self.bins]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "min_pw": float(f"{self.min_pw:.6g}"),
            "generator_count": self.generator_count,
            "bins": [{"pseudo_weight": float(f"{w:.6g}"), "count": c} for w, c in self.bins],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


# ---------------------------------------------------------------------------
# double description


def _bits_to_words(mask_rows: np.ndarray) -> np.ndarray:
    """Pack a boolean (R, C) array into uint64 words (R, ceil(C/64))."""
    r, c = mask_rows.shape
    w = max(1, -(-c // 64))
    padded = np.zeros((r, w * 64), dtype=np.uint8)
    padded[:, :c] = mask_rows
    return np.packbits(padded, axis=1, bitorder="little").view(np.uint64)


def _reduce(rays: np.ndarray) -> np.ndarray:
    g = np.gcd.reduce(rays, axis=1)
    g[g == 0] = 1
    return rays // g[:, None]


def _adjacent_pairs(zero: np.ndarray, plus: np.ndarray, minus: np.ndarray, need: int):
    """Pairs (p, q) of rays whose common zero set is not contained in any third ray's."""
    zp, zm = zero[plus], zero[minus]
    common = zp[:, None, :] & zm[None, :, :]
    counts = np.bitwise_count(common).sum(axis=-1)
    pi, qi = np.nonzero(counts >= need)
    if not pi.size:
        return pi, qi
    cand = common[pi, qi]
    keep = np.empty(len(pi), dtype=bool)
    step = max(1, _PAIR_CHUNK // max(1, len(zero)))
    for s in range(0, len(pi), step):
        c = cand[s : s + step]
        contains = ((zero[None, :, :] & c[:, None, :]) == c[:, None, :]).all(axis=-1)
        # p and q themselves always contain the common set
        keep[s : s + step] = contains.sum(axis=1) == 2
    return plus[pi[keep]], minus[qi[keep]]


def _double_description(matrix: np.ndarray, equality: np.ndarray, nonneg_rows: np.ndarray, n: int):
    if len(nonneg_rows) != n:
        raise InputError("double description needs x_i >= 0 for every coordinate")
    m = len(matrix)
    order_var = np.argmin(matrix[nonneg_rows], axis=1)
    rays = np.zeros((n, n), dtype=np.int64)
    zero_bool = np.zeros((n, m), dtype=bool)
    for row, var in zip(nonneg_rows, order_var):
        rays[var, var] = 1
        zero_bool[:, row] = True
        zero_bool[var, row] = False
    zero = _bits_to_words(zero_bool)

    others = [r for r in range(m) if r not in set(nonneg_rows.tolist())]
    support = (matrix != 0).sum(axis=1)
    others.sort(key=lambda r: (support[r], r))
    for c in others:
        if not len(rays):
            break
        a = matrix[c]
        s = rays @ a
        plus = np.flatnonzero(s > 0)
        minus = np.flatnonzero(s < 0)
        zr = np.flatnonzero(s == 0)
        word, bit = divmod(c, 64)
        pi, qi = _adjacent_pairs(zero, plus, minus, n - 2)
        new = s[pi, None] * rays[qi] - s[qi, None] * rays[pi]
        if new.size and np.abs(new).max() > 2**53:
            raise OverflowError("ray coordinates too large for int64 arithmetic")
        new = _reduce(new)
        new_zero = zero[pi] & zero[qi]
        new_zero[:, word] |= np.uint64(1 << bit)
        zero[zr, word] |= np.uint64(1 << bit)
        keep = zr if equality[c] else np.concatenate([minus, zr])
        keep.sort()
        rays = np.concatenate([rays[keep], new])
        zero = np.concatenate([zero[keep], new_zero])
    return rays


def enumerate_generators(cone: ConstraintSystem, guard: int = DEFAULT_ENUMERATION_GUARD) -> list[PseudoCodeword]:
    """All extreme rays of a cone system, each scaled to coordinate sum 1.

    Output is duplicate-free and sorted by (pseudo-weight, vector).
    """
    if cone.kind != "cone":
        raise InputError("enumerate_generators expects a cone constraint system")
    if cone.n > guard:
        raise GuardExceeded(f"n={cone.n} exceeds the enumeration guard {guard}")
    rays = _double_description(
        cone.matrix.astype(np.int64), cone.equality, np.flatnonzero(cone.nonneg_rows), cone.n
    )
    seen = {}
    for r in rays:
        pc = PseudoCodeword.from_ray(r.tolist(), cone.code)
        seen.setdefault(pc.vector, pc)
    return sorted(seen.values(), key=lambda g: (pseudo_weight_exact(g.vector), g.vector))


def spectrum(gens: Sequence[PseudoCodeword], resolution: float = DEFAULT_RESOLUTION) -> SpectrumHistogram:
    """Histogram of generator pseudo-weights, binned to the nearest multiple of ``resolution``."""
    if not gens:
        raise InputError("spectrum of an empty generator list")
    if resolution <= 0:
        raise InputError("resolution must be positive")
    exact = [pseudo_weight_exact(g.vector) for g in gens]
    res = Fraction(resolution).limit_denominator(10**9)
    counts: dict[Fraction, int] = {}
    for p in exact:
        key = round(p / res) * res
        counts[key] = counts.get(key, 0) + 1
    bins = [(float(k), v) for k, v in sorted(counts.items())]
    return SpectrumHistogram(bins, float(min(exact)), len(gens))


def format_generators(gens: Sequence[PseudoCodeword]) -> str:
    """One ray per line, coordinates as exact ``p/q`` text."""
    return "".join(" ".join(_frac(v) for v in g.vector) + "\n" for g in gens)


def _frac(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def min_pseudo_weight(gens: Sequence[PseudoCodeword]) -> float:
    if not gens:
        return math.inf
    return float(min(pseudo_weight_exact(g.vector) for g in gens))
