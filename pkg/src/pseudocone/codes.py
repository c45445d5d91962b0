"""Binary linear codes given by parity-check matrices.

Built-in families (Hamming, Tanner group-structured LDPC), alist I/O and
brute-force codeword statistics for short codes.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from pseudocone.errors import AlistError, GuardExceeded, InputError

DEFAULT_DIMENSION_GUARD = 28

BUILTIN_CODES = (
    "hamming-7-4",
    "hamming-15-11",
    "tanner-155",
    "tanner-305",
    "tanner-755",
    "tanner-905",
)


@dataclass(frozen=True, eq=False)
class ParityCheckMatrix:
    """Dense binary parity-check matrix ``H`` (rows are checks, columns are bits).

    The array is copied and made read-only, so instances can be shared freely.
    """

    entries: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        arr = np.array(self.entries, copy=True)
        if arr.ndim != 2:
            raise InputError(f"parity-check matrix must be 2-D, got shape {arr.shape}")
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise InputError("parity-check matrix entries must be 0 or 1")
        arr = arr.astype(np.uint8)
        m, n = arr.shape
        if m < 1 or n < 2:
            raise InputError(f"need at least 1 row and 2 columns, got {m}x{n}")
        zero_rows = np.flatnonzero(arr.sum(axis=1) == 0)
        if zero_rows.size:
            raise InputError(f"all-zero row(s) {zero_rows.tolist()}")
        zero_cols = np.flatnonzero(arr.sum(axis=0) == 0)
        if zero_cols.size:
            raise InputError(f"all-zero column(s) {zero_cols.tolist()}")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    n = cols

    @cached_property
    def row_supports(self) -> tuple[tuple[int, ...], ...]:
        """Sorted column indices of the ones in each row (the sets ``U(h)``)."""
        return tuple(tuple(np.flatnonzero(r).tolist()) for r in self.entries)

    @cached_property
    def column_weights(self) -> np.ndarray:
        return self.entries.sum(axis=0).astype(int)

    @cached_property
    def row_weights(self) -> np.ndarray:
        return self.entries.sum(axis=1).astype(int)

    def is_four_cycle_free(self) -> bool:
        """True when no two columns share more than one row."""
        h = self.entries.astype(np.int64)
        overlap = h.T @ h
        np.fill_diagonal(overlap, 0)
        return bool(overlap.max(initial=0) <= 1)

    def syndrome(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        return (self.entries.astype(np.int64) @ x) % 2

    def is_codeword(self, x) -> bool:
        x = np.asarray(x)
        if x.shape != (self.cols,) or not np.isin(x, (0, 1)).all():
            return False
        return not self.syndrome(x).any()

    def __eq__(self, other):
        if not isinstance(other, ParityCheckMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash((self.entries.shape, self.entries.tobytes()))

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<ParityCheckMatrix{label} {self.rows}x{self.cols}>"


@dataclass(frozen=True)
class CodeFacts:
    n: int
    k: int
    d_min: float  # math.inf when the code is {0}
    weight_spectrum: dict[int, int]


# ---------------------------------------------------------------------------
# constructors


def hamming_code(m: int) -> ParityCheckMatrix:
    """Hamming code with columns 1..2^m-1 in increasing order, MSB in row 0."""
    if not isinstance(m, (int, np.integer)) or not 2 <= m <= 5:
        raise InputError(f"hamming_code requires 2 <= m <= 5, got {m!r}")
    n = 2**m - 1
    cols = np.arange(1, n + 1)
    bits = (cols[None, :] >> np.arange(m - 1, -1, -1)[:, None]) & 1
    return ParityCheckMatrix(bits, name=f"hamming-{n}-{n - m}")


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % d for d in range(2, math.isqrt(p) + 1))


def multiplicative_order(x: int, p: int) -> int:
    y, k = x % p, 1
    while y != 1:
        y = y * x % p
        k += 1
    return k


def tanner_group_code(p: int) -> ParityCheckMatrix:
    """Tanner's group-structured (3,5)-regular LDPC code of length 5p.

    Block (j, k) is the p x p identity cyclically shifted by ``b**j * a**k mod p``,
    with ``a`` the smallest element of order 5 and ``b`` the smallest of order 3.
    """
    if not isinstance(p, (int, np.integer)) or not _is_prime(int(p)):
        raise InputError(f"tanner_group_code requires a prime, got {p!r}")
    p = int(p)
    if p % 15 != 1:
        raise InputError(f"tanner_group_code requires p = 1 (mod 15), got {p}")
    a = min(x for x in range(2, p) if multiplicative_order(x, p) == 5)
    b = min(x for x in range(2, p) if multiplicative_order(x, p) == 3)
    h = np.zeros((3 * p, 5 * p), dtype=np.uint8)
    r = np.arange(p)
    for j in range(3):
        for k in range(5):
            shift = pow(b, j, p) * pow(a, k, p) % p
            h[j * p + r, k * p + (r + shift) % p] = 1
    return ParityCheckMatrix(h, name=f"tanner-{5 * p}")


def builtin_code(name: str) -> ParityCheckMatrix:
    """Look up one of :data:`BUILTIN_CODES`."""
    if name == "hamming-7-4":
        return hamming_code(3)
    if name == "hamming-15-11":
        return hamming_code(4)
    if name.startswith("tanner-") and name in BUILTIN_CODES:
        return tanner_group_code(int(name.split("-")[1]) // 5)
    raise InputError(f"unknown built-in code {name!r}; choose from {', '.join(BUILTIN_CODES)}")


def resolve_code(source: str) -> ParityCheckMatrix:
    """Built-in name or path to an alist file."""
    if source in BUILTIN_CODES:
        return builtin_code(source)
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {source!r}: {exc.strerror or exc}") from exc
    h = load_alist(text)
    return ParityCheckMatrix(h.entries, name=path.stem)


# ---------------------------------------------------------------------------
# alist


def _ints(line: str, lineno: int) -> list[int]:
    try:
        return [int(tok) for tok in line.split()]
    except ValueError:
        raise AlistError(f"non-integer token in {line.strip()!r}", lineno) from None


def load_alist(text: str) -> ParityCheckMatrix:
    """Parse alist text (1-based indices; zero padding in index lists is accepted)."""
    lines = [(i + 1, ln) for i, ln in enumerate(text.splitlines()) if ln.strip()]
    pos = 0

    def take(expected: int | None, what: str) -> tuple[int, list[int]]:
        nonlocal pos
        if pos >= len(lines):
            raise AlistError(f"unexpected end of file while reading {what}", len(text.splitlines()) + 1)
        lineno, line = lines[pos]
        pos += 1
        vals = _ints(line, lineno)
        if expected is not None and len(vals) != expected:
            raise AlistError(f"{what}: expected {expected} values, got {len(vals)}", lineno)
        return lineno, vals

    lineno, (n, m) = take(2, "header 'n m'")
    if n < 1 or m < 1:
        raise AlistError(f"bad dimensions n={n} m={m}", lineno)
    lineno, (max_col, max_row) = take(2, "maximum degrees")
    lineno, col_deg = take(n, "column degrees")
    if max(col_deg) > max_col or min(col_deg) < 0:
        raise AlistError("column degree outside [0, max column degree]", lineno)
    lineno, row_deg = take(m, "row degrees")
    if max(row_deg) > max_row or min(row_deg) < 0:
        raise AlistError("row degree outside [0, max row degree]", lineno)

    def indices(what: str, deg: int, max_deg: int, bound: int, unit: str) -> tuple[int, list[int]]:
        # the first `deg` entries are 1-based indices; anything after is zero padding
        lineno, idx = take(None, what)
        if len(idx) < deg or len(idx) > max(max_deg, deg) or any(idx[deg:]):
            listed = sum(1 for v in idx if v)
            raise AlistError(f"{what}: degree mismatch (declared {deg}, listed {listed})", lineno)
        for v in idx[:deg]:
            if not 1 <= v <= bound:
                raise AlistError(f"index out of range: {v} ({unit} are 1..{bound})", lineno)
        if len(set(idx[:deg])) != deg:
            raise AlistError(f"{what}: duplicate index", lineno)
        return lineno, idx[:deg]

    h = np.zeros((m, n), dtype=np.uint8)
    for j in range(n):
        _, rows = indices(f"column {j + 1} adjacency", col_deg[j], max_col, m, "rows")
        h[np.array(rows, dtype=int) - 1, j] = 1
    for i in range(m):
        lineno, cols = indices(f"row {i + 1} adjacency", row_deg[i], max_row, n, "columns")
        if sorted(cols) != (np.flatnonzero(h[i]) + 1).tolist():
            raise AlistError(f"row {i + 1}: adjacency disagrees with column lists", lineno)
    if pos != len(lines):
        raise AlistError("trailing data after row lists", lines[pos][0])
    try:
        return ParityCheckMatrix(h)
    except InputError as exc:
        raise AlistError(str(exc)) from exc


def write_alist(h: ParityCheckMatrix) -> str:
    """Standard alist text; degree lists are never zero-padded."""
    cols = [np.flatnonzero(h.entries[:, j]) + 1 for j in range(h.cols)]
    rows = [np.array(s) + 1 for s in h.row_supports]
    out = [
        f"{h.cols} {h.rows}",
        f"{max(map(len, cols))} {max(map(len, rows))}",
        " ".join(str(len(c)) for c in cols),
        " ".join(str(len(r)) for r in rows),
    ]
    out += [" ".join(map(str, c)) for c in cols]
    out += [" ".join(map(str, r)) for r in rows]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# GF(2) linear algebra and brute force


def gf2_row_reduce(a) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2) and the pivot columns."""
    a = np.array(a, dtype=np.uint8) % 2
    m, n = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(n):
        if r == m:
            break
        hits = np.flatnonzero(a[r:, c])
        if not hits.size:
            continue
        p = r + hits[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        others = np.flatnonzero(a[:, c])
        others = others[others != r]
        a[others] ^= a[r]
        pivots.append(c)
        r += 1
    return a[:r], pivots


def gf2_rank(a) -> int:
    return len(gf2_row_reduce(a)[1])


def nullspace_basis(h: ParityCheckMatrix) -> np.ndarray:
    """Basis of the code (k x n, uint8), ordered by free column."""
    rref, pivots = gf2_row_reduce(h.entries)
    n = h.cols
    free = [c for c in range(n) if c not in set(pivots)]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for t, f in enumerate(free):
        basis[t, f] = 1
        for row, pc in enumerate(pivots):
            basis[t, pc] = rref[row, f]
    return basis


def dimension(h: ParityCheckMatrix) -> int:
    return h.cols - gf2_rank(h.entries)


def _check_guard(k: int, guard: int):
    if k > guard:
        raise GuardExceeded(f"code dimension k={k} exceeds brute-force guard {guard} (2^{k} codewords)")


def codewords(h: ParityCheckMatrix, guard: int = 20) -> np.ndarray:
    """All 2^k codewords as a uint8 array, sorted lexicographically."""
    basis = nullspace_basis(h)
    k = basis.shape[0]
    _check_guard(k, guard)
    idx = np.arange(2**k, dtype=np.int64)
    coeffs = ((idx[:, None] >> np.arange(k)[None, :]) & 1).astype(np.uint8)
    words = (coeffs.astype(np.int64) @ basis.astype(np.int64)) % 2
    words = words.astype(np.uint8)
    order = np.lexsort(words.T[::-1])
    return words[order]


def _pack(rows: np.ndarray) -> np.ndarray:
    """Pack 0/1 rows into little-endian uint64 words."""
    k, n = rows.shape
    nwords = max(1, -(-n // 64))
    padded = np.zeros((k, nwords * 64), dtype=np.uint8)
    padded[:, :n] = rows
    return np.packbits(padded, axis=1, bitorder="little").view(np.uint64)


def code_facts(h: ParityCheckMatrix, guard: int = DEFAULT_DIMENSION_GUARD) -> CodeFacts:
    """Exact dimension, minimum distance and weight spectrum by enumeration."""
    basis = nullspace_basis(h)
    k = basis.shape[0]
    _check_guard(k, guard)
    n = h.cols
    counts = np.zeros(n + 1, dtype=np.int64)
    if k == 0:
        counts[0] = 1
    else:
        packed = _pack(basis)
        low_k = min(k, 16)
        # table of all combinations of the first low_k basis vectors
        low = np.zeros((1, packed.shape[1]), dtype=np.uint64)
        for t in range(low_k):
            low = np.concatenate([low, low ^ packed[t]], axis=0)
        high_k = k - low_k
        high = np.zeros(packed.shape[1], dtype=np.uint64)
        for g in range(2**high_k):
            if g:
                # Gray-code step flips exactly one high basis vector
                flip = (g & -g).bit_length() - 1
                high = high ^ packed[low_k + flip]
            w = np.bitwise_count(low ^ high).sum(axis=1)
            counts += np.bincount(w, minlength=n + 1)
    spectrum = {int(w): int(c) for w, c in enumerate(counts) if c}
    nonzero = [w for w in spectrum if w > 0]
    d_min = float(min(nonzero)) if nonzero else math.inf
    return CodeFacts(n=n, k=k, d_min=d_min, weight_spectrum=spectrum)


def minimal_support_codewords(words: Iterable[Sequence[int]]) -> list[tuple[int, ...]]:
    """Nonzero codewords whose support contains no other nonzero codeword's support."""
    nonzero = [np.asarray(w) for w in words if np.any(w)]
    sups = [frozenset(np.flatnonzero(w).tolist()) for w in nonzero]
    return [
        tuple(int(v) for v in w)
        for w, s in zip(nonzero, sups)
        if not any(t < s for t in sups)
    ]
