from __future__ import annotations

import itertools

import numpy as np
import pytest

from pseudocone.codes import ParityCheckMatrix, hamming_code


def all_binary(n: int) -> np.ndarray:
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.uint8)


def random_code(rng: np.random.Generator, m: int, n: int, density: float = 0.5) -> ParityCheckMatrix:
    """Random H with no zero row/column (redraws until valid)."""
    while True:
        h = (rng.random((m, n)) < density).astype(np.uint8)
        if h.any(axis=0).all() and h.any(axis=1).all():
            return ParityCheckMatrix(h)


@pytest.fixture(scope="session")
def h7() -> ParityCheckMatrix:
    return hamming_code(3)


@pytest.fixture(scope="session")
def h15() -> ParityCheckMatrix:
    return hamming_code(4)


# acceptance criteria report: criterion number -> (passed, detail)
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
