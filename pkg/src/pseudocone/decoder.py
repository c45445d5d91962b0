"""AWGN channel, LP decoding, ML decoding and frame-error simulation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal, Sequence

import numpy as np
from scipy.stats import binomtest

from pseudocone._parallel import parallel_map
from pseudocone.codes import ParityCheckMatrix, codewords, dimension
from pseudocone.errors import GuardExceeded, InputError, LpError
from pseudocone.linprog import CompiledLp, Mode, cone_slice, nonneg_over_slice
from pseudocone.polytope import ConstraintSystem, fundamental_cone, fundamental_polytope

INTEGRALITY_TOL = 1e-7
DEFAULT_ML_GUARD = 16
FRAME_CHUNK = 250


@dataclass(frozen=True)
class LlrVector:
    """Received AWGN samples and their LLRs ``gamma = (2 / sigma^2) r``."""

    received: np.ndarray
    sigma: float
    gamma: np.ndarray = field(init=False)

    def __post_init__(self):
        if not self.sigma > 0:
            raise InputError(f"sigma must be positive, got {self.sigma}")
        r = np.array(self.received, dtype=float)
        r.setflags(write=False)
        g = (2.0 / self.sigma**2) * r
        g.setflags(write=False)
        object.__setattr__(self, "received", r)
        object.__setattr__(self, "gamma", g)


@dataclass
class DecodeOutcome:
    status: Literal["codeword", "pseudo"]
    point: np.ndarray | tuple
    cost: float
    ml_agrees: bool | None = None

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "point": [float(f"{float(v):.6g}") for v in self.point],
            "cost": float(f"{self.cost:.6g}"),
            "ml_agrees": self.ml_agrees,
        }


def modulate(y) -> np.ndarray:
    """0 -> +1, 1 -> -1."""
    return 1.0 - 2.0 * np.asarray(y, dtype=float)


def awgn_transmit(y, sigma: float, rng_seed=None) -> LlrVector:
    """BPSK-modulate codeword ``y`` and add i.i.d. N(0, sigma^2) noise."""
    if not sigma > 0:
        raise InputError(f"sigma must be positive, got {sigma}")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    x = modulate(y)
    return LlrVector(x + sigma * rng.standard_normal(len(x)), sigma)


@lru_cache(maxsize=16)
def _compiled(system: ConstraintSystem, normalized: bool) -> CompiledLp:
    return cone_slice(system) if normalized else CompiledLp(system)


def lp_decode(polytope: ConstraintSystem, gamma, mode: Mode = "float", tol: float = INTEGRALITY_TOL) -> DecodeOutcome:
    """Minimize ``gamma . x`` over the fundamental polytope and classify the optimum.

    The optimum counts as a codeword when every coordinate is within ``tol`` of
    0 or 1 (exactly 0/1 in exact mode) and the rounded word satisfies the checks.
    """
    if polytope.kind != "polytope":
        raise InputError("lp_decode expects a fundamental polytope system")
    res = _compiled(polytope, False).solve(list(gamma) if mode == "exact" else np.asarray(gamma, float), "min", mode=mode)
    if not res.optimal:
        raise LpError(f"LP decoding returned {res.status}")
    point = res.point
    if isinstance(point, tuple):
        integral = all(v in (0, 1) for v in point)
        rounded = np.array([int(v) for v in point]) if integral else None
    else:
        rounded = np.rint(point)
        integral = bool(np.all(np.abs(point - rounded) <= tol)) and bool(np.isin(rounded, (0, 1)).all())
    code = polytope.code
    if integral and (code is None or code.is_codeword(rounded.astype(int))):
        return DecodeOutcome("codeword", rounded.astype(np.uint8), float(res.optimum))
    return DecodeOutcome("pseudo", point, float(res.optimum))


def cone_decode_success(cone: ConstraintSystem, r, tol: float = 1e-9) -> bool:
    """All-zeros decoding succeeds iff ``min r . x`` over the normalized cone slice is >= -tol."""
    return nonneg_over_slice(_compiled(cone, True), np.asarray(r, dtype=float), tol, mode="float")


@lru_cache(maxsize=16)
def _codebook(h: ParityCheckMatrix, guard: int) -> np.ndarray:
    return codewords(h, guard)


def ml_decode(h: ParityCheckMatrix, gamma, guard: int = DEFAULT_ML_GUARD) -> np.ndarray:
    """Codeword minimizing ``gamma . x``; ties go to the lexicographically smallest."""
    book = _codebook(h, guard)
    costs = book @ np.asarray(gamma, dtype=float)
    return book[int(np.argmin(costs))]


# ---------------------------------------------------------------------------
# simulation


def ebn0_db(sigma: float, rate: float) -> float:
    return 10.0 * math.log10(1.0 / (2.0 * rate * sigma**2))


def frame_noise(seed: int, frame: int, n: int) -> np.ndarray:
    """Standard normal noise for one frame, a pure function of (seed, frame)."""
    return np.random.default_rng([seed, frame]).standard_normal(n)


_SIM: dict = {}


def _init_sim(h: ParityCheckMatrix, with_ml: bool, ml_guard: int):
    _SIM["h"] = h
    _SIM["polytope"] = fundamental_polytope(h)
    _SIM["with_ml"] = with_ml
    _SIM["ml_guard"] = ml_guard


def _frames_task(task):
    sigma, seed, start, stop = task
    h, poly = _SIM["h"], _SIM["polytope"]
    lp_fail, ml_fail = [], []
    for f in range(start, stop):
        r = 1.0 + sigma * frame_noise(seed, f, h.cols)
        gamma = (2.0 / sigma**2) * r
        out = lp_decode(poly, gamma)
        lp_fail.append(out.status != "codeword" or bool(out.point.any()))
        if _SIM["with_ml"]:
            ml_fail.append(bool(ml_decode(h, gamma, _SIM["ml_guard"]).any()))
    return lp_fail, ml_fail


def frame_outcomes(
    h: ParityCheckMatrix,
    sigma: float,
    frames: int,
    seed: int,
    with_ml: bool = True,
    threads: int | None = None,
    ml_guard: int = DEFAULT_ML_GUARD,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Per-frame LP and ML failure flags, all-zeros codeword sent, same noise for both."""
    if frames < 1:
        raise InputError("frames must be >= 1")
    tasks = [(sigma, seed, s, min(s + FRAME_CHUNK, frames)) for s in range(0, frames, FRAME_CHUNK)]
    parts = parallel_map(_frames_task, tasks, threads, _init_sim, (h, with_ml, ml_guard))
    lp = np.array([v for p in parts for v in p[0]], dtype=bool)
    ml = np.array([v for p in parts for v in p[1]], dtype=bool) if with_ml else None
    return lp, ml


@dataclass
class FerRow:
    sigma: float
    ebn0_db: float
    frames: int
    lp_errors: int
    ml_errors: int | None

    def to_dict(self) -> dict:
        def ci(k):
            lo, hi = binomtest(k, self.frames).proportion_ci(confidence_level=0.95, method="wilson")
            return [float(f"{lo:.6g}"), float(f"{hi:.6g}")]

        out = {
            "sigma": float(f"{self.sigma:.6g}"),
            "ebn0_db": float(f"{self.ebn0_db:.6g}"),
            "frames": self.frames,
            "lp_errors": self.lp_errors,
            "lp_fer": float(f"{self.lp_errors / self.frames:.6g}"),
            "lp_ci95": ci(self.lp_errors),
            "ml_errors": self.ml_errors,
        }
        if self.ml_errors is not None:
            out["ml_fer"] = float(f"{self.ml_errors / self.frames:.6g}")
            out["ml_ci95"] = ci(self.ml_errors)
        return out


FER_CSV_HEADER = "sigma,ebn0_db,frames,lp_errors,ml_errors"


def fer_csv(rows: Sequence[FerRow]) -> str:
    lines = [FER_CSV_HEADER]
    for r in rows:
        ml = "" if r.ml_errors is None else str(r.ml_errors)
        lines.append(f"{r.sigma:.6g},{r.ebn0_db:.6g},{r.frames},{r.lp_errors},{ml}")
    return "\n".join(lines) + "\n"


def fer_json(rows: Sequence[FerRow]) -> str:
    return json.dumps([r.to_dict() for r in rows], indent=2) + "\n"


def simulate_fer(
    h: ParityCheckMatrix,
    sigma_list: Sequence[float],
    frames: int,
    seed: int = 0,
    threads: int | None = None,
    ml: bool | None = None,
    ml_guard: int = DEFAULT_ML_GUARD,
) -> list[FerRow]:
    """LP (and, for small codes, ML) frame error counts per noise level.

    Frame ``f`` uses noise ``frame_noise(seed, f)`` scaled by sigma, so levels
    and decoders share noise realizations.
    """
    k = dimension(h)
    if ml is None:
        ml = k <= ml_guard
    elif ml and k > ml_guard:
        raise GuardExceeded(f"ML decoding needs 2^{k} codewords (guard 2^{ml_guard})")
    rate = k / h.cols
    rows = []
    for sigma in sigma_list:
        if not sigma > 0:
            raise InputError(f"sigma must be positive, got {sigma}")
        lp_fail, ml_fail = frame_outcomes(h, sigma, frames, seed, ml, threads, ml_guard)
        rows.append(
            FerRow(
                sigma=float(sigma),
                ebn0_db=ebn0_db(sigma, rate) if rate > 0 else math.inf,
                frames=frames,
                lp_errors=int(lp_fail.sum()),
                ml_errors=None if ml_fail is None else int(ml_fail.sum()),
            )
        )
    return rows
