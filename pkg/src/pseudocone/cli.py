"""Command-line interface: ``pseudocone {info,spectrum,bounds,decode,simulate}``.

Exit codes: 0 success, 1 internal error, 2 usage error, 3 input error,
4 resource guard exceeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from pseudocone import __version__
from pseudocone.bounds import BoundReport, compute_bounds, first_order_bound
from pseudocone.codes import BUILTIN_CODES, code_facts, dimension, resolve_code
from pseudocone.decoder import (
    DEFAULT_ML_GUARD,
    DecodeOutcome,
    awgn_transmit,
    cone_decode_success,
    fer_csv,
    fer_json,
    lp_decode,
    ml_decode,
    simulate_fer,
)
from pseudocone.errors import GuardExceeded, InputError, PseudoconeError
from pseudocone.generators import DEFAULT_ENUMERATION_GUARD, enumerate_generators, format_generators, spectrum
from pseudocone.polytope import fundamental_cone, fundamental_polytope

log = logging.getLogger("pseudocone")

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_INPUT, EXIT_GUARD = 0, 1, 2, 3, 4
INFO_FACTS_GUARD = 20
BRUTE_FORCE_GUARD = 28


class InternalError(PseudoconeError):
    pass


def _emit(text: str, out: str | None):
    if out:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise InputError(f"cannot write {out!r}: {exc.strerror or exc}") from exc
    else:
        sys.stdout.write(text)


def _g6(v):
    return None if v is None else float(f"{v:.6g}")


def _weight_profile(weights) -> dict[str, int]:
    return {str(w): c for w, c in sorted(Counter(int(v) for v in weights).items())}


def cmd_info(args) -> int:
    h = resolve_code(args.code)
    k = dimension(h)
    summary = {
        "code": h.name or args.code,
        "n": h.cols,
        "rows": h.rows,
        "k": k,
        "column_weights": _weight_profile(h.column_weights),
        "row_weights": _weight_profile(h.row_weights),
        "four_cycle_free": h.is_four_cycle_free(),
    }
    guard = BRUTE_FORCE_GUARD if args.force else INFO_FACTS_GUARD
    if k <= guard:
        facts = code_facts(h, guard=guard)
        summary["facts"] = {
            "k": facts.k,
            "d_min": "inf" if math.isinf(facts.d_min) else int(facts.d_min),
            "weight_spectrum": {str(w): c for w, c in facts.weight_spectrum.items()},
        }
    _emit(json.dumps(summary, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    h = resolve_code(args.code)
    guard = DEFAULT_ENUMERATION_GUARD
    if h.cols > guard:
        if not args.force:
            raise GuardExceeded(
                f"n={h.cols} exceeds the enumeration guard {guard}; "
                f"use 'bounds {args.code}' for lower/upper bounds instead, or --force"
            )
        log.warning("enumerating generators for n=%d beyond the guard; this may not finish", h.cols)
        guard = h.cols
    cone = fundamental_cone(h)
    gens = enumerate_generators(cone, guard=guard)
    if not gens:
        raise InputError("the fundamental cone is {0}: no generators")
    hist = spectrum(gens, args.resolution)
    # enumeration must never undercut a proven lower bound
    first = first_order_bound(cone, threads=1)
    if hist.min_pw < first - 1e-9:
        raise InternalError(f"min pseudo-weight {hist.min_pw} is below the first-order bound {first}")
    if args.generators:
        Path(args.generators).write_text(format_generators(gens))
    if args.csv:
        text = hist.to_csv()
    else:
        payload = {"code": h.name or args.code, "n": h.cols, **hist.to_dict()}
        payload["codeword_rays"] = sum(g.is_codeword_ray for g in gens)
        text = json.dumps(payload, indent=2) + "\n"
    _emit(text, args.out)
    summary = f"min_pw {hist.min_pw:.6f}  generators {hist.generator_count}\n"
    (sys.stderr if not args.out else sys.stdout).write(summary)
    return EXIT_OK


def cmd_bounds(args) -> int:
    h = resolve_code(args.code)
    report: BoundReport = compute_bounds(
        h,
        order=args.order,
        with_upper=args.upper,
        restarts=args.restarts,
        seed=args.seed,
        threads=args.threads,
        name=h.name or args.code,
    )
    if args.csv:
        text = BoundReport.CSV_HEADER + "\n" + report.to_csv_row() + "\n"
    else:
        text = report.to_json(include_timings=args.timings)
    _emit(text, args.out)
    return EXIT_OK


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.replace(",", " ").split()])
    except ValueError:
        raise InputError(f"cannot parse vector {text!r}") from None


def cmd_decode(args) -> int:
    h = resolve_code(args.code)
    n = h.cols
    if args.llr is not None:
        gamma = _parse_vector(args.llr)
        if len(gamma) != n:
            raise InputError(f"LLR vector has length {len(gamma)}, code length is {n}")
        sent = None
    else:
        sent = np.zeros(n, dtype=int) if args.codeword is None else _parse_vector(args.codeword).astype(int)
        if not h.is_codeword(sent):
            raise InputError("--codeword is not a codeword of this code")
        gamma = awgn_transmit(sent, args.sigma, args.seed).gamma
    outcome: DecodeOutcome = lp_decode(fundamental_polytope(h), gamma)
    ml_guard = BRUTE_FORCE_GUARD if args.force else DEFAULT_ML_GUARD
    if dimension(h) <= ml_guard:
        ml = ml_decode(h, gamma, guard=ml_guard)
        outcome.ml_agrees = outcome.status == "codeword" and bool(np.array_equal(outcome.point, ml))
    payload = {"code": h.name or args.code, "n": n, "gamma": [_g6(float(g)) for g in gamma], **outcome.to_dict()}
    if sent is not None:
        payload["sent"] = sent.tolist()
        if not sent.any():
            payload["cone_success"] = cone_decode_success(fundamental_cone(h), gamma)
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    h = resolve_code(args.code)
    rows = simulate_fer(h, args.sigma, args.frames, seed=args.seed, threads=args.threads)
    _emit(fer_csv(rows) if args.csv else fer_json(rows), args.out)
    return EXIT_OK


def _threads(value: str) -> int:
    v = int(value)
    if v < 1:
        raise argparse.ArgumentTypeError("threads must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pseudocone", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, csv=True):
        p.add_argument("code", help=f"built-in name ({', '.join(BUILTIN_CODES)}) or alist path")
        p.add_argument("--out", metavar="PATH", help="write the result here instead of stdout")
        if csv:
            p.add_argument("--csv", action="store_true", help="CSV table instead of JSON")

    p = sub.add_parser("info", help="matrix structure and, for small codes, weight spectrum")
    common(p, csv=False)
    p.add_argument("--force", action="store_true", help="enumerate codewords up to k=28")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("spectrum", help="enumerate cone generators and their pseudo-weights")
    common(p)
    p.add_argument("--resolution", type=float, default=0.1, help="histogram bin width (default 0.1)")
    p.add_argument("--generators", metavar="PATH", help="also dump generators as exact p/q rows")
    p.add_argument("--force", action="store_true", help="ignore the n <= 20 enumeration guard")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("bounds", help="lower and upper bounds on the minimum pseudo-weight")
    common(p)
    p.add_argument("--order", type=int, choices=(1, 2), default=2)
    p.add_argument("--upper", action="store_true", help="also run the local-search upper bound")
    p.add_argument("--restarts", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_threads, default=None, help="default: $PSEUDOCONE_THREADS or all cores")
    p.add_argument("--timings", action="store_true", help="include per-stage wall-clock times")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("decode", help="LP-decode one AWGN frame (or a given LLR vector)")
    common(p, csv=False)
    p.add_argument("--sigma", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--codeword", help="transmitted codeword bits (default all zeros)")
    p.add_argument("--llr", help="decode this LLR vector instead of simulating a channel")
    p.add_argument("--force", action="store_true", help="ML cross-check up to k=28")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("simulate", help="LP vs ML frame error rates over the AWGN channel")
    common(p)
    p.add_argument("--sigma", type=float, nargs="+", required=True)
    p.add_argument("--frames", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_threads, default=None)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if getattr(args, "frames", 1) < 1:
        parser.error("--frames must be >= 1")
    try:
        return args.func(args)
    except GuardExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
