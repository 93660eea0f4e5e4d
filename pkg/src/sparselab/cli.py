"""Command-line entry point ``lab``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import verify
from .dyadic import DyadicLattice
from .rispaces import SpaceSpec, space_norm
from .sample import GridFunction
from .sparse import stopping_family
from .weights import Weight, a1_constant, ainfty_constant, ap_constant

SHORTHAND = {"lebesgue": ("p",), "lorentz": ("p", "q"), "weak": ("p",), "weakLp": ("p",)}


def parse_space(text: str) -> SpaceSpec:
    """A space from JSON text, a JSON file, or shorthand like ``lebesgue:2`` / ``lorentz:2,1``."""
    path = Path(text)
    if path.suffix == ".json" and path.exists():
        return SpaceSpec.from_json(json.loads(path.read_text()))
    if text.lstrip().startswith("{"):
        return SpaceSpec.from_json(json.loads(text))
    kind, _, args = text.partition(":")
    if kind not in SHORTHAND or not args:
        raise argparse.ArgumentTypeError(f"cannot parse space {text!r}")
    vals = [float(a) for a in args.split(",")]
    if len(vals) != len(SHORTHAND[kind]):
        raise argparse.ArgumentTypeError(f"{kind} takes {len(SHORTHAND[kind])} parameter(s)")
    kind = "weakLp" if kind == "weak" else kind
    return SpaceSpec.from_json({"kind": kind, **dict(zip(SHORTHAND[kind], vals))})


def _exponents(items: list[str]) -> list[float]:
    out = []
    for item in items:
        out.extend(float(x) for x in item.split(",") if x)
    return out


def _clean(v: float):
    return v if math.isfinite(v) else "inf"


def cmd_run(args) -> int:
    try:
        status = verify.run_suite(args.config, args.out)
    except (verify.ConfigError, verify.HypothesisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    summary = json.loads((Path(args.out) / "summary.json").read_text())
    for t in summary["targets"]:
        verdict = "PASS" if t["pass"] else "FAIL"
        print(f"{verdict} {t['id']}: max ratio {t['maxRatio']} (budget {t['budget']})")
    return status


def cmd_weights(args) -> int:
    w = Weight.from_function(GridFunction.load(args.weight))
    out = {
        "Ap": {f"{p:g}": _clean(ap_constant(w, p)) for p in _exponents(args.p)},
        "Ainf": _clean(ainfty_constant(w)),
        "A1": _clean(a1_constant(w)),
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def cmd_norm(args) -> int:
    f = GridFunction.load(args.fn)
    w = Weight.from_function(GridFunction.load(args.weight)) if args.weight else None
    print(repr(space_norm(f, args.space, w)))
    return 0


def cmd_sparse(args) -> int:
    fs = [GridFunction.load(p) for p in args.fn]
    shift = tuple(_exponents([args.shift])) if args.shift else ()
    lattice = DyadicLattice(fs[0].n, fs[0].L, shift)
    family = stopping_family(fs, lattice, args.threshold)
    text = family.dumps()
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_calibrate(args) -> int:
    budgets = verify.calibrate(args.out, args.margin)
    print(json.dumps(budgets, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab", description="Dyadic sparse-domination laboratory")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config and write reports")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("weights", help="A_p, A_inf and A_1 constants of a weight")
    p.add_argument("--weight", required=True)
    p.add_argument("--p", nargs="+", default=["2"], help="exponents, space or comma separated")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("norm", help="norm of a function in X or X(w)")
    p.add_argument("--space", required=True, type=parse_space)
    p.add_argument("--fn", required=True)
    p.add_argument("--weight")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("sparse", help="stopping-time sparse family of a function tuple")
    p.add_argument("--fn", required=True, nargs="+")
    p.add_argument("--threshold", type=float, default=2.0)
    p.add_argument("--shift", help="lattice shift, comma separated")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sparse)

    p = sub.add_parser("calibrate", help="re-freeze the acceptance budgets")
    p.add_argument("--out", help="budget file (default: packaged fixture)")
    p.add_argument("--margin", type=float, default=verify.CALIBRATION_MARGIN)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
