"""Command line interface.

Exit codes: 0 success, 1 malformed input file, 2 hypotheses refused,
3 numerical failure, 4 validator failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from . import geometry as geo
from .arcs import BRANCHES, arc_shooting_vars, make_arc
from .degree import build_linearization, dirichlet_spectrum, local_index
from .field import FieldError, check_pinching, estimate_bounds, parse_expr
from .report import (
    EXIT_INPUT,
    EXIT_OK,
    EXIT_REFUSED,
    EXIT_VALIDATOR,
    RunConfig,
    RunError,
    dumps,
    run,
    validate_file,
)


def _floats(n: int):
    def parse(text: str):
        try:
            vals = tuple(float(v) for v in text.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers") from None
        if len(vals) != n:
            raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers")
        return vals

    return parse


def _common(p: argparse.ArgumentParser, k_required: bool = False) -> None:
    p.add_argument("--config", help="JSON run configuration; flags override its fields")
    p.add_argument("--a", type=float, help="half chord length (endpoints (a,0) and (-a,0))")
    p.add_argument("--k", required=k_required, help="curvature field expression in x, y, t")
    p.add_argument("--box", type=_floats(4), help="bounding box x0,y0,x1,y1")
    p.add_argument("--bounds", type=_floats(2), help="declared inf,sup of k")


def _config(args) -> RunConfig:
    data = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            data = json.load(fh)
    overrides = {
        "a": args.a,
        "k_source": args.k,
        "box": args.box,
        "declared_bounds": args.bounds,
        "n_samples": getattr(args, "n", None),
        "tol": getattr(args, "tol", None),
        "theta0_guess": getattr(args, "theta0_guess", None),
    }
    branch = getattr(args, "branch", None)
    if branch:
        overrides["branches"] = list(BRANCHES) if branch == "both" else [branch]
    data.update({k: v for k, v in overrides.items() if v is not None})
    if getattr(args, "svg", False):
        data["outputs"] = {**data.get("outputs", {}), "svg": True}
    return RunConfig.from_dict(data)


def cmd_solve(args) -> int:
    try:
        config = _config(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    try:
        report = run(config, args.out)
    except RunError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    p = report.pinch
    print(f"bounds: inf k = {p['k_inf']:.10g}, sup k = {p['k_sup']:.10g}; "
          f"pinching ratio {p['ratio']:.10g} ({'holds' if p['holds_pinch'] else 'fails'})")
    for branch, rec in report.records.items():
        d = rec.diagnostics
        failed = [n for n, v in rec.validators.items() if not v["holds"]]
        print(f"{branch:5s}: theta0 = {rec.vars.theta0:.12g}, length = {rec.vars.v:.12g}, "
              f"class = {rec.cls.tag}, index = {rec.index}, shooting index = {rec.shooting_index}, "
              f"GB residual = {d['gauss_bonnet_residual']:.3g}, "
              f"validators: {'all pass' if not failed else 'FAILED ' + ', '.join(failed)}")
    for branch, why in report.skipped.items():
        print(f"{branch:5s}: skipped ({why})")
    if args.out:
        print(f"outputs written to {args.out}")
    return EXIT_OK if report.validators_ok else EXIT_VALIDATOR


def cmd_analytic(args) -> int:
    branches = BRANCHES if args.branch == "both" else (args.branch,)
    out = {}
    try:
        for b in branches:
            arc = make_arc(b, args.a, args.k0)
            v = arc_shooting_vars(arc)
            out[b] = {
                "alpha0": arc.alpha0,
                "omega": arc.omega,
                "center": list(arc.center),
                "radius": arc.radius,
                "length": arc.length,
                "theta0": v.theta0,
                "v": v.v,
            }
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    sys.stdout.write(dumps(out))
    return EXIT_OK


def cmd_spectrum(args) -> int:
    if args.k is None:
        ev = dirichlet_spectrum(n=args.n)[: args.count]
        sys.stdout.write(dumps({"operator": "-D^2", "n": args.n, "eigenvalues": list(ev)}))
        return EXIT_OK
    try:
        config = _config(args)
        report = run(RunConfig.from_dict({**config.to_dict(), "outputs": {"json": False, "csv": False}}))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except RunError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    f = parse_expr(config.k_source)
    out = {}
    for branch, rec in report.records.items():
        op = build_linearization(f, rec, args.n)
        ev = dirichlet_spectrum(op)[: args.count]
        out[branch] = {
            "index": local_index(f, rec, args.n),
            "eigenvalues": [{"re": z.real, "im": z.imag} for z in ev],
        }
    sys.stdout.write(dumps(out))
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        config = _config(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    if args.k is None and not args.config:
        config.k_source = ""
    try:
        summary = validate_file(args.curve, config)
    except geo.CurveFileError as exc:
        print(f"error: malformed curve file {args.curve}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, FieldError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    sys.stdout.write(dumps(summary))
    return EXIT_OK if summary["ok"] else EXIT_VALIDATOR


def cmd_pinch(args) -> int:
    try:
        config = _config(args)
        f = parse_expr(config.k_source)
        b = estimate_bounds(f, config.box, config.n_grid, config.declared_bounds)
    except (ValueError, FieldError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    p = check_pinching(b, config.a)
    sys.stdout.write(dumps({
        "k_inf": b.k_inf,
        "k_sup": b.k_sup,
        "provenance": b.provenance,
        "bounds_conflict": b.conflict,
        "holds_basic": p.holds_basic,
        "holds_pinch": p.holds_pinch,
        "ratio": p.ratio,
    }))
    return EXIT_OK if p.holds_basic else EXIT_REFUSED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plateau", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="continue both branches and report")
    _common(p)
    p.add_argument("--branch", choices=("small", "large", "both"))
    p.add_argument("--n", type=int, help="curve samples")
    p.add_argument("--tol", type=float)
    p.add_argument("--out", help="output directory")
    p.add_argument("--svg", action="store_true")
    p.add_argument("--theta0-guess", type=float, help="solve directly from this initial angle")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("analytic", help="constant-curvature arcs")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--k0", type=float, required=True)
    p.add_argument("--branch", choices=("small", "large", "both"), default="both")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("spectrum", help="Dirichlet spectrum of -D^2 or of a solution's linearization")
    _common(p)
    p.add_argument("--branch", choices=("small", "large", "both"))
    p.add_argument("--n", type=int, default=200, help="interior grid points")
    p.add_argument("--count", type=int, default=6)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("validate", help="check a t,x,y,vx,vy curve file")
    p.add_argument("curve")
    _common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("pinch", help="field bounds and the pinching condition")
    _common(p, k_required=True)
    p.set_defaults(func=cmd_pinch)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.func(args)
