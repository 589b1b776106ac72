"""Command-line front end.

Exit status: 0 on success, 1 when an analysis fails, 2 on usage errors,
unreadable files and malformed or invalid map specs.  Primary outputs go to
``--out`` (or stdout); diagnostics go to stderr only.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import fixtures
from .connections import (DEFAULT_DEPTH, DEFAULT_TOL, breakpoint_mass, breakpoint_mass_csv,
                          check_no_connections)
from .core import evaluate, validate_map
from .errors import MapSpecSyntaxError, MapValidationError, PcmapError
from .mapspec import parse_map_spec
from .measure import (TestFunction, cdf_grid_csv, cdf_many, choose_base_point, convergence_diag,
                      empirical_measure, invariance_bound, invariance_residual, max_local_mass,
                      samples_csv)
from .orbits import detect_cycle, find_periodic_affine, iterate_orbit, itinerary_word, orbit_csv
from .scalar import DEFAULT_BIT_BUDGET, format_scalar
from .semiconj import build_h, conjugacy_defect, extract_iet, isometry_defect
from .sweep import SweepConfig, run_sweep

log = logging.getLogger("pcmap")


class UsageError(Exception):
    pass


def _read_map_text(path: str) -> str:
    p = Path(path)
    if p.is_file():
        return p.read_text(encoding="utf-8")
    stem = p.stem if p.suffix == ".map" else p.name
    if stem in fixtures.FIXTURES and (p.parent.name in ("", "fixtures") or str(p.parent) == "."):
        return fixtures.fixture_text(stem)
    raise UsageError(f"map file not found: {path}")


def _load(path: str, validate: bool = True):
    text = _read_map_text(path)
    try:
        return parse_map_spec(text, validate=validate)
    except MapSpecSyntaxError as exc:
        raise UsageError(f"{path}: {exc}") from None
    except MapValidationError as exc:
        raise UsageError(f"{path}: invalid map: {exc}") from None


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _num(m, text, name):
    try:
        return m.scalar(text)
    except ValueError:
        raise UsageError(f"--{name}: not a number: {text!r}") from None


def _schedule(text):
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"--schedule: expected comma-separated counts, got {text!r}") from None


def cmd_validate(args):
    m = _load(args.map, validate=False)
    report = validate_map(m)
    _emit(_json({"valid": report.ok, "violations": report.violations, "warnings": report.warnings}), args.out)
    return 0 if report.ok else 1


def cmd_eval(args):
    m = _load(args.map)
    x = _num(m, args.x, "x")
    _emit(format_scalar(evaluate(m, x)) + "\n", args.out)
    return 0


def cmd_orbit(args):
    m = _load(args.map)
    orbit = iterate_orbit(m, _num(m, args.p, "p"), args.n, args.bit_budget)
    if args.format == "json":
        _emit(_json({"points": [format_scalar(x) for x in orbit.points],
                     "itinerary": itinerary_word(orbit)}), args.out)
    else:
        _emit(orbit_csv(orbit), args.out)
    return 0


def cmd_periodic(args):
    m = _load(args.map)
    if args.p is not None:
        rec = detect_cycle(m, _num(m, args.p, "p"), args.n or 10_000, _num(m, args.tol, "tol"),
                           args.bit_budget)
        recs = [] if rec is None else [rec]
    else:
        recs = find_periodic_affine(m, args.max_period)
    _emit(_json([{"point": format_scalar(r.point), "period": r.period, "certified": r.certified}
                 for r in recs]), args.out)
    return 0


def cmd_connections(args):
    m = _load(args.map)
    report = check_no_connections(m, args.depth, _num(m, args.tol, "tol"),
                                  include_endpoints=not args.interior_only, bit_budget=args.bit_budget)
    if args.format == "csv":
        rows = ["source,step,hit,distance"]
        rows += [f"{w.source},{w.step},x_{w.hit},{format_scalar(w.distance)}" for w in report.witnesses]
        _emit("\n".join(rows) + "\n", args.out)
    else:
        _emit(report.to_json(), args.out)
    log.info("verdict %s", report.verdict)
    return 0


def cmd_mass(args):
    m = _load(args.map)
    if args.radius is None:
        raise UsageError("mass: --radius is required")
    masses = breakpoint_mass(m, _num(m, args.p, "p"), args.n, _num(m, args.radius, "radius"),
                             args.bit_budget)
    if args.format == "json":
        _emit(_json([{"breakpoint": format_scalar(x), "mass": format_scalar(v)} for x, v in masses]), args.out)
    else:
        _emit(breakpoint_mass_csv(masses), args.out)
    return 0


def _base_point(m, args):
    return choose_base_point(m, _num(m, args.p, "p"), args.max_skip, args.depth,
                             _num(m, args.tol, "tol"), return_skip=True, bit_budget=args.bit_budget)


def cmd_measure(args):
    m = _load(args.map)
    p, skip = _base_point(m, args)
    mu = empirical_measure(m, p, args.n, args.bit_budget)
    summary = {"base_point": format_scalar(p), "skip": skip, "n": args.n}
    if args.delta is not None:
        summary["max_local_mass"] = format_scalar(max_local_mass(mu, _num(m, args.delta, "delta")))
    grid = [j / args.grid for j in range(args.grid + 1)]
    summary["sup_cdf_minus_identity"] = float(max(abs(c - x) for x, c in zip(grid, cdf_many(mu, grid))))
    if args.schedule:
        diag = convergence_diag(m, p, _schedule(args.schedule), args.bit_budget)
        summary["convergence"] = [{"n": n, "w1": format_scalar(w)} for n, w in diag]
    if args.cdf_out:
        _emit(cdf_grid_csv(mu, args.grid), args.cdf_out)
    if args.samples_out:
        _emit(samples_csv(mu), args.samples_out)
    _emit(_json(summary), args.out)
    return 0


def cmd_invariance(args):
    m = _load(args.map)
    p, skip = _base_point(m, args)
    mu = empirical_measure(m, p, args.n, args.bit_budget)
    phi = TestFunction.polynomial([v.strip() for v in args.phi.split(",")], m.backend)
    residual = invariance_residual(m, mu, phi, args.bit_budget)
    _emit(_json({"base_point": format_scalar(p), "skip": skip, "n": args.n,
                 "residual": format_scalar(residual),
                 "bound_2M_over_n": format_scalar(invariance_bound(phi, args.n))}), args.out)
    return 0


def cmd_conjugacy(args):
    m = _load(args.map)
    p, skip = _base_point(m, args)
    mu = empirical_measure(m, p, args.n, args.bit_budget)
    h = build_h(mu, interpolate=True)
    iet = extract_iet(m, h)
    defect = conjugacy_defect(m, h, iet, args.samples)
    iso = isometry_defect(m, h, args.pairs, seed=args.seed)
    out = {"base_point": format_scalar(p), "skip": skip, "n": args.n, "iet": iet.to_dict(),
           "conjugacy_defect": format_scalar(defect.value), "flags": defect.flags,
           "isometry_defect": [format_scalar(v) for v in iso]}
    if args.h_out:
        _emit(h.to_csv(), args.h_out)
    _emit(_json(out), args.out)
    return 0


def cmd_sweep(args):
    m = _load(args.map)
    config = SweepConfig(m.branches, samples=args.n or 1000, depth=args.depth, tol=float(args.tol),
                         seed=args.seed, workers=args.workers)
    result = run_sweep(config)
    if args.format == "json":
        _emit(result.to_json(), args.out)
    else:
        _emit(result.to_csv(), args.out)
        sys.stderr.write(result.to_json())
    return 0


def cmd_fixtures(args):
    lines = [f"{name}\t{desc}" for name, desc in fixtures.list_fixtures()]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcmap", description="Analyse piecewise continuous interval maps.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, map_arg=True):
        sp = sub.add_parser(name, help=help_)
        if map_arg:
            sp.add_argument("map", help="map-spec file (or a bundled fixture such as fixtures/f1.map)")
        sp.add_argument("--out", help="write the primary output here instead of stdout")
        sp.add_argument("--bit-budget", type=int, default=DEFAULT_BIT_BUDGET,
                        help="max denominator bits of an exact iterate")
        sp.set_defaults(func=func)
        return sp

    def base_opts(sp, n_default):
        sp.add_argument("--p", default="0", help="starting point q (default 0)")
        sp.add_argument("--n", type=int, default=n_default, help="orbit length")
        sp.add_argument("--depth", type=int, default=DEFAULT_DEPTH, help="base-point check depth")
        sp.add_argument("--tol", default=repr(DEFAULT_TOL), help="float distance tolerance")
        sp.add_argument("--max-skip", type=int, default=16)

    add("validate", cmd_validate, "check a map and report violations")
    sp = add("eval", cmd_eval, "evaluate f at a point")
    sp.add_argument("--x", required=True)
    sp = add("orbit", cmd_orbit, "forward orbit with itinerary")
    sp.add_argument("--p", default="0")
    sp.add_argument("--n", type=int, default=10)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp = add("periodic", cmd_periodic, "periodic orbits (exact affine solver, or cycle detection with --p)")
    sp.add_argument("--max-period", type=int, default=10)
    sp.add_argument("--p", default=None, help="run cycle detection from this point instead")
    sp.add_argument("--n", type=int, default=None, help="max iterations for cycle detection")
    sp.add_argument("--tol", default="0")
    sp = add("connections", cmd_connections, "check the no-connections condition")
    sp.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    sp.add_argument("--tol", default=repr(DEFAULT_TOL))
    sp.add_argument("--interior-only", action="store_true", help="exclude 0 and 1 from the target set")
    sp.add_argument("--format", choices=("csv", "json"), default="json")
    sp = add("mass", cmd_mass, "orbit mass near each breakpoint")
    sp.add_argument("--p", default="0")
    sp.add_argument("--n", type=int, default=10_000)
    sp.add_argument("--radius", default=None)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp = add("measure", cmd_measure, "empirical invariant measure and convergence diagnostics")
    base_opts(sp, 10_000)
    sp.add_argument("--schedule", help="comma-separated orbit lengths for the W1 Cauchy diagnostic")
    sp.add_argument("--delta", help="radius for the max local mass (atom) diagnostic")
    sp.add_argument("--grid", type=int, default=1000, help="CDF grid resolution")
    sp.add_argument("--cdf-out", help="write the CDF on the grid as CSV")
    sp.add_argument("--samples-out", help="write the sorted samples as CSV")
    sp = add("invariance", cmd_invariance, "invariance residual for a polynomial test function")
    base_opts(sp, 10_000)
    sp.add_argument("--phi", default="0,1", help="polynomial coefficients c0,c1,... (ascending)")
    sp = add("conjugacy", cmd_conjugacy, "extract the IET and measure the conjugacy defects")
    base_opts(sp, 100_000)
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--pairs", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--h-out", help="write the factor h as CSV")
    sp = add("sweep", cmd_sweep, "Monte Carlo sweep over partitions for the map's branch family")
    sp.add_argument("--n", type=int, default=1000, help="number of sampled partitions")
    sp.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    sp.add_argument("--tol", default=repr(DEFAULT_TOL))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    add("fixtures", cmd_fixtures, "list bundled fixtures", map_arg=False)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"pcmap: error: {exc}\n")
        return 2
    except (PcmapError, ValueError, ArithmeticError) as exc:
        sys.stderr.write(f"pcmap: analysis failed: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"pcmap: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
