"""Command-line entry point: synth, assess, scheme, simulate."""

from __future__ import annotations

import argparse
import io
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .bundle import atomic_write_text, read_bundle, write_bundle
from .errors import CatSchemeError, InputError
from .geo import DEFAULT_R_KM
from .losses import DEFAULT_RC, Policy
from .pipeline import DEFAULT_COVERAGES, DEFAULT_DEDUCTIBLES, fit_bundle, groupings_for, run_scheme, assess
from .reports import read_scheme_outputs, write_scheme_outputs
from .scheme import GENERIC, MODES, SIMPLIFIED
from .simulation import MIN_DRAWS, VIOLATED, report_from_sample, simulate_aggregate_claims, write_reports
from .synthetic import PROFILES, generate_portfolio

log = logging.getLogger("catscheme")

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE = 0, 1, 2


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _probability(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="catscheme", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help="JSON file of default flag values (flags on the command line win)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write a synthetic input bundle")
    s.add_argument("--n", type=_positive_int, default=200, help="number of municipalities")
    s.add_argument("--seed", type=int, default=7, help="generator seed")
    s.add_argument("--profile", choices=PROFILES, default="italy-like")
    s.add_argument("--extent-km", type=float, default=600.0, help="side of the square study area")
    s.add_argument("--noise", type=float, default=0.0, help="log-normal noise on exceedance points")
    s.add_argument("--out-dir", required=True, help="bundle directory to create")

    a = sub.add_parser("assess", help="expected losses per municipality")
    a.add_argument("--in-dir", required=True)
    a.add_argument("--peril", choices=("seismic", "flood"), default="seismic")
    a.add_argument("--rc", type=float, default=DEFAULT_RC, help="reconstruction cost, euro per m2")
    a.add_argument("--out", required=True, help="output directory")

    c = sub.add_parser("scheme", help="price policies and solve the insurance scheme")
    c.add_argument("--in-dir", required=True)
    c.add_argument("--peril", choices=("seismic", "flood", "multi"), default="seismic")
    c.add_argument("--deductible", type=float, nargs="+", default=list(DEFAULT_DEDUCTIBLES))
    c.add_argument("--max-coverage", type=float, nargs="+", default=list(DEFAULT_COVERAGES))
    c.add_argument("--cap-convention", choices=("full", "net"), default="full",
                   help="full: pay E once loss reaches E+D; net: pay E-D once loss reaches E")
    c.add_argument("--eps1", type=_probability, default=0.01, help="insolvency probability target")
    c.add_argument("--eps2", type=_probability, default=0.02, help="fund-refill probability target")
    c.add_argument("--r-km", type=float, default=DEFAULT_R_KM, help="independence distance")
    c.add_argument("--samplings", type=_positive_int, default=100)
    c.add_argument("--seed", type=int, default=7, help="base seed for grouping samples")
    c.add_argument("--mode", choices=MODES, default=SIMPLIFIED)
    c.add_argument("--h", type=float, default=None, help="fixed solver variable for generic-mgf mode")
    c.add_argument("--rc", type=float, default=DEFAULT_RC)
    c.add_argument("--out", required=True, help="output directory")

    m = sub.add_parser("simulate", help="Monte-Carlo check of the bounds stored by `scheme`")
    m.add_argument("--in-dir", required=True)
    m.add_argument("--scheme-out", required=True)
    m.add_argument("--draws", type=int, default=100_000)
    m.add_argument("--seed", type=int, default=11)
    return p


def _parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
        if not isinstance(cfg, dict):
            parser.error("config file must hold a JSON object")
        section = dict(cfg.get(args.command, {}))
        section.update({k: v for k, v in cfg.items() if not isinstance(v, dict)})
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(section) - known)
        if unknown:
            parser.error(f"unknown config keys for {args.command}: {', '.join(unknown)}")
        sub.set_defaults(**section)
        args = parser.parse_args(argv)
    return parser, args


def _manifest(args, extra=None) -> dict:
    flags = {k: v for k, v in vars(args).items() if k not in ("verbose",)}
    out = {"tool": "catscheme", "version": __version__, "python": platform.python_version(),
           "numpy": np.__version__, "scipy": scipy.__version__, "flags": flags}
    out.update(extra or {})
    return out


def cmd_synth(args):
    bundle = generate_portfolio(args.n, args.extent_km, args.seed, args.profile, args.noise)
    write_bundle(bundle, args.out_dir)
    atomic_write_text(Path(args.out_dir) / "manifest.json",
                      json.dumps(_manifest(args), indent=1, sort_keys=True) + "\n")
    print(f"wrote {len(bundle.municipalities)} municipalities to {args.out_dir}")
    return EXIT_OK


def _load(in_dir, peril, rc):
    bundle = read_bundle(in_dir)
    if peril in ("flood", "multi") and not bundle.has_flood:
        raise InputError(f"peril {peril} needs flood inputs; missing: {', '.join(bundle.missing_flood_parts())}")
    fitted = fit_bundle(bundle, rc=rc)
    if fitted.dropped:
        log.warning("dropped %d municipalities without hazard data", len(fitted.dropped))
    return fitted


def cmd_assess(args):
    fitted = _load(args.in_dir, args.peril, args.rc)
    surface = assess(fitted, args.peril)
    out = Path(args.out)
    buf = io.StringIO()
    surface.write_csv(buf)
    atomic_write_text(out / f"losses_{args.peril}.csv", buf.getvalue())
    summary = surface.summary()
    summary["dropped_municipalities"] = fitted.dropped
    text = "\n".join([
        f"peril: {args.peril}",
        f"maximum expected loss per m2: {summary['max_loss_per_sqm']:.6f} "
        f"({summary['max_loss_per_sqm_municipality']}, {summary['max_loss_per_sqm_typology']})",
        f"maximum municipal expected loss: {summary['max_municipal_loss']:.2f} "
        f"({summary['max_municipal_loss_municipality']})",
        f"national expected loss: {summary['national_total']:.2f}",
    ]) + "\n"
    atomic_write_text(out / f"summary_{args.peril}.txt", text)
    atomic_write_text(out / f"summary_{args.peril}.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_scheme(args):
    if args.eps2 < args.eps1:
        raise InputError("eps2 < eps1: insolvency should never be preferred to refilling the fund")
    if args.mode != GENERIC and args.h is not None:
        raise InputError("--h only applies to generic-mgf mode")
    fitted = _load(args.in_dir, args.peril, args.rc)
    groupings = groupings_for(fitted, args.r_km, args.samplings, args.seed)
    runs, cache = [], {}
    for d in args.deductible:
        for e in args.max_coverage:
            pol = Policy(d, e, args.peril, args.cap_convention)
            log.info("solving %s %s", args.peril, pol.label())
            runs.append(run_scheme(fitted, args.peril, pol, groupings, args.eps1, args.eps2, args.mode, args.h))
    write_scheme_outputs(args.out, runs, groupings, fitted.municipalities, args.eps1, args.eps2,
                         _manifest(args, {"dropped": fitted.dropped,
                                          "grouping_seeds": [g.seed for g in groupings]}))
    sys.stdout.write(Path(args.out, "scheme_report.txt").read_text(encoding="utf-8"))
    return EXIT_OK


def cmd_simulate(args):
    if args.draws < MIN_DRAWS:
        raise InputError(f"--draws must be at least {MIN_DRAWS}")
    bundle = read_bundle(args.in_dir)
    groupings, severities, rows = read_scheme_outputs(args.scheme_out)
    known = {m.id for m in bundle.municipalities}
    reports = []
    samples = {}
    for lineno, r in enumerate(rows, start=2):
        key = (r["peril"], r["policy"])
        if key not in severities:
            raise InputError(f"samplings.csv row {lineno}: no severities for {key}")
        sev = severities[key]
        if not set(sev.ids) <= known:
            raise InputError("scheme output refers to municipalities absent from the input bundle")
        try:
            phi, bound = float(r["phi"]), float(r["claimed_bound"])
            n_c, e_y, seed = int(r["n_c"]), float(r["e_y"]), int(r["seed"])
        except (KeyError, ValueError):
            raise InputError(f"samplings.csv row {lineno}: malformed") from None
        if seed not in groupings:
            raise InputError(f"samplings.csv row {lineno}: unknown grouping seed {seed}")
        if key not in samples:
            samples[key] = simulate_aggregate_claims(sev, args.draws, args.seed)
        label = f"{r['peril']}:{r['policy']}#{r['sampling']}"
        reports.append(report_from_sample(samples[key], n_c * phi + e_y, bound, args.seed, label))
    buf = io.StringIO()
    write_reports(buf, reports)
    atomic_write_text(Path(args.scheme_out) / "simulation.csv", buf.getvalue())
    bad = [r for r in reports if r.verdict == VIOLATED]
    print(f"{len(reports)} checks, {len(bad)} violated")
    for r in bad[:10]:
        print(f"  {r.label}: empirical {r.empirical_exceedance:.4g} "
              f"(Wilson low {r.wilson_low:.4g}) > bound {r.analytic_bound:.4g}")
    return EXIT_VALIDATION if bad else EXIT_OK


COMMANDS = {"synth": cmd_synth, "assess": cmd_assess, "scheme": cmd_scheme, "simulate": cmd_simulate}


def main(argv=None) -> int:
    parser, args = _parse(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (CatSchemeError, OSError) as exc:
        msg = exc.strerror if isinstance(exc, OSError) and exc.strerror else str(exc)
        where = f" ({exc.filename})" if isinstance(exc, OSError) and exc.filename else ""
        parser.print_usage(sys.stderr)
        print(f"catscheme {args.command}: error: {msg}{where}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
