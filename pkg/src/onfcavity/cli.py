"""Command-line entry point: ``onfcavity <subcommand> ...``.

Exit status is 0 on success and 2 on any input error, with a diagnostic on
stderr naming the file (and line, where known).
"""

from __future__ import annotations

import argparse
import logging
import sys

from .cavity import DEFAULT_CRITICAL_TOLERANCE
from .errors import CavityError
from .fitting import INSTRUMENT_RESOLUTION, fit_kappa_sc, fit_lorentzian_dip, locate_dip
from .files import (load_design, load_points, load_spectrum, read_json, write_json,
                    write_rows, write_spectrum)
from .grating import simulate_spectrum
from .report import analysis_document, coupling_document, fit_document, value_of
from .sweep import sweep_input_slats, sweep_output_slats, tuning_scan

log = logging.getLogger("onfcavity")


def _positions(text):
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="onfcavity", description=__doc__.splitlines()[0])
    stamp_help = "omit the timestamp from report provenance blocks"
    parser.add_argument("--no-timestamp", action="store_true", help=stamp_help)
    # also accepted after the subcommand; SUPPRESS keeps an absent flag from
    # overriding one given before it
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--no-timestamp", action="store_true", default=argparse.SUPPRESS,
                        help=stamp_help)
    sub = parser.add_subparsers(dest="command", required=True)
    _add = sub.add_parser

    def add_parser(name, **kwargs):
        return _add(name, parents=[common], **kwargs)

    sub.add_parser = add_parser

    p = sub.add_parser("simulate", help="design file -> reflection spectrum CSV")
    p.add_argument("--design", required=True)
    p.add_argument("--pol", choices=("x", "y"), default="x")
    p.add_argument("--min", type=float, default=600.0, help="nm")
    p.add_argument("--max", type=float, default=700.0, help="nm")
    p.add_argument("--points", type=int, default=4001)
    p.add_argument("--position", type=float, default=0.0, help="tuning position, um")
    p.add_argument("--out", required=True)

    p = sub.add_parser("fit", help="spectrum CSV -> Lorentzian dip fit report")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"),
                   help="search window, nm (default: detected stop band)")
    p.add_argument("--instrument-resolution", action="store_true",
                   help=f"convolve the model with a {INSTRUMENT_RESOLUTION} nm boxcar")
    p.add_argument("--resolution", type=float, help="boxcar width, nm (implies convolution)")
    p.add_argument("--max-iterations", type=int, default=200)

    p = sub.add_parser("coupling", help="(kappa, R0) table -> loss-rate fit")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--branch", choices=("over", "under"), default="over",
                   help="root preferred when two loss rates fit equally well")
    p.add_argument("--tolerance", type=float, default=DEFAULT_CRITICAL_TOLERANCE)

    p = sub.add_parser("sweep", help="design + slat-count range -> row table")
    p.add_argument("--design", required=True)
    p.add_argument("--vary", choices=("in", "out"), default="in")
    p.add_argument("--start", type=int)
    p.add_argument("--stop", type=int)
    p.add_argument("--step", type=int, default=10)
    p.add_argument("--pol", choices=("x", "y"), default="x")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("tune", help="design + mounting positions -> row table")
    p.add_argument("--design", required=True)
    p.add_argument("--positions", type=_positions, required=True,
                   help="comma-separated positions along the grating, um")
    p.add_argument("--pol", choices=("x", "y"), default="x")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="loss rate + length (+ fits) -> figures-of-merit report")
    p.add_argument("--kappa-sc", type=float, help="GHz (default: from --coupling)")
    p.add_argument("--kappa-sc-uncertainty", type=float, help="GHz")
    p.add_argument("--lambda0", type=float, help="nm (default: from --fit)")
    p.add_argument("--length", type=float, required=True, help="effective cavity length, um")
    p.add_argument("--fit", help="fit report JSON from the 'fit' subcommand")
    p.add_argument("--coupling", help="coupling report JSON from the 'coupling' subcommand")
    p.add_argument("--mode", default="x", help="label for the mode, e.g. x or y")
    p.add_argument("--out", required=True)
    return parser


def _simulate(args):
    design = load_design(args.design)
    spectrum = simulate_spectrum(design, args.pol, args.min, args.max, args.points,
                                 args.position)
    write_spectrum(spectrum, args.out)


def _fit(args):
    spectrum = load_spectrum(args.input)
    guess = locate_dip(spectrum, args.window)
    resolution = args.resolution
    if resolution is None and args.instrument_resolution:
        resolution = INSTRUMENT_RESOLUTION
    band = tuple(args.window) if args.window else None
    fit = fit_lorentzian_dip(spectrum, guess, max_iterations=args.max_iterations,
                             resolution=resolution, band=band)
    write_json(fit_document(fit, [args.input], not args.no_timestamp), args.out)


def _coupling(args):
    points, weights = load_points(args.input)
    result = fit_kappa_sc(points, weights, branch=args.branch, tolerance=args.tolerance)
    write_json(coupling_document(result, [args.input], not args.no_timestamp), args.out)


def _sweep(args):
    design = load_design(args.design)
    if args.vary == "in":
        start = 70 if args.start is None else args.start
        stop = 240 if args.stop is None else args.stop
        rows = sweep_input_slats(design, start, stop, args.step, args.pol,
                                 workers=args.workers)
    else:
        start = 150 if args.start is None else args.start
        stop = 400 if args.stop is None else args.stop
        rows = sweep_output_slats(design, start, stop, args.step, args.pol,
                                  workers=args.workers)
    write_rows(rows, args.out)


def _tune(args):
    design = load_design(args.design)
    write_rows(tuning_scan(design, args.positions, args.pol, workers=args.workers), args.out)


def _report(args):
    inputs = []
    resonance = None
    lambda0 = args.lambda0
    if args.fit:
        inputs.append(args.fit)
        fit = read_json(args.fit)
        try:
            res = fit["resonance"]
            resonance = tuple(float(value_of(res[k])) for k in ("lambda0", "delta_lambda", "r0"))
        except (KeyError, TypeError, ValueError):
            raise CavityError(f"{args.fit}: not a fit report") from None
        if lambda0 is None:
            lambda0 = resonance[0]
    coupling = None
    kappa_sc, sigma = args.kappa_sc, args.kappa_sc_uncertainty
    if args.coupling:
        inputs.append(args.coupling)
        coupling = read_json(args.coupling)
        try:
            if kappa_sc is None:
                kappa_sc = float(value_of(coupling["kappa_sc"]))
                sigma = value_of(coupling["kappa_sc_uncertainty"])
        except (KeyError, TypeError, ValueError):
            raise CavityError(f"{args.coupling}: not a coupling report") from None
    if kappa_sc is None:
        raise CavityError("report needs --kappa-sc or --coupling")
    if lambda0 is None:
        raise CavityError("report needs --lambda0 or --fit")
    document = analysis_document(kappa_sc, lambda0, args.length, mode=args.mode,
                                 kappa_sc_uncertainty=sigma, resonance=resonance,
                                 coupling=coupling, inputs=inputs,
                                 timestamp=not args.no_timestamp)
    write_json(document, args.out)


COMMANDS = {"simulate": _simulate, "fit": _fit, "coupling": _coupling,
            "sweep": _sweep, "tune": _tune, "report": _report}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args)
    except (CavityError, OSError) as exc:
        print(f"onfcavity {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
