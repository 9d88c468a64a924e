"""Command-line entry point.

Exit codes: 0 success, 2 invalid configuration or I/O, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import warnings

from . import harness
from .errors import ConfigError, NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

VERBS = {
    "spectrum": "Omega4 scan of probe absorption, Stokes gain and dispersion",
    "propagate": "field amplitudes, transmissions and photon numbers along Z",
    "switching": "probe transmission at fixed Z versus Omega4, G1 or G3",
    "velocity": "per-velocity-class profiles of populations or susceptibilities",
    "manley-rowe": "photon-number changes and Manley-Rowe defect with sigma_j = 0",
    "validate": "check a configuration and echo the resolved values",
}


def _common(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="INI configuration file")
    src.add_argument("--preset", help="named preset (see 'doublelambda presets')")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--nodes", type=int, help="override the number of velocity nodes")
    p.add_argument("--step", type=float, help="override the propagation step in Z")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="doublelambda", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, help_ in VERBS.items():
        p = sub.add_parser(verb, help=help_, description=help_)
        _common(p)
        if verb in ("spectrum", "switching"):
            p.add_argument("--workers", type=int, default=1, help="worker processes for the scan (output order is kept)")
    sub.add_parser("presets", help="list named presets")
    return parser


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verb == "presets":
        print("\n".join(harness.preset_names()))
        return EXIT_OK
    try:
        if args.verb == "validate":
            rep = harness.validate_config(args.config, args.preset)
            print("\n".join(rep.lines()))
            return EXIT_OK if rep.ok else EXIT_CONFIG
        cfg = harness.load_config(args.config, args.preset, nodes=args.nodes, step=args.step)
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            if args.verb == "spectrum":
                text = harness.run_spectrum(cfg, args.out, workers=args.workers)
            elif args.verb == "propagate":
                text = harness.run_propagation(cfg, args.out)
            elif args.verb == "switching":
                text = harness.run_switching(cfg, args.out, workers=args.workers)
            elif args.verb == "velocity":
                text = harness.run_velocity(cfg, args.out)
            else:
                text = harness.run_manley_rowe(cfg, args.out)
        _emit(text, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
