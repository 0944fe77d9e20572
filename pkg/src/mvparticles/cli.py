"""Command-line front end: ``mvparticles {simulate,converge,blowup,density,theory}``.

Exit codes: 0 success, 2 configuration error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import experiments
from .config import ConfigError, load_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

log = logging.getLogger("mvparticles")


def _common(p: argparse.ArgumentParser, config_required=True):
    p.add_argument("--config", required=config_required, metavar="PATH", help="TOML experiment config")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--workers", type=int, default=1, help="threads; never changes the numbers")
    p.add_argument("--out", metavar="DIR", help="override the output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mvparticles", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("simulate", "one run: loss.csv, loss_rate.csv, summary.json"),
        ("converge", "paired n/2n errors at the evaluation time and fitted order"),
        ("blowup", "paired d1/d2/d3 metrics across meshes and fitted orders"),
        ("density", "KDE of surviving positive positions at the evaluation time"),
    ]:
        _common(sub.add_parser(name, help=help_))
    th = sub.add_parser("theory", help="T* and the extension condition as JSON")
    th.add_argument("--alpha", type=float, required=True)
    th.add_argument("--beta", type=float, required=True)
    th.add_argument("--B", dest="B", type=float, required=True)
    th.add_argument("--B-hat", dest="B_hat", type=float, required=True)
    th.add_argument("--out", metavar="DIR", help="also write theory.json here")
    return parser


_RUNNERS = {
    "simulate": experiments.run_simulate,
    "converge": experiments.run_converge,
    "blowup": experiments.run_blowup,
    "density": experiments.run_density,
}


def _theory(args) -> int:
    from pathlib import Path

    try:
        res = experiments.run_theory(args.alpha, args.beta, args.B, args.B_hat)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = json.dumps(res, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "theory.json").write_text(text, encoding="utf-8", newline="\n")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "theory":
        try:
            return _theory(args)
        except (ArithmeticError, FloatingPointError) as exc:
            print(f"numeric error: {exc}", file=sys.stderr)
            return EXIT_NUMERIC

    try:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = load_config(args.config).with_overrides(seed=args.seed, outputs=args.out)
        if cfg.outputs.exists() and not cfg.outputs.is_dir():
            raise ConfigError(f"outputs: {cfg.outputs} is not a directory")
        cfg.outputs.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: outputs: cannot create {args.out or 'output directory'}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        _RUNNERS[args.command](cfg, workers=args.workers)
    except experiments.NoSurvivorsError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: outputs: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("wrote outputs to %s", cfg.outputs)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
