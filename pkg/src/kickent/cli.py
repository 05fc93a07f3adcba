"""Command line entry point: ``kickent <command> [--preset NAME | --config PATH]``."""
import argparse
import json
import logging
import sys

from . import config as cfgmod
from . import experiments
from .numeric import NumericalError
from .perturbation import FitError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_FIT = 0, 2, 3, 4

log = logging.getLogger("kickent")


def _parser():
    ap = argparse.ArgumentParser(prog="kickent", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in (
        ("entropy", "exact and perturbative linear entropy series"),
        ("rate-sweep", "normalized production rate against k"),
        ("husimi", "Husimi functions and minima of top 1"),
        ("validate-config", "check a configuration and print it normalized"),
    ):
        p = sub.add_parser(name, help=text)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="YAML configuration file")
        src.add_argument("--preset", choices=cfgmod.PRESETS)
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--threads", type=int, help="worker threads for independent runs")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _load(args):
    cfg = cfgmod.load_preset(args.preset) if args.preset else cfgmod.load(args.config)
    if args.threads is not None:
        if args.threads < 1:
            raise cfgmod.ConfigError(["--threads must be >= 1"])
        cfg.threads = args.threads
    if args.out:
        cfg.output_dir = args.out
    return cfg


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        cfg = _load(args)
        if args.command == "validate-config":
            sys.stdout.write(cfg.dump())
            return EXIT_OK
        if args.command == "entropy":
            rec = experiments.run_entropy_experiment(cfg)
            failed = [r for r in rec.results if r["status"] != "ok"]
            _summary(rec)
            if failed and cfg.eps > 0:
                for r in failed:
                    log.error("k=%g ic=%d: %s", r["k"], r["ic"], r.get("error"))
                return EXIT_FIT
        elif args.command == "rate-sweep":
            _summary(experiments.run_rate_sweep(cfg))
        elif args.command == "husimi":
            _summary(experiments.run_husimi_analysis(cfg))
    except cfgmod.ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FitError as exc:
        print(f"fit failure: {exc}", file=sys.stderr)
        return EXIT_FIT
    return EXIT_OK


def _summary(rec):
    keep = ("k", "ic", "case", "status", "Gamma", "Gamma0", "gamma", "ratio", "ratio_predicted",
            "r2", "n_zeros", "n_positive_minima")
    for row in rec.results:
        print(json.dumps({k: row[k] for k in keep if k in row}, default=float))
    print(f"wrote {len(rec.files)} file(s); config {rec.config_hash}")


if __name__ == "__main__":
    sys.exit(main())
