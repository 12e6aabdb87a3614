"""Command-line front end: ``errormodels generate|train|evaluate|report``."""

import argparse
import logging
import os
import sys

from .config import load_config
from .exceptions import (CompatibilityError, ConfigurationError, ErrorModelsError,
                         SolverDivergenceError, TrainingFailureError)
from .regress.families import ALL_FAMILIES

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_TRAINING, EXIT_COMPAT = 0, 2, 3, 4, 5
LOG_ENV = "ERRORMODELS_LOG_LEVEL"

log = logging.getLogger("errormodels")


def _parser():
    p = argparse.ArgumentParser(prog="errormodels",
                                description="Surrogate error datasets and error models.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="run a campaign and write datasets")
    g.add_argument("--config", required=True)
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--seed", type=int, help="override the master seed")
    g.add_argument("--threads", type=int, help="worker threads (0 = auto)")

    t = sub.add_parser("train", help="grid-search a regression family")
    t.add_argument("--data", required=True, help="generated data directory")
    t.add_argument("--family", required=True, help=f"one of {', '.join(ALL_FAMILIES)}")
    t.add_argument("--kind", required=True, help="feature kind")
    t.add_argument("--response", choices=("state-norm", "qoi"))
    t.add_argument("--config", required=True)
    t.add_argument("--out", required=True, help="checkpoint path (JSON)")
    t.add_argument("--seed", type=int)
    t.add_argument("--threads", type=int)

    e = sub.add_parser("evaluate", help="test-set metrics for a checkpoint")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--out", required=True, help="output directory")

    r = sub.add_parser("report", help="merge evaluation outputs")
    r.add_argument("evaluations", nargs="*", help="evaluation directories or metrics files")
    r.add_argument("--out", required=True, help="report path stem (.csv and .json written)")
    return p


def _load(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "threads", None) is not None:
        if args.threads < 0:
            raise ConfigurationError("--threads must be nonnegative")
        cfg.threads = args.threads
    return cfg


def run(argv=None):
    """Execute one subcommand and return its exit status."""
    logging.basicConfig(level=os.environ.get(LOG_ENV, "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    from . import pipeline
    try:
        if args.command == "generate":
            cfg = _load(args)
            pipeline.generate(cfg, args.out, cfg.threads)
        elif args.command == "train":
            cfg = _load(args)
            pipeline.train(cfg, args.data, args.family, args.kind, args.response, args.out)
        elif args.command == "evaluate":
            pipeline.evaluate(args.model, args.data, args.out)
        else:
            pipeline.report(args.evaluations, args.out)
    except SolverDivergenceError as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except TrainingFailureError as exc:
        print(f"error: training failure: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except CompatibilityError as exc:
        print(f"error: incompatible inputs: {exc}", file=sys.stderr)
        return EXIT_COMPAT
    except (ErrorModelsError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
