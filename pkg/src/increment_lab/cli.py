"""Command-line dispatcher: ``increment-lab <experiment> [--config PATH] [--seed U64] [--out DIR]``."""

from __future__ import annotations

import argparse
import logging
import sys

from .experiments import RUNNERS, default_config, load_config_file, run_experiment
from .increments import ConfigError

log = logging.getLogger("increment_lab")

SUBCOMMANDS = tuple(RUNNERS) + ("all",)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="increment-lab", description=__doc__)
    parser.add_argument("experiment", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="versioned JSON config (defaults apply when omitted)")
    parser.add_argument("--seed", type=int, help="root seed override (unsigned 64-bit)")
    parser.add_argument("--out", default="reports", help="report directory (default: reports)")
    parser.add_argument("--replicas", type=int, help="replica count override")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def resolve_configs(args) -> list:
    file_cfg = load_config_file(args.config) if args.config else {"experiments": {}}
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {args.seed}")
    names = list(RUNNERS) if args.experiment == "all" else [args.experiment]
    sections = file_cfg.get("experiments", {})
    unknown = set(sections) - set(RUNNERS)
    if unknown:
        raise ConfigError(f"{args.config}: unknown experiments {sorted(unknown)}")
    configs = []
    for name in names:
        overrides = dict(sections.get(name, {}))
        if "seed" in file_cfg:
            overrides.setdefault("seed", file_cfg["seed"])
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.replicas is not None:
            overrides["replicas"] = args.replicas
        try:
            configs.append(default_config(name).merged(overrides))
        except TypeError as exc:
            raise ConfigError(f"bad config for {name}: {exc}") from exc
    return configs


def main(argv=None) -> int:
    """Exit status: 0 when every hard verdict passes, 1 on a failed verdict, 2 on usage or config errors."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")
    try:
        configs = resolve_configs(args)
        status = 0
        for cfg in configs:
            log.info("running %s (seed %d)", cfg.experiment, cfg.seed)
            report = run_experiment(cfg)
            paths = report.write(args.out)
            for line in report.summary_lines():
                print(f"{cfg.experiment}: {line}")
            print(f"{cfg.experiment}: {'PASS' if report.passed else 'FAIL'} -> {paths['json']}")
            if not report.passed:
                status = 1
        return status
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
