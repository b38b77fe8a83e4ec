"""Command line entry point: ``riskprice list`` and ``riskprice run <config>``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, RiskPriceError
from .experiments import list_experiments, load_config, run_experiment
from .plotting import render_figure


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="riskprice", description="Risk-based pricing experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list the available experiments")
    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("config", type=Path)
    run.add_argument("--out", type=Path, default=None, help="output directory (overrides [output] dir)")
    run.add_argument("--workers", type=int, default=None, help="engine worker threads (overrides [engine] workers)")
    run.add_argument("--no-figures", action="store_true", help="write the plot script but do not render it")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list":
        sys.stdout.write(list_experiments())
        return 0
    try:
        cfg = load_config(args.config)
        if args.workers is not None:
            cfg = replace(cfg, engine=replace(cfg.engine, workers=args.workers))
        result = run_experiment(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (RiskPriceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = result.csv[0].parent
    for path in result.csv:
        print(path)
    script = out / f"{cfg.name}_plot.py"
    print(script)
    if not args.no_figures:
        try:
            print(render_figure(script))
        except (RuntimeError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
