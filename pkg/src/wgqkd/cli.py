"""Command-line entry point.

    wgqkd source-stats --config scen.cfg [--out stats.csv]
    wgqkd sweep        --config scen.cfg [--out rates.csv]
    wgqkd max-distance --config scen.cfg
    wgqkd estimate     --config scen.cfg          (uses measurement.path)
    wgqkd reproduce fig2 [--config overrides.cfg] [--out fig2.csv]
    wgqkd rerun table.csv [--out copy.csv]        (re-run from a CSV header)

A verb overrides ``run.mode`` in the config.  When a run yields several
tables, the first is written to ``--out`` and the others next to it as
``<table name>.csv``.  Without ``--out`` tables go to stdout.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import load_config, parse_text, config_from_entries
from .errors import ConfigParseError, WgqkdError
from .runner import config_from_csv, figure_config, run_scenario, trace_rows

log = logging.getLogger("wgqkd")

VERBS = ("source-stats", "sweep", "max-distance", "estimate")


def _write(tables, out):
    if out is None:
        for t in tables:
            sys.stdout.write(t.to_csv())
        return
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    for i, t in enumerate(tables):
        path = out if i == 0 else out.with_name(f"{t.name}{out.suffix or '.csv'}")
        t.write(path)
        log.info("wrote %s", path)


def build_parser():
    ap = argparse.ArgumentParser(prog="wgqkd", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--verbose", "-v", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb in VERBS:
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True)
        p.add_argument("--out")
        p.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS)
        p.add_argument("--trace-dir", help="dump per-step hierarchy traces of tlss sources")
    p = sub.add_parser("reproduce")
    p.add_argument("figure", choices=("fig1", "fig2", "fig3a", "fig3b"))
    p.add_argument("--config", help="config file whose entries override the figure defaults")
    p.add_argument("--out")
    p.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS)
    p = sub.add_parser("rerun")
    p.add_argument("csv")
    p.add_argument("--out")
    p.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.verb == "reproduce":
            overrides = Path(args.config).read_text() if args.config else ""
            cfg = figure_config(args.figure, overrides)
            tables = run_scenario(cfg)
        elif args.verb == "rerun":
            cfg, name = config_from_csv(args.csv)
            tables = [t for t in run_scenario(cfg) if t.name == name]
        else:
            cfg = load_config(args.config)
            if cfg.mode != args.verb:
                entries = parse_text(Path(args.config).read_text())
                entries["run.mode"] = (args.verb, None)
                cfg = config_from_entries(entries, Path(args.config).parent)
            tables = run_scenario(cfg)
            if args.trace_dir:
                Path(args.trace_dir).mkdir(parents=True, exist_ok=True)
                for label, t in trace_rows(cfg).items():
                    t.write(Path(args.trace_dir) / f"trace_{label}.csv")
        _write(tables, args.out)
    except ConfigParseError as exc:
        print(f"error: ConfigParseError: {exc}", file=sys.stderr)
        return 2
    except (WgqkdError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
