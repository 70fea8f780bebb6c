"""Command line entry point.

    ustlab <experiment> --config spec.json [--seed N] [--out results.csv] [--threads K]
    ustlab audit --graph edges.txt [--alpha A] [--d-max D] [--theta T]

Exit status: 0 when every property check passes, 2 when one fails, 1 on a
usage or input error.
"""
from __future__ import annotations

import argparse
import json
import sys

from .harness import EXPERIMENTS, ExperimentSpec, run_assumption_audit, run_experiment
from .network import GraphError, read_edgelist


def _parser():
    p = argparse.ArgumentParser(prog="ustlab", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        e = sub.add_parser(name, help=f"run the {name} experiment")
        e.add_argument("--config", required=True, help="JSON file with the experiment spec")
        e.add_argument("--seed", type=int, help="override the root seed")
        e.add_argument("--out", help="CSV output path (default: stdout)")
        e.add_argument("--threads", type=int, help="worker threads for replicas")
    a = sub.add_parser("audit", help="check balance, mixing and escape assumptions of a graph")
    a.add_argument("--graph", required=True, help="edge list: 'n m' header, then 'u v [w]' lines")
    a.add_argument("--alpha", type=float, default=0.1)
    a.add_argument("--d-max", type=float, default=4.0)
    a.add_argument("--theta", type=float, default=10.0)
    a.add_argument("--out", help="CSV output path")
    return p


class _Usage(Exception):
    pass


def _load_spec(args):
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise _Usage(f"cannot read config: {exc}") from exc
    cfg.setdefault("experiment", args.command)
    if cfg["experiment"] != args.command:
        raise _Usage(f"config is for {cfg['experiment']!r}, not {args.command!r}")
    for key in ("seed", "out", "threads"):
        if getattr(args, key) is not None:
            cfg[key] = getattr(args, key)
    try:
        return ExperimentSpec.from_dict(cfg)
    except (TypeError, ValueError) as exc:
        raise _Usage(f"bad config: {exc}") from exc


def _emit(result, out):
    if out:
        result.write_csv(out)
    else:
        sys.stdout.write(result.to_csv())
    for c in result.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  {c.detail}", file=sys.stderr)


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        if args.command == "audit":
            try:
                g = read_edgelist(args.graph)
            except (OSError, ValueError, GraphError) as exc:
                raise _Usage(f"cannot read graph: {exc}") from exc
            report = run_assumption_audit(g, args.alpha, args.d_max, args.theta)
            for line in report.lines():
                print(line, file=sys.stderr)
            result = report.to_result()
            if args.out:
                result.write_csv(args.out)
            return 0 if report.passed else 2
        spec = _load_spec(args)
        result = run_experiment(spec)
        _emit(result, spec.out)
        return 0 if result.passed else 2
    except _Usage as exc:
        print(f"ustlab: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
