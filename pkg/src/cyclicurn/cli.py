"""Command line interface.

Subcommands: ``clt``, ``rate``, ``rank``, ``fixpoint``, ``oracle``, ``mean``,
``simulate``.  Reports are JSON (default) or CSV via ``--format``; exit codes
are 0 on pass, 1 on a tolerance failure, 2 on a usage error, 3 when a size
guard trips.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from .errors import DomainError, ParameterError, ResourceGuardError
from .harness import (ExperimentConfig, run_clt, run_fixpoint, run_mean,
                      run_oracle, run_rank, run_rate, run_simulate)

_RUNNERS = {
    "clt": run_clt,
    "rate": run_rate,
    "rank": run_rank,
    "fixpoint": run_fixpoint,
    "oracle": run_oracle,
    "mean": run_mean,
    "simulate": run_simulate,
}

_DEFAULTS = {
    # (m, n, reps, n_limit)
    "clt": (7, 10_000, 10_000, None),
    "rate": (7, 100_000, 0, None),
    "rank": (24, 0, 0, None),
    "fixpoint": (7, 0, 10_000, 100_000),
    "oracle": (9, 8, 100_000, None),
    "mean": (7, 1_000_000, 0, None),
    "simulate": (7, 100, 0, None),
}


def _parse_ks(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad k list {text!r}") from exc


def _parse_tol(text: str) -> tuple:
    name, _, value = text.partition("=")
    if not value:
        raise argparse.ArgumentTypeError("tolerance overrides look like name=value")
    return name.strip(), float(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyclicurn",
        description="Cyclic urn experiments: CLT checks, residual rates, "
                    "covariance ranks, fixed-point tests, and exact oracles.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _RUNNERS:
        m, n, reps, n_limit = _DEFAULTS[name]
        p = sub.add_parser(name)
        p.add_argument("--m", type=int, default=m)
        p.add_argument("--n", type=int, default=n)
        p.add_argument("--nlimit", type=int, default=n_limit)
        p.add_argument("--reps", type=int, default=reps)
        p.add_argument("--seed", type=int, default=20260810)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--mode", choices=("gamma_ratio", "power_phase"),
                       default="gamma_ratio")
        p.add_argument("--k", type=_parse_ks, default=None,
                       help="comma separated coordinate indices")
        p.add_argument("--checkpoints", type=_parse_ks, default=None)
        p.add_argument("--initial-type", type=int, default=0)
        p.add_argument("--tol", type=_parse_tol, action="append", default=[],
                       help="override a tolerance, e.g. --tol z=5")
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        if name == "rank":
            p.add_argument("--m-min", type=int, default=7)
        if name == "oracle":
            p.add_argument("--exact-rational", action="store_true")
    return parser


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    return ExperimentConfig(
        command=args.command,
        m=args.m,
        n=args.n,
        reps=args.reps,
        seed=args.seed,
        n_limit=args.nlimit,
        mode=args.mode,
        threads=args.threads,
        ks=args.k,
        checkpoints=args.checkpoints,
        m_min=getattr(args, "m_min", 7),
        initial_type=args.initial_type,
        exact_rational=getattr(args, "exact_rational", False),
        out=args.out,
        fmt=args.format,
        tolerances=dict(args.tol),
    )


def _emit(report: dict, csv_rows: list, cfg: ExperimentConfig) -> None:
    if cfg.fmt == "json":
        text = json.dumps(report, indent=2)
    else:
        buf = io.StringIO()
        fields: list = []
        for row in csv_rows:
            for key in row:
                if key not in fields:
                    fields.append(key)
        writer = csv.DictWriter(buf, fieldnames=fields)
        writer.writeheader()
        writer.writerows(csv_rows)
        text = buf.getvalue()
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text + ("" if text.endswith("\n") else "\n"))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _config_from_args(args)
    try:
        report, csv_rows = _RUNNERS[args.command](cfg)
    except ResourceGuardError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return 3
    except (ParameterError, DomainError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    _emit(report, csv_rows, cfg)
    return 0 if report["results"].get("passed", True) else 1


if __name__ == "__main__":
    sys.exit(main())
