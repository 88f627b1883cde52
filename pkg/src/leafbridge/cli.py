"""Command line interface.

Subcommands:
  run             run an experiment spec file, write JSON + CSV reports
  transfer        train one source->target model and serialize it
  inject-missing  randomly blank cells in a CSV file
  stats           print sign/Nemenyi summaries for an existing report

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Set LEAFBRIDGE_LOG (debug|info|warning|error) to control verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .dataset import inject_missing, load_csv, write_csv
from .errors import DataError, LeafBridgeError, NumericalError
from .experiment import parse_config, run_experiment
from .metrics import SIGN_TEST_Z_REF, mean_ranks, nemenyi_cd, sign_test
from .transfer import TransferConfig, run_transfer

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _setup_logging():
    level = os.environ.get("LEAFBRIDGE_LOG", "warning").upper()
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("leafbridge").setLevel(getattr(logging, level, logging.WARNING))


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="leafbridge",
                     description="heterogeneous transfer learning with forest leaf pivots")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment spec file")
    p_run.add_argument("--spec", required=True, help="experiment config file (key = value)")
    p_run.add_argument("--output", help="report base path (overrides the spec's output)")

    p_tr = sub.add_parser("transfer", help="train a single source->target model")
    p_tr.add_argument("--source", required=True)
    p_tr.add_argument("--target", required=True)
    p_tr.add_argument("--label-column", default="label")
    p_tr.add_argument("--config", help="optional config file for pipeline parameters")
    p_tr.add_argument("--seed", type=int, help="override the config seed")
    p_tr.add_argument("--output", required=True, help="path for the serialized model (JSON)")

    p_inj = sub.add_parser("inject-missing", help="randomly blank cells in a CSV file")
    p_inj.add_argument("--input", required=True)
    p_inj.add_argument("--output", required=True)
    p_inj.add_argument("--label-column", default="label")
    p_inj.add_argument("--ratio", type=float, required=True,
                       help="fraction of records that receive missing cells (0..0.5)")
    p_inj.add_argument("--seed", type=int, default=0)

    p_st = sub.add_parser("stats", help="sign/Nemenyi summary for a report JSON")
    p_st.add_argument("--report", required=True)
    p_st.add_argument("--q-alpha", type=float, help="override the Nemenyi critical value")
    return parser


def _cmd_run(args) -> int:
    spec, cfg = parse_config(args.spec)
    report = run_experiment(spec, cfg)
    json_path, csv_path = report.write(args.output or spec.output)
    print(f"report written to {json_path} and {csv_path}")
    for method, agg in report.aggregates.items():
        acc = agg["mean_accuracy"]
        shown = "n/a" if acc is None else f"{acc:.6f}"
        print(f"  {method}: mean accuracy {shown} over {agg['pairs']} pairs")
    if report.all_failed:
        failures = [p.get("error", "") for p in report.pairs]
        print("every pair failed", file=sys.stderr)
        return EXIT_NUMERICAL if all("NumericalError" in f or "SolveError" in f
                                     or "BandwidthError" in f for f in failures) else EXIT_DATA
    return EXIT_OK


def _cmd_transfer(args) -> int:
    if args.config:
        _, cfg = parse_config(args.config)
    else:
        cfg = TransferConfig()
    if args.seed is not None:
        from dataclasses import replace
        cfg = replace(cfg, seed=args.seed)
    source = load_csv(args.source, args.label_column, domain_tag="source")
    target = load_csv(args.target, args.label_column, domain_tag="target")
    model = run_transfer(source, target, cfg)
    model.save(args.output)
    diag = model.diagnostics
    print(f"model written to {args.output}")
    print(f"  pivots: {diag['n_pivots']}, mu: {diag['mu']}, fallback: {model.fallback}")
    return EXIT_OK


def _cmd_inject(args) -> int:
    ds = load_csv(args.input, args.label_column)
    out = inject_missing(ds, args.ratio, args.seed)
    write_csv(out, args.output, label_column=args.label_column)
    n_records = int(out.missing_mask().any(axis=1).sum())
    print(f"{args.output}: {n_records} records now contain missing cells")
    return EXIT_OK


def _cmd_stats(args) -> int:
    with open(args.report, encoding="utf-8") as fh:
        report = json.load(fh)
    if report.get("format") != "leafbridge-report":
        raise DataError(f"{args.report} is not a leafbridge report")
    methods = report["spec"]["methods"]
    rows = [p for p in report["pairs"] if "error" not in p]
    if "tlf" in methods:
        print(f"sign test (right-tailed, z ref {SIGN_TEST_Z_REF}):")
        for level in ("pair", "group"):
            cells = _stats_cells(rows, methods, level)
            for method in methods:
                if method == "tlf":
                    continue
                wins = sum(1 for row in cells if row["tlf"] is not None
                           and row[method] is not None and row["tlf"] > row[method])
                losses = sum(1 for row in cells if row["tlf"] is not None
                             and row[method] is not None and row["tlf"] < row[method])
                if wins + losses == 0:
                    print(f"  [{level}] tlf vs {method}: no comparable cells")
                    continue
                z = sign_test(wins, losses)
                verdict = "significant" if z > SIGN_TEST_Z_REF else "not significant"
                print(f"  [{level}] tlf vs {method}: wins={wins} losses={losses} "
                      f"z={z:.3f} ({verdict})")
    complete = [row for row in _stats_cells(rows, methods, "pair")
                if all(row[m] is not None for m in methods)]
    if len(methods) >= 2 and len(complete) >= 2:
        matrix = np.array([[row[m] for m in methods] for row in complete])
        ranks = mean_ranks(matrix)
        cd = nemenyi_cd(len(methods), len(complete), args.q_alpha)
        print(f"Nemenyi critical difference: {cd:.4f} over {len(complete)} pairs")
        for method, rank in zip(methods, ranks):
            print(f"  {method}: mean rank {rank:.3f}")
    return EXIT_OK


def _stats_cells(rows, methods, level):
    def cell(p, m):
        entry = p.get("methods", {}).get(m)
        return entry.get("accuracy") if entry else None

    if level == "pair":
        return [{m: cell(p, m) for m in methods} for p in rows]
    grouped = {}
    for p in rows:
        key = p.get("group") or p["pair"]
        grouped.setdefault(key, []).append(p)
    out = []
    for key, members in grouped.items():
        row = {}
        for m in methods:
            values = [c for p in members if (c := cell(p, m)) is not None]
            row[m] = float(np.mean(values)) if values else None
        out.append(row)
    return out


def main(argv=None) -> int:
    _setup_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "transfer":
            return _cmd_transfer(args)
        if args.command == "inject-missing":
            return _cmd_inject(args)
        if args.command == "stats":
            return _cmd_stats(args)
        parser.error(f"unknown command {args.command!r}")
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except LeafBridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
