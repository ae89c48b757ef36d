"""Shared argument handling for the experiment drivers."""
from __future__ import annotations

import argparse
import sys
import time

from greenedge.harness import ExperimentConfig, emit_report, output_dir, run_experiment


def parser(description: str, default_n: int = 100_000, default_seeds: int = 20) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--N", type=int, default=default_n, help="tasks per edge server")
    p.add_argument("--seeds", type=int, default=default_seeds, help="number of seeds (0..n-1)")
    p.add_argument("--es-count", type=int, default=1)
    p.add_argument("--solar", default="synthetic", help="'synthetic' or a solar CSV")
    p.add_argument("--out", help="output directory (default: $GREENEDGE_OUTPUT_DIR or results/<name>)")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def run(name: str, args, **fields) -> None:
    cfg = ExperimentConfig(N=args.N, seeds=tuple(range(args.seeds)), es_count=args.es_count,
                           solar=args.solar, **fields)
    progress = None if args.quiet else (lambda msg: print(msg, file=sys.stderr))
    t0 = time.perf_counter()
    report = run_experiment(cfg, progress=progress)
    out = args.out or output_dir(f"results/{name}")
    for path in emit_report(report, out, ["csv", "jsonlines", "svg"]):
        print(path)
    print(f"{len(report.runs)} runs in {time.perf_counter() - t0:.1f} s", file=sys.stderr)
    for row in report.aggregate():
        keys = {k: row[k] for k in ("scheduler", "beta_max", "rho", "P_d", "T_d", "spike_rate")}
        print(keys, f"revenue={row['revenue_mean']:.2f}+/-{row['revenue_std']:.2f}",
              f"revenue%={row['revenue_pct_mean']:.2f}")
