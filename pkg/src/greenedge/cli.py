"""Command line entry point: ``greenedge <command> ...``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness, storage
from .baselines import BaselinePolicy, run_baseline
from .model import EsConfig, Instance, validate
from .online import online_from_plan
from .workload import (
    DeviationSpec,
    GenSpec,
    derive_actual_solar,
    derive_actual_tasks,
    generate_tasks,
    inject_spikes,
    load_solar,
    synthetic_solar,
)


def _out(args, default: str) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    return harness.output_dir(default)


def _load(args) -> Instance:
    inst = storage.load_instance(args.instance)
    if getattr(args, "beta", None) is not None:
        inst = inst.with_config(inst.config.with_battery(harness.parse_beta(args.beta)))
    return inst


def _finish(schedule, instance: Instance, out: Path, label: str) -> int:
    report = validate(schedule, instance)
    out.mkdir(parents=True, exist_ok=True)
    storage.write_schedule(out / "schedule.jsonl", schedule.assignment)
    storage.write_slots(out / "slots.csv", schedule, instance.solar)
    summary = {"scheduler": label, "revenue": schedule.revenue, "completed": schedule.completed,
               "tasks": len(instance.tasks), "energy_consumed": schedule.energy_consumed,
               "energy_harvested": instance.solar.total, "accepted": report.accepted}
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(report.summary())
    print(json.dumps(summary))
    return 0 if report.accepted else 1


def cmd_generate(args) -> int:
    solar = synthetic_solar(args.T, args.p_max) if args.solar == "synthetic" else load_solar(args.solar, args.T, args.p_max)
    tasks = generate_tasks(GenSpec(rho=args.rho, N=args.N, T_total=args.T, seed=args.seed, u_max=args.u_max))
    cfg = EsConfig(args.p_s, args.p_max, args.u_max, harness.parse_beta(args.beta))
    inst = Instance(cfg, solar, tasks)
    out = _out(args, "instance")
    storage.save_instance(out, inst)
    print(f"wrote {len(tasks)} tasks, {args.T} slots to {out}")
    return 0


def cmd_schedule(args) -> int:
    inst = _load(args)
    if args.check:
        report = validate(storage.read_schedule(args.check), inst)
        print(report.summary())
        return 0 if report.accepted else 1
    try:
        schedule = harness.OFFLINE[args.scheduler](inst)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return _finish(schedule, inst, _out(args, "schedule"), args.scheduler)


def cmd_baseline(args) -> int:
    inst = _load(args)
    policy = BaselinePolicy.parse(args.policy)
    return _finish(run_baseline(inst, policy), inst, _out(args, "baseline"), f"baseline:{policy.value}")


def cmd_simulate(args) -> int:
    pred = _load(args)
    plan = harness.OFFLINE[args.base](pred)
    dev = DeviationSpec(args.P_d, args.T_d, seed=args.seed)
    solar = derive_actual_solar(pred.solar, dev, pred.config.p_max)
    tasks = derive_actual_tasks(pred.tasks, dev, pred.config.u_max)
    if args.spike_rate:
        solar = inject_spikes(solar, args.spike_rate, seed=args.seed + 1)
    actual = Instance(pred.config, solar, tasks)
    schedule, metrics = online_from_plan(plan, pred, actual)
    out = _out(args, "simulate")
    code = _finish(schedule, actual, out, f"online:{args.base}")
    storage.write_trace(out / "trace.csv", metrics.trace)
    print(f"offline {metrics.offline_revenue:.6g}  online {metrics.revenue:.6g}  "
          f"revenue% {metrics.revenue_pct:.2f}  evictions {metrics.evictions}  admissions {metrics.admissions}")
    return code


def _sweep_config(args) -> harness.ExperimentConfig:
    raw = harness.load_config(args.config).to_mapping() if args.config else {}
    overrides = {"N": args.N, "es_count": args.es_count, "seeds": args.seeds, "rhos": args.rho,
                 "schedulers": args.scheduler, "beta_max": args.beta, "spike_rates": args.spike_rate,
                 "solar": args.solar}
    raw.update({k: v for k, v in overrides.items() if v is not None})
    if args.deviation:
        raw["deviations"] = [tuple(float(x) for x in d.split(",")) for d in args.deviation]
    return harness.ExperimentConfig.from_mapping(raw)


def cmd_sweep(args) -> int:
    try:
        cfg = _sweep_config(args)
    except (harness.ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    progress = (lambda msg: print(msg, file=sys.stderr)) if args.verbose else None
    report = harness.run_experiment(cfg, progress=progress)
    out = _out(args, cfg.output_dir)
    files = harness.emit_report(report, out, args.format)
    for f in files:
        print(f)
    return 0


def cmd_report(args) -> int:
    report = harness.read_runs_csv(args.runs)
    out = _out(args, str(Path(args.runs).parent))
    for f in harness.emit_report(report, out, args.format):
        print(f)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="greenedge", description="Solar-powered edge server task scheduling.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic instance directory")
    g.add_argument("--rho", type=float, default=0.2)
    g.add_argument("--N", type=int, default=100_000)
    g.add_argument("--T", type=int, default=1440)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--beta", default="0", help="battery capacity in W, or inf")
    g.add_argument("--solar", default="synthetic", help="'synthetic' or a solar CSV")
    g.add_argument("--p-s", dest="p_s", type=float, default=20.0)
    g.add_argument("--p-max", dest="p_max", type=float, default=2000.0)
    g.add_argument("--u-max", dest="u_max", type=float, default=100.0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    for name, helptext in (("schedule", "offline schedule of an instance"),
                           ("baseline", "comparison scheduler on an instance"),
                           ("simulate", "online run against a perturbed instance")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("instance", help="instance directory")
        s.add_argument("--beta", help="override the battery capacity (W or inf)")
        s.add_argument("--out")
        if name == "schedule":
            s.add_argument("--scheduler", choices=sorted(harness.OFFLINE), default="offline")
            s.add_argument("--check", metavar="SCHEDULE_JSONL", help="only validate an existing schedule")
            s.set_defaults(func=cmd_schedule)
        elif name == "baseline":
            s.add_argument("--policy", default="ea", help="npedf, asap_huf, asap_luf or ea")
            s.set_defaults(func=cmd_baseline)
        else:
            s.add_argument("--base", choices=sorted(harness.OFFLINE), default="offline")
            s.add_argument("--P-d", dest="P_d", type=float, default=10.0)
            s.add_argument("--T-d", dest="T_d", type=float, default=10.0)
            s.add_argument("--spike-rate", type=float, default=0.0)
            s.add_argument("--seed", type=int, default=0)
            s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="run an experiment grid and write reports")
    w.add_argument("--config", help="YAML or JSON experiment file")
    w.add_argument("--N", type=int)
    w.add_argument("--es-count", type=int)
    w.add_argument("--seeds", type=int, nargs="+")
    w.add_argument("--rho", type=float, nargs="+")
    w.add_argument("--scheduler", nargs="+")
    w.add_argument("--beta", nargs="+")
    w.add_argument("--deviation", nargs="+", metavar="P_D,T_D")
    w.add_argument("--spike-rate", type=float, nargs="+")
    w.add_argument("--solar")
    w.add_argument("--format", nargs="+", default=["csv", "jsonlines", "svg"],
                   choices=["csv", "jsonlines", "svg"])
    w.add_argument("--out")
    w.add_argument("-v", "--verbose", action="store_true")
    w.set_defaults(func=cmd_sweep)

    r = sub.add_parser("report", help="redraw charts and tables from a runs.csv")
    r.add_argument("runs")
    r.add_argument("--format", nargs="+", default=["svg"], choices=["csv", "jsonlines", "svg"])
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
