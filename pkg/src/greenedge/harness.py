"""Sweep runner: many edge servers, seeds, battery sizes and schedulers.

Each edge server is solved on its own and the per-server revenues are
summed. Every schedule is validated before it is counted; a rejection is a
scheduler bug and aborts the sweep with the validator's findings.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .baselines import BaselinePolicy, run_baseline
from .flow_optimal import solve_unit_snb
from .model import INFINITE, EsConfig, Instance, Schedule, SolarProfile, validate
from .offline import schedule_offline, schedule_sfb, schedule_sib, schedule_snb
from .online import online_from_plan
from .storage import fmt
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

OUTPUT_ENV = "GREENEDGE_OUTPUT_DIR"
DEFAULT_RHOS = (0.05, 0.1, 0.2, 0.4, 0.8)
DEFAULT_BETAS = (0.0, 2000.0, 7000.0, 10000.0, INFINITE)

OFFLINE: dict[str, Callable[[Instance], Schedule]] = {
    "snb": schedule_snb,
    "sib": schedule_sib,
    "sfb": schedule_sfb,
    "offline": schedule_offline,
    "maxflow": solve_unit_snb,
}


class ConfigError(ValueError):
    pass


class ScheduleRejected(RuntimeError):
    pass


def parse_scheduler(name: str) -> tuple[str, str]:
    """Split ``kind[:arg]`` into a checked ``(kind, arg)`` pair."""
    kind, _, arg = name.strip().lower().partition(":")
    if kind in OFFLINE and not arg:
        return kind, ""
    if kind == "baseline":
        return kind, BaselinePolicy.parse(arg).value
    if kind == "online":
        base = arg or "offline"
        if base not in OFFLINE:
            raise ValueError(f"online base must be one of {sorted(OFFLINE)}, got {base!r}")
        return kind, base
    raise ValueError(f"unknown scheduler {name!r}")


def parse_beta(value: Any) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinite", "infinity"):
        return INFINITE
    b = float(value)
    if not b >= 0:
        raise ValueError(f"beta_max must be >= 0, got {value!r}")
    return b


@dataclass
class ExperimentConfig:
    es_count: int = 1
    replicate_es: bool = False  # every ES gets ES 0's workload
    N: int = 100_000
    T_total: int = 1440
    rhos: Sequence[float] = DEFAULT_RHOS
    schedulers: Sequence[str] = ("offline",)
    beta_max: Sequence[float] = DEFAULT_BETAS
    deviations: Sequence[tuple[float, float]] = ((0.0, 0.0),)  # (P_d, T_d) pairs
    spike_rates: Sequence[float] = (0.0,)
    spike_target: str = "solar"  # solar | tasks | both
    spike_magnitude: float | None = None
    trend_bias: float = 0.5
    seeds: Sequence[int] = (0,)
    solar: str = "synthetic"  # or a CSV path
    p_s: float = 20.0
    p_max: float = 2000.0
    u_max: float = 100.0
    output_dir: str = "results"

    def __post_init__(self):
        errors = []
        if self.es_count < 1:
            errors.append("es_count: must be >= 1")
        if self.N < 0:
            errors.append("N: must be >= 0")
        if not self.schedulers:
            errors.append("schedulers: need at least one")
        for j, name in enumerate(self.schedulers):
            try:
                parse_scheduler(name)
            except ValueError as exc:
                errors.append(f"schedulers[{j}]: {exc}")
        betas = []
        for j, b in enumerate(self.beta_max):
            try:
                betas.append(parse_beta(b))
            except (TypeError, ValueError) as exc:
                errors.append(f"beta_max[{j}]: {exc}")
        self.beta_max = tuple(betas)
        for j, r in enumerate(self.rhos):
            if not r > 0:
                errors.append(f"rhos[{j}]: must be > 0")
        devs = []
        for j, pair in enumerate(self.deviations):
            try:
                P_d, T_d = (float(x) for x in pair)
                DeviationSpec(P_d, T_d)
                devs.append((P_d, T_d))
            except (TypeError, ValueError) as exc:
                errors.append(f"deviations[{j}]: {exc}")
        self.deviations = tuple(devs)
        for j, rate in enumerate(self.spike_rates):
            if not 0 <= rate <= 100:
                errors.append(f"spike_rates[{j}]: must lie in [0, 100]")
        if self.spike_target not in ("solar", "tasks", "both"):
            errors.append("spike_target: one of solar, tasks, both")
        try:
            EsConfig(self.p_s, self.p_max, self.u_max)
        except ValueError as exc:
            errors.append(f"p_s/p_max/u_max: {exc}")
        if errors:
            raise ConfigError("; ".join(errors))

    @classmethod
    def from_mapping(cls, raw: Mapping[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kw = dict(raw)
        for key in ("rhos", "schedulers", "beta_max", "seeds", "spike_rates", "deviations"):
            if key in kw and not isinstance(kw[key], (list, tuple)):
                kw[key] = [kw[key]]
        return cls(**kw)

    def to_mapping(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["beta_max"] = ["inf" if math.isinf(b) else b for b in self.beta_max]
        out["deviations"] = [list(p) for p in self.deviations]
        return out


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a YAML or JSON experiment file."""
    text = Path(path).read_text()
    if str(path).endswith(".json"):
        raw = json.loads(text)
    else:
        import yaml

        raw = yaml.safe_load(text)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return ExperimentConfig.from_mapping(raw)


def output_dir(default: str | Path) -> Path:
    return Path(os.environ.get(OUTPUT_ENV) or default)


# ---------------------------------------------------------------------------
# Runs


KEY_COLUMNS = ("scheduler", "beta_max", "rho", "P_d", "T_d", "spike_rate", "seed")
VALUE_COLUMNS = ("revenue", "revenue_pct", "completed", "dropped", "energy_consumed",
                 "energy_harvested", "reference_revenue")


@dataclass
class RunResult:
    scheduler: str
    beta_max: float
    rho: float
    P_d: float
    T_d: float
    spike_rate: float
    seed: int
    revenue: float
    revenue_pct: float  # against the proposed offline plan on the predicted instance
    completed: int
    dropped: int
    energy_consumed: float
    energy_harvested: float
    reference_revenue: float
    per_es_revenue: list[float] = field(default_factory=list)

    def key(self) -> tuple:
        return tuple(getattr(self, k) for k in KEY_COLUMNS)


@dataclass
class SweepReport:
    runs: list[RunResult] = field(default_factory=list)
    trajectories: dict[tuple, dict[str, np.ndarray]] = field(default_factory=dict)

    def aggregate(self) -> list[dict[str, Any]]:
        """Mean and sample std of every value column across seeds."""
        groups: dict[tuple, list[RunResult]] = {}
        for run in self.runs:
            groups.setdefault(run.key()[:-1], []).append(run)
        rows = []
        for key, runs in groups.items():
            row: dict[str, Any] = dict(zip(KEY_COLUMNS[:-1], key))
            row["n_seeds"] = len(runs)
            for col in VALUE_COLUMNS:
                vals = [float(getattr(r, col)) for r in runs]
                row[f"{col}_mean"] = statistics.fmean(vals)
                row[f"{col}_std"] = statistics.stdev(vals) if len(vals) > 1 else 0.0
            rows.append(row)
        return rows

    def mean(self, col: str = "revenue", **match) -> float:
        vals = [getattr(r, col) for r in self.runs if all(getattr(r, k) == v for k, v in match.items())]
        if not vals:
            raise KeyError(f"no runs match {match}")
        return statistics.fmean(vals)


def _es_seed(seed: int, es: int, rho_idx: int) -> int:
    return int(np.random.SeedSequence([seed, es, rho_idx]).generate_state(1)[0])


def _base_solar(cfg: ExperimentConfig) -> SolarProfile:
    if cfg.solar == "synthetic":
        return synthetic_solar(cfg.T_total, cfg.p_max)
    return load_solar(cfg.solar, cfg.T_total, cfg.p_max)


def _checked(schedule: Schedule, instance: Instance, what: str) -> Schedule:
    report = validate(schedule, instance)
    if not report.accepted:
        raise ScheduleRejected(f"{what}: {report.summary()}")
    return schedule


def run_experiment(cfg: ExperimentConfig, keep_trajectories: bool = False,
                   progress: Callable[[str], None] | None = None) -> SweepReport:
    report = SweepReport()
    base_solar = _base_solar(cfg)
    schedulers = [parse_scheduler(s) for s in cfg.schedulers]

    for seed in cfg.seeds:
        for rho_idx, rho in enumerate(cfg.rhos):
            es_tasks = [generate_tasks(GenSpec(rho=rho, N=cfg.N, T_total=cfg.T_total, u_max=cfg.u_max,
                                               seed=_es_seed(seed, 0 if cfg.replicate_es else j, rho_idx)))
                        for j in range(cfg.es_count)]
            for beta in cfg.beta_max:
                es_cfg = EsConfig(cfg.p_s, cfg.p_max, cfg.u_max, beta)
                instances = [Instance(es_cfg, base_solar, tasks) for tasks in es_tasks]
                plans: dict[str, list[Schedule]] = {}

                def plan(name: str) -> list[Schedule]:
                    if name not in plans:
                        plans[name] = [_checked(OFFLINE[name](inst), inst, f"{name} es={j}")
                                       for j, inst in enumerate(instances)]
                    return plans[name]

                reference = [s.revenue for s in plan("offline")]
                for kind, arg in schedulers:
                    label = kind if not arg else f"{kind}:{arg}"
                    if progress:
                        progress(f"seed={seed} rho={rho} beta={beta} {label}")
                    if kind == "online":
                        for P_d, T_d in cfg.deviations:
                            for rate in cfg.spike_rates:
                                scheds, actuals = [], []
                                for j, inst in enumerate(instances):
                                    es = 0 if cfg.replicate_es else j
                                    actual = _actual_instance(cfg, inst, P_d, T_d, rate, _es_seed(seed, es, rho_idx))
                                    sched, _ = online_from_plan(plan(arg)[j], inst, actual)
                                    scheds.append(_checked(sched, actual, f"{label} es={j}"))
                                    actuals.append(actual)
                                ref = [s.revenue for s in plan(arg)]
                                _record(report, label, beta, rho, P_d, T_d, rate, seed, scheds, actuals,
                                        ref, keep_trajectories)
                        continue
                    if kind == "baseline":
                        scheds = [_checked(run_baseline(inst, arg), inst, f"{label} es={j}")
                                  for j, inst in enumerate(instances)]
                    else:
                        scheds = plan(kind)
                    _record(report, label, beta, rho, 0.0, 0.0, 0.0, seed, scheds, instances,
                            reference, keep_trajectories)
    return report


def _actual_instance(cfg: ExperimentConfig, inst: Instance, P_d: float, T_d: float, rate: float,
                     seed: int) -> Instance:
    dev = DeviationSpec(P_d, T_d, seed=seed, trend_bias=cfg.trend_bias)
    solar = derive_actual_solar(inst.solar, dev, cfg.p_max)
    tasks = derive_actual_tasks(inst.tasks, dev, cfg.u_max)
    if rate > 0:
        if cfg.spike_target in ("solar", "both"):
            solar = inject_spikes(solar, rate, cfg.spike_magnitude, seed=seed + 1)
        if cfg.spike_target in ("tasks", "both"):
            tasks = inject_spikes(tasks, rate, cfg.spike_magnitude, seed=seed + 2,
                                  T_total=cfg.T_total, u_max=cfg.u_max)
    return Instance(inst.config, solar, tasks)


def _record(report: SweepReport, label: str, beta: float, rho: float, P_d: float, T_d: float,
            rate: float, seed: int, scheds: list[Schedule], instances: list[Instance],
            reference: list[float], keep: bool):
    revenue = math.fsum(s.revenue for s in scheds)
    ref = math.fsum(reference)
    run = RunResult(
        scheduler=label, beta_max=beta, rho=rho, P_d=P_d, T_d=T_d, spike_rate=rate, seed=seed,
        revenue=revenue,
        revenue_pct=100.0 * (revenue / ref) if ref > 0 else (100.0 if revenue == 0 else math.inf),
        completed=sum(s.completed for s in scheds),
        dropped=sum(len(inst.tasks) - s.completed for s, inst in zip(scheds, instances)),
        energy_consumed=math.fsum(s.energy_consumed for s in scheds),
        energy_harvested=math.fsum(inst.solar.total for inst in instances),
        reference_revenue=ref,
        per_es_revenue=[s.revenue for s in scheds],
    )
    report.runs.append(run)
    if keep:
        report.trajectories[run.key()] = {
            "U": np.sum([s.U for s in scheds], axis=0),
            "P": np.sum([s.P for s in scheds], axis=0),
            "beta": np.sum([s.beta for s in scheds], axis=0),
        }


# ---------------------------------------------------------------------------
# Output


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return fmt(value)


def write_runs_csv(path: str | Path, report: SweepReport):
    cols = KEY_COLUMNS + VALUE_COLUMNS
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for run in report.runs:
            w.writerow([_cell(getattr(run, c)) for c in cols])


def write_summary_csv(path: str | Path, report: SweepReport):
    rows = report.aggregate()
    cols = list(KEY_COLUMNS[:-1]) + ["n_seeds"] + [f"{c}_{s}" for c in VALUE_COLUMNS for s in ("mean", "std")]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([_cell(row[c]) for c in cols])


def write_runs_jsonl(path: str | Path, report: SweepReport):
    with open(path, "w") as fh:
        for run in report.runs:
            rec = dataclasses.asdict(run)
            rec["beta_max"] = "inf" if math.isinf(run.beta_max) else run.beta_max
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_runs_csv(path: str | Path) -> SweepReport:
    report = SweepReport()
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            kw: dict[str, Any] = {}
            for col in KEY_COLUMNS + VALUE_COLUMNS:
                raw = rec[col]
                if col == "scheduler":
                    kw[col] = raw
                elif col in ("seed", "completed", "dropped"):
                    kw[col] = int(raw)
                else:
                    kw[col] = float(raw)
            report.runs.append(RunResult(**kw))
    return report


def _beta_label(b: float) -> str:
    return "inf" if math.isinf(b) else f"{b:g}"


def _series(runs: list[RunResult], x: str, y: str, by: Sequence[str]) -> dict[str, list[tuple[float, float]]]:
    acc: dict[tuple, dict[float, list[float]]] = {}
    for run in runs:
        key = tuple(getattr(run, k) for k in by)
        acc.setdefault(key, {}).setdefault(getattr(run, x), []).append(getattr(run, y))
    out = {}
    for key in sorted(acc, key=lambda k: tuple(str(v) for v in k)):
        parts = []
        for name, val in zip(by, key):
            parts.append(f"beta={_beta_label(val)}" if name == "beta_max" else
                         val if name == "scheduler" else f"{name}={val:g}")
        pts = sorted((xv, statistics.fmean(ys)) for xv, ys in acc[key].items())
        out[", ".join(parts) or y] = pts
    return out


def _varying(runs: list[RunResult], col: str) -> bool:
    return len({getattr(r, col) for r in runs}) > 1


def write_charts(directory: str | Path, report: SweepReport) -> list[Path]:
    """SVG line charts for every swept dimension; returns the written files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "greenedge"  # stable element ids across reruns
    d = Path(directory)
    runs = report.runs
    written = []

    def chart(name: str, rows: list[RunResult], x: str, y: str, by: Sequence[str], xlabel: str,
              ylabel: str, categorical: bool = False):
        if not rows:
            return
        by = [b for b in by if _varying(rows, b)]
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        xs_all = sorted({getattr(r, x) for r in rows})
        pos = {v: i for i, v in enumerate(xs_all)}
        for label, pts in _series(rows, x, y, by).items():
            xs = [pos[p[0]] if categorical else p[0] for p in pts]
            ax.plot(xs, [p[1] for p in pts], marker="o", label=label)
        if categorical:
            ax.set_xticks(range(len(xs_all)))
            ax.set_xticklabels([_beta_label(v) for v in xs_all])
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(alpha=0.3)
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize=7)
        fig.tight_layout()
        path = d / f"{name}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)

    offline_runs = [r for r in runs if not r.scheduler.startswith(("online", "baseline"))]
    online_runs = [r for r in runs if r.scheduler.startswith("online")]
    if _varying(offline_runs, "beta_max"):
        chart("battery", offline_runs, "rho", "revenue", ["beta_max", "scheduler"], "rho", "total revenue")
    if _varying(runs, "rho"):
        chart("rho", [r for r in runs if not r.scheduler.startswith("online")], "rho", "revenue",
              ["scheduler", "beta_max"], "rho", "total revenue")
    if any(r.scheduler.startswith("baseline") for r in runs) and _varying(runs, "scheduler"):
        rows = [r for r in runs if not r.scheduler.startswith("online")]
        chart("baselines", rows, "beta_max", "revenue", ["scheduler", "rho"], "battery capacity (W)",
              "total revenue", categorical=True)
    if _varying(online_runs, "P_d") or _varying(online_runs, "T_d"):
        rows = [r for r in online_runs if r.spike_rate == 0] or online_runs
        chart("deviation", rows, "P_d", "revenue_pct", ["scheduler", "beta_max", "T_d"],
              "solar deviation (%)", "revenue (%)")
    if _varying(online_runs, "spike_rate"):
        chart("spikes", online_runs, "spike_rate", "revenue_pct", ["scheduler", "beta_max", "P_d"],
              "spiked slots (%)", "revenue (%)")
    return written


def emit_report(report: SweepReport, directory: str | Path, formats: Sequence[str] = ("csv",)) -> list[Path]:
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {d}: {exc}") from exc
    written = []
    for f in formats:
        if f == "csv":
            write_runs_csv(d / "runs.csv", report)
            write_summary_csv(d / "summary.csv", report)
            written += [d / "runs.csv", d / "summary.csv"]
        elif f == "jsonlines":
            write_runs_jsonl(d / "runs.jsonl", report)
            written.append(d / "runs.jsonl")
        elif f == "svg":
            written += write_charts(d, report)
        else:
            raise ValueError(f"unknown report format {f!r}")
    return written
