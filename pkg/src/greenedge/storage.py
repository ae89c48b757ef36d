"""Instance, schedule and trace files.

An instance directory holds ``tasks.jsonl`` (one task per line),
``solar.csv`` (``slot,watts``) and ``es.json`` (server constants; an
unbounded battery is written as ``"inf"``). Floats go through ``repr`` so a
write/read round trip is exact.
"""
from __future__ import annotations

import csv
import json
import math
import numbers
from dataclasses import asdict, fields
from pathlib import Path
from typing import Iterable, Mapping

from .model import EsConfig, Instance, Schedule, SolarProfile, Task

TASK_FIELDS = ("id", "a", "e", "d", "u", "r")


def _num(x: float) -> float | str:
    return "inf" if math.isinf(x) else x


def fmt(x) -> str:
    """Shortest exact text for a number (numpy scalars included)."""
    if isinstance(x, numbers.Integral):
        return str(int(x))
    return repr(float(x))


def write_tasks(path: str | Path, tasks: Iterable[Task]):
    with open(path, "w") as fh:
        for task in tasks:
            rec = {k: getattr(task, k) for k in TASK_FIELDS}
            if task.v is not None:
                rec["v"] = task.v
            fh.write(json.dumps(rec) + "\n")


def read_tasks(path: str | Path) -> list[Task]:
    tasks = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                tasks.append(Task(int(rec["id"]), int(rec["a"]), int(rec["e"]), int(rec["d"]),
                                  float(rec["u"]), float(rec["r"]), rec.get("v")))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad task record ({exc})") from exc
    return tasks


def write_solar(path: str | Path, solar: SolarProfile):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["slot", "watts"])
        for t, watts in enumerate(solar.watts, 1):
            w.writerow([t, repr(float(watts))])


def read_solar(path: str | Path) -> SolarProfile:
    """Read a ``slot,watts`` file verbatim (no resampling or rescaling)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["slot", "watts"]:
        raise ValueError(f"{path}: expected header slot,watts")
    return SolarProfile([float(r[1]) for r in rows[1:] if r])


def write_config(path: str | Path, cfg: EsConfig):
    with open(path, "w") as fh:
        json.dump({k: _num(v) for k, v in asdict(cfg).items()}, fh, indent=2)
        fh.write("\n")


def read_config(path: str | Path) -> EsConfig:
    with open(path) as fh:
        raw = json.load(fh)
    known = {f.name for f in fields(EsConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"{path}: unknown keys {sorted(unknown)}")
    return EsConfig(**{k: float(v) for k, v in raw.items()})


def save_instance(directory: str | Path, instance: Instance):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_tasks(d / "tasks.jsonl", instance.tasks)
    write_solar(d / "solar.csv", instance.solar)
    write_config(d / "es.json", instance.config)


def load_instance(directory: str | Path) -> Instance:
    d = Path(directory)
    return Instance(read_config(d / "es.json"), read_solar(d / "solar.csv"), read_tasks(d / "tasks.jsonl"))


def write_schedule(path: str | Path, assignment: Mapping[int, int]):
    with open(path, "w") as fh:
        for task_id, slot in sorted(assignment.items()):
            fh.write(json.dumps({"task_id": task_id, "slot": slot}) + "\n")


def read_schedule(path: str | Path) -> list[tuple[int, int]]:
    """Pairs in file order, repeats kept so the validator can flag them."""
    pairs = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                pairs.append((int(rec["task_id"]), int(rec["slot"])))
    return pairs


def write_slots(path: str | Path, schedule: Schedule, solar: SolarProfile):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["slot", "S", "U", "P", "beta"])
        for t in range(len(schedule.U)):
            w.writerow([t + 1] + [fmt(x) for x in (solar.watts[t], schedule.U[t], schedule.P[t], schedule.beta[t])])


def write_trace(path: str | Path, trace):
    names = ["slot", "S_pred", "S_actual", "committed", "evictions", "admissions", "beta", "P", "cum_R"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in trace:
            w.writerow([fmt(getattr(row, n)) for n in names])
