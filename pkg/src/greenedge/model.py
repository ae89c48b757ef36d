"""Domain types, the power/revenue curves and the schedule validator.

Slots are 1-based in every public structure (``Task.a``, ``Task.d``,
``Schedule.assignment`` values). Per-slot arrays are plain numpy arrays
where index ``0`` holds slot ``1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

# Sentinel for an unbounded battery.
INFINITE = math.inf

# Absolute slack (W) allowed when comparing power against availability.
EPS = 1e-6


class InvalidInstance(ValueError):
    pass


@dataclass(frozen=True)
class Task:
    id: int
    a: int
    e: int
    d: int
    u: float
    r: float
    v: int | None = None  # generating vehicle, carried through untouched

    @property
    def last_start(self) -> int:
        """Latest start slot: the task may run while ``t + e <= d``."""
        return self.d - self.e

    @property
    def window(self) -> range:
        return range(self.a, self.last_start + 1)

    @property
    def k(self) -> int:
        return self.d - self.a - self.e


@dataclass(frozen=True)
class EsConfig:
    p_s: float = 20.0
    p_max: float = 2000.0
    u_max: float = 100.0
    beta_max: float = 0.0

    def __post_init__(self):
        if not 0 <= self.p_s < self.p_max:
            raise ValueError(f"need 0 <= p_s < p_max, got p_s={self.p_s}, p_max={self.p_max}")
        if not self.u_max > 0:
            raise ValueError(f"u_max must be positive, got {self.u_max}")
        if not self.beta_max >= 0:
            raise ValueError(f"beta_max must be >= 0, got {self.beta_max}")

    @property
    def infinite_battery(self) -> bool:
        return math.isinf(self.beta_max)

    def with_battery(self, beta_max: float) -> "EsConfig":
        return EsConfig(self.p_s, self.p_max, self.u_max, beta_max)


@dataclass(frozen=True, eq=False)
class SolarProfile:
    """Harvested solar power per slot, in watts."""

    watts: np.ndarray

    def __post_init__(self):
        w = np.array(self.watts, dtype=float)
        if w.ndim != 1:
            raise ValueError("solar profile must be one-dimensional")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise ValueError("solar power must be finite and non-negative")
        w.setflags(write=False)
        object.__setattr__(self, "watts", w)

    def __len__(self) -> int:
        return len(self.watts)

    def __getitem__(self, slot: int) -> float:
        return float(self.watts[slot - 1])

    def __eq__(self, other) -> bool:
        return isinstance(other, SolarProfile) and np.array_equal(self.watts, other.watts)

    @property
    def total(self) -> float:
        return float(self.watts.sum())


@dataclass(frozen=True, eq=False)
class Instance:
    config: EsConfig
    solar: SolarProfile
    tasks: tuple[Task, ...]

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        T = self.T_total
        seen = set()
        for task in self.tasks:
            if task.id in seen:
                raise InvalidInstance(f"duplicate task id {task.id}")
            seen.add(task.id)
            if not 1 <= task.a <= T:
                raise InvalidInstance(f"task {task.id}: arrival {task.a} outside 1..{T}")
            if task.e < 1 or task.d < task.a + task.e:
                raise InvalidInstance(f"task {task.id}: deadline {task.d} < a + e")
            if not 0 < task.u <= self.config.u_max:
                raise InvalidInstance(f"task {task.id}: utilization {task.u} outside (0, u_max]")
        if np.any(self.solar.watts > self.config.p_max + EPS):
            raise InvalidInstance("solar power exceeds p_max")

    @property
    def T_total(self) -> int:
        return len(self.solar)

    def task_by_id(self) -> dict[int, Task]:
        return {task.id: task for task in self.tasks}

    def with_config(self, config: EsConfig) -> "Instance":
        return Instance(config, self.solar, self.tasks)


@dataclass(frozen=True, eq=False)
class Schedule:
    assignment: Mapping[int, int]
    U: np.ndarray
    P: np.ndarray
    beta: np.ndarray
    revenue: float

    @property
    def completed(self) -> int:
        return len(self.assignment)

    @property
    def energy_consumed(self) -> float:
        return float(self.P.sum())


# ---------------------------------------------------------------------------
# Formulas


def revenue_of(u: float, a: int, d: int) -> float:
    if u <= 0:
        raise ValueError(f"utilization must be positive, got {u}")
    if d < a:
        raise ValueError(f"deadline {d} precedes arrival {a}")
    return u * u / (1 + (d - a) ** 2)


def power_of(U: float, cfg: EsConfig) -> float:
    """Server draw at total utilization ``U``; an idle server is gated off."""
    if U < 0 or U > cfg.u_max * (1 + 1e-12):
        raise ValueError(f"utilization {U} outside [0, {cfg.u_max}]")
    if U == 0:
        return 0.0
    if U == cfg.u_max:
        return cfg.p_max
    q = U / cfg.u_max
    # explicit cube: numpy and libm pow() disagree in the last bit
    return cfg.p_s + (cfg.p_max - cfg.p_s) * (q * q * q)


def power_curve(U: np.ndarray, cfg: EsConfig) -> np.ndarray:
    """Vectorised :func:`power_of` (no range check)."""
    U = np.asarray(U, dtype=float)
    q = U / cfg.u_max
    P = cfg.p_s + (cfg.p_max - cfg.p_s) * (q * q * q)
    P = np.where(U == cfg.u_max, cfg.p_max, P)
    return np.where(U > 0, P, 0.0)


def utilization_of(P: float, cfg: EsConfig) -> float:
    if P <= cfg.p_s:
        return 0.0
    frac = (P - cfg.p_s) / (cfg.p_max - cfg.p_s)
    return min(cfg.u_max, cfg.u_max * frac ** (1.0 / 3.0))


def usable_utilization(S_t: float, beta_t: float, cfg: EsConfig) -> float:
    return min(cfg.u_max, utilization_of(S_t + beta_t, cfg))


# ---------------------------------------------------------------------------
# Battery accounting


def battery_levels(P: Sequence[float], S: Sequence[float], beta_max: float) -> np.ndarray:
    """Charge at the start of every slot plus the end-of-horizon charge.

    Returns an array of length ``T + 1``. Surplus charges the battery up to
    ``beta_max``; a deficit is drawn from it. Nothing clips at zero, so an
    infeasible plan shows up as a negative level.
    """
    T = len(P)
    beta = np.empty(T + 1)
    b = 0.0
    for t in range(T):
        beta[t] = b
        b = min(beta_max, b + S[t] - P[t])
    beta[T] = b
    return beta


def battery_levels_fast(P: np.ndarray, S: np.ndarray, beta_max: float) -> np.ndarray:
    """Closed form of :func:`battery_levels` (upper-barrier reflection)."""
    X = np.concatenate(([0.0], np.cumsum(S - P)))
    spilled = np.maximum.accumulate(np.maximum(X - beta_max, 0.0))
    return X - spilled


def headroom(P: np.ndarray, S: np.ndarray, beta_max: float) -> np.ndarray:
    """Extra power each slot could draw without breaking any later slot.

    ``h[t]`` is the largest increase of ``P[t]`` alone that keeps the whole
    battery trajectory feasible. A deficit created at ``t`` shrinks the
    charge of every later slot, except that it is absorbed by any surplus
    the full battery would otherwise have spilled.
    """
    beta = battery_levels_fast(P, S, beta_max)
    raw = beta[:-1] + S - P
    spill = raw - beta[1:]
    spill_before = np.concatenate(([0.0], np.cumsum(spill)[:-1]))
    key = raw + spill_before
    suffix_min = np.minimum.accumulate(key[::-1])[::-1]
    return suffix_min - spill_before


# ---------------------------------------------------------------------------
# Schedules and validation


def slot_utilization(assignment: Mapping[int, int], instance: Instance) -> np.ndarray:
    by_id = instance.task_by_id()
    per_slot: list[list[float]] = [[] for _ in range(instance.T_total)]
    for task_id, slot in assignment.items():
        task = by_id.get(task_id)
        if task is None or not 1 <= slot <= instance.T_total:
            continue
        per_slot[slot - 1].append(task.u)
    return np.array([math.fsum(us) for us in per_slot])


def make_schedule(assignment: Mapping[int, int], instance: Instance) -> Schedule:
    """Derive the canonical U/P/beta/revenue for an assignment."""
    assignment = dict(sorted(assignment.items()))
    cfg = instance.config
    U = slot_utilization(assignment, instance)
    P = power_curve(U, cfg)
    beta = battery_levels(P, instance.solar.watts, cfg.beta_max)[:-1]
    by_id = instance.task_by_id()
    revenue = math.fsum(by_id[i].r for i in assignment if i in by_id)
    return Schedule(assignment, U, P, beta, revenue)


@dataclass(frozen=True)
class Violation:
    constraint: str
    slot: int | None = None
    task_id: int | None = None
    detail: str = ""

    def __str__(self) -> str:
        where = []
        if self.task_id is not None:
            where.append(f"task {self.task_id}")
        if self.slot is not None:
            where.append(f"slot {self.slot}")
        return f"{self.constraint} [{', '.join(where)}] {self.detail}".rstrip()


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    revenue: float = 0.0
    U: np.ndarray | None = None
    P: np.ndarray | None = None
    beta: np.ndarray | None = None

    @property
    def accepted(self) -> bool:
        return not self.violations

    def summary(self, limit: int = 10) -> str:
        if self.accepted:
            return f"ACCEPTED (revenue {self.revenue:.6g})"
        lines = [f"REJECTED: {len(self.violations)} violation(s)"]
        lines += [f"  {v}" for v in self.violations[:limit]]
        return "\n".join(lines)


def validate(schedule: Schedule | Mapping[int, int], instance: Instance) -> ValidationReport:
    """Recompute everything from the assignment and list each broken constraint."""
    if isinstance(schedule, Schedule):
        assignment, claimed = schedule.assignment, schedule
    else:
        assignment, claimed = schedule, None
    cfg = instance.config
    T = instance.T_total
    S = instance.solar.watts
    by_id = instance.task_by_id()
    report = ValidationReport()

    # assignment is a mapping, so "at most one slot per task" only needs
    # checking when callers hand in pairs with repeats
    if not isinstance(assignment, Mapping):
        seen = set()
        for task_id, _ in assignment:
            if task_id in seen:
                report.violations.append(Violation("duplicate", task_id=task_id))
            seen.add(task_id)
        assignment = dict(assignment)

    per_slot: list[list[float]] = [[] for _ in range(T)]
    revenue = []
    for task_id, slot in sorted(assignment.items()):
        task = by_id.get(task_id)
        if task is None:
            report.violations.append(Violation("unknown task", slot=slot, task_id=task_id))
            continue
        if not (task.a <= slot <= task.last_start) or not 1 <= slot <= T:
            report.violations.append(Violation(
                "window", slot=slot, task_id=task_id,
                detail=f"allowed {task.a}..{task.last_start}"))
            continue
        per_slot[slot - 1].append(task.u)
        revenue.append(task.r)

    U = np.array([math.fsum(us) for us in per_slot])
    P = power_curve(U, cfg)
    for t in range(T):
        if U[t] > cfg.u_max * (1 + 1e-12):
            report.violations.append(Violation(
                "utilization", slot=t + 1, detail=f"U={U[t]:.6g} > u_max={cfg.u_max}"))
        if P[t] > cfg.p_max * (1 + 1e-12):
            report.violations.append(Violation("power", slot=t + 1, detail=f"P={P[t]:.6g}"))
        if S[t] > cfg.p_max + EPS:
            report.violations.append(Violation("solar bound", slot=t + 1))

    beta = battery_levels(P, S, cfg.beta_max)
    # same recurrence, but a shortfall is reported once and the charge
    # restarts from empty instead of dragging every later slot negative
    b = 0.0
    for t in range(T):
        nxt = b + S[t] - P[t]
        if P[t] > S[t] + b + EPS:
            report.violations.append(Violation(
                "battery trajectory", slot=t + 1,
                detail=f"P={P[t]:.6g} > S+beta={S[t] + b:.6g}"))
            nxt = 0.0
        b = min(cfg.beta_max, nxt)

    report.revenue = math.fsum(revenue)
    report.U, report.P, report.beta = U, P, beta[:-1]

    if claimed is not None and report.accepted:
        if not (np.allclose(claimed.U, U, rtol=1e-9, atol=1e-9)
                and np.allclose(claimed.P, P, rtol=1e-9, atol=1e-6)
                and np.allclose(claimed.beta, beta[:-1], rtol=1e-9, atol=1e-6)
                and math.isclose(claimed.revenue, report.revenue, rel_tol=1e-9, abs_tol=1e-12)):
            report.violations.append(Violation("derived trajectories mismatch"))
    return report


def total_revenue(tasks: Iterable[Task]) -> float:
    return math.fsum(t.r for t in tasks)
