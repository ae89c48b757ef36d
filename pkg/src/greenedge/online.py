"""Slot-by-slot repair of an offline plan against what actually happens.

The plan is computed from predicted tasks and solar power. At every slot the
planned tasks that really arrived are committed; if the actual power cannot
carry them, the lowest-revenue ones are evicted back to the task queue. If
the slot ends up with more spare power than the plan expected (more sun,
or planned tasks that never showed up), the best queued tasks are admitted
into that extra budget.

Admission is limited to the extra spare relative to the plan, so when
nothing deviates the plan is replayed unchanged even if it deliberately left
charge in the battery for later slots.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .model import EPS, Instance, Schedule, Task, battery_levels, make_schedule, power_of


@dataclass
class TraceRow:
    slot: int
    S_pred: float
    S_actual: float
    committed: int
    evictions: int
    admissions: int
    beta: float
    P: float
    cum_R: float


@dataclass
class MetricsReport:
    revenue: float
    offline_revenue: float
    completed: int
    evictions: int
    admissions: int
    trace: list[TraceRow]

    @property
    def revenue_pct(self) -> float:
        if self.offline_revenue == 0:
            return 100.0 if self.revenue == 0 else math.inf
        return 100.0 * (self.revenue / self.offline_revenue)


@dataclass
class OnlineContext:
    """Inputs of one online run plus the queues it works on.

    ``exec_heap`` holds ``(r, -id, task)`` of the tasks committed at the
    current slot, so the cheapest is evicted first. ``tq_heap`` holds
    ``(-r, id, task)`` of released but unscheduled tasks, best first.
    """

    offline_schedule: Schedule
    predicted: Instance
    actual: Instance
    exec_heap: list = field(default_factory=list)
    tq_heap: list = field(default_factory=list)
    beta_t: float = 0.0

    def __post_init__(self):
        if self.predicted.T_total != self.actual.T_total:
            raise ValueError(
                f"predicted horizon {self.predicted.T_total} != actual horizon {self.actual.T_total}")


def _slot_power(us: list[float], ctx: OnlineContext) -> tuple[float, float]:
    U = math.fsum(us)
    return U, (power_of(U, ctx.actual.config) if us else 0.0)


def run_online(ctx: OnlineContext) -> tuple[Schedule, MetricsReport]:
    cfg = ctx.actual.config
    T = ctx.actual.T_total
    S_act = ctx.actual.solar.watts
    S_pred = ctx.predicted.solar.watts
    plan = ctx.offline_schedule
    plan_beta = battery_levels(plan.P, S_pred, cfg.beta_max)

    arrivals: list[list[Task]] = [[] for _ in range(T + 1)]
    planned_at: list[list[Task]] = [[] for _ in range(T + 1)]
    for task in ctx.actual.tasks:
        slot = plan.assignment.get(task.id)
        if slot is not None and task.a <= slot <= min(task.last_start, T):
            planned_at[slot].append(task)
        else:
            arrivals[task.a].append(task)

    ctx.exec_heap, ctx.tq_heap, ctx.beta_t = [], [], 0.0
    assignment: dict[int, int] = {}
    cum_R = 0.0
    trace: list[TraceRow] = []
    n_evict = n_admit = 0

    for t in range(1, T + 1):
        b = ctx.beta_t
        for task in arrivals[t]:
            heapq.heappush(ctx.tq_heap, (-task.r, task.id, task))

        ctx.exec_heap = [(task.r, -task.id, task) for task in planned_at[t]]
        heapq.heapify(ctx.exec_heap)
        us = [task.u for task in planned_at[t]]
        U, P = _slot_power(us, ctx)

        # not enough power: shed the cheapest committed tasks
        evicted = 0
        while ctx.exec_heap and P > S_act[t - 1] + b + EPS:
            _, _, task = heapq.heappop(ctx.exec_heap)
            heapq.heappush(ctx.tq_heap, (-task.r, task.id, task))
            evicted += 1
            U, P = _slot_power([e[2].u for e in ctx.exec_heap], ctx)

        # spare beyond what the plan expected: admit the best queued tasks
        admitted = 0
        spare = b + S_act[t - 1] - P
        planned_spare = plan_beta[t - 1] + S_pred[t - 1] - plan.P[t - 1]
        budget = min(spare - planned_spare, spare)
        if budget > EPS and ctx.tq_heap:
            passed = []
            while ctx.tq_heap and budget > EPS and U < cfg.u_max:
                item = heapq.heappop(ctx.tq_heap)
                task = item[2]
                if task.last_start < t:
                    continue  # window closed
                if U + task.u > cfg.u_max:
                    passed.append(item)
                    continue
                U_new, P_new = _slot_power([e[2].u for e in ctx.exec_heap] + [task.u], ctx)
                if P_new - P <= budget and P_new <= S_act[t - 1] + b + EPS:
                    heapq.heappush(ctx.exec_heap, (task.r, -task.id, task))
                    budget -= P_new - P
                    U, P = U_new, P_new
                    admitted += 1
                else:
                    passed.append(item)
            for item in passed:
                heapq.heappush(ctx.tq_heap, item)

        for _, _, task in ctx.exec_heap:
            assignment[task.id] = t
        cum_R = math.fsum([cum_R] + [e[0] for e in ctx.exec_heap])
        ctx.beta_t = min(cfg.beta_max, b + S_act[t - 1] - P)
        n_evict += evicted
        n_admit += admitted
        trace.append(TraceRow(t, float(S_pred[t - 1]), float(S_act[t - 1]), len(ctx.exec_heap),
                              evicted, admitted, b, P, cum_R))

        # drop expired entries so the queue only holds live tasks
        if ctx.tq_heap and any(item[2].last_start <= t for item in ctx.tq_heap):
            ctx.tq_heap = [item for item in ctx.tq_heap if item[2].last_start > t]
            heapq.heapify(ctx.tq_heap)

    schedule = make_schedule(assignment, ctx.actual)
    report = MetricsReport(schedule.revenue, plan.revenue, schedule.completed, n_evict, n_admit, trace)
    return schedule, report


def online_from_plan(plan: Schedule, predicted: Instance, actual: Instance) -> tuple[Schedule, MetricsReport]:
    return run_online(OnlineContext(plan, predicted, actual))


def trace_array(report: MetricsReport) -> np.ndarray:
    """Trace as a structured array, one record per slot."""
    names = list(TraceRow.__dataclass_fields__)
    return np.array([tuple(getattr(row, n) for n in names) for row in report.trace],
                    dtype=[(n, float) for n in names])
