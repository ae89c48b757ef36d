"""Comparison schedulers: forward greedy sweeps with no power planning.

Every policy walks the slots in order, powers slot ``t`` from ``S_t`` plus
whatever the battery holds, and stores any surplus up to ``beta_max``.
"""
from __future__ import annotations

import enum
import math

from .model import Instance, Schedule, make_schedule, power_of, usable_utilization


class BaselinePolicy(enum.Enum):
    NPEDF = "npedf"  # least slack first, tasks wait while their window is open
    ASAP_HUF = "asap_huf"  # highest utilization first
    ASAP_LUF = "asap_luf"  # lowest utilization first
    EA = "ea"  # execute on arrival by revenue, otherwise drop

    @classmethod
    def parse(cls, name: str) -> "BaselinePolicy":
        key = name.strip().lower().replace("-", "_")
        for policy in cls:
            if key in (policy.value, policy.name.lower()):
                return policy
        raise ValueError(f"unknown baseline policy {name!r}")


def _order_key(policy: BaselinePolicy, t: int):
    if policy is BaselinePolicy.NPEDF:
        return lambda task: (task.d - t - task.e, task.id)
    if policy is BaselinePolicy.ASAP_HUF:
        return lambda task: (-task.u, task.id)
    if policy is BaselinePolicy.ASAP_LUF:
        return lambda task: (task.u, task.id)
    return lambda task: (-task.r, task.id)


def run_baseline(instance: Instance, policy: BaselinePolicy | str) -> Schedule:
    if isinstance(policy, str):
        policy = BaselinePolicy.parse(policy)
    cfg = instance.config
    S = instance.solar.watts
    T = instance.T_total

    arrivals: list[list] = [[] for _ in range(T + 1)]
    for task in instance.tasks:
        arrivals[task.a].append(task)

    assignment: dict[int, int] = {}
    pending = []
    beta = 0.0
    for t in range(1, T + 1):
        if policy is BaselinePolicy.EA:
            pending = arrivals[t]
        else:
            pending = [task for task in pending if task.last_start >= t] + arrivals[t]
        cap = usable_utilization(S[t - 1], beta, cfg)
        used: list[float] = []
        load = 0.0
        waiting = []
        for task in sorted(pending, key=_order_key(policy, t)):
            if load + task.u <= cap:
                assignment[task.id] = t
                used.append(task.u)
                load = math.fsum(used)
            else:
                waiting.append(task)
        pending = waiting
        P = power_of(load, cfg) if used else 0.0
        beta = min(cfg.beta_max, beta + S[t - 1] - P)
    return make_schedule(assignment, instance)
