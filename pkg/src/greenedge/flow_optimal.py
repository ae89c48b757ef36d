"""Exact solver for unit tasks without a battery, as a maximum flow.

Every task carries one unit of flow from the source through one slot of its
window to the sink. A slot passes at most as many units as its own solar
power can run, so the max flow equals the best achievable revenue.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .model import EPS, Instance, Schedule, make_schedule, power_of, utilization_of

SOURCE = 0
SINK = 1


@dataclass
class FlowNetwork:
    """Directed graph with paired residual arcs.

    Arc ``k`` and ``k ^ 1`` are a forward arc and its residual twin. Task
    ``j`` (position in ``task_ids``) is node ``2 + j``; slot ``t`` is node
    ``slot_node(t)``.
    """

    task_ids: list[int]
    T: int
    head: list[int] = field(default_factory=list)
    cap: list[int] = field(default_factory=list)
    flow: list[int] = field(default_factory=list)
    adj: list[list[int]] = field(default_factory=list)

    def __post_init__(self):
        if not self.adj:
            self.adj = [[] for _ in range(self.n_nodes)]

    @property
    def n_nodes(self) -> int:
        return 2 + len(self.task_ids) + self.T

    def task_node(self, j: int) -> int:
        return 2 + j

    def slot_node(self, t: int) -> int:
        return 2 + len(self.task_ids) + t - 1

    def add_arc(self, u: int, v: int, capacity: int) -> int:
        if capacity < 0 or capacity != int(capacity):
            raise ValueError(f"arc capacity must be a non-negative integer, got {capacity}")
        k = len(self.head)
        self.head += [v, u]
        self.cap += [int(capacity), 0]
        self.flow += [0, 0]
        self.adj[u].append(k)
        self.adj[v].append(k + 1)
        return k

    def arcs(self):
        """Forward arcs as ``(tail, head, capacity, flow)``."""
        for k in range(0, len(self.head), 2):
            yield self.head[k + 1], self.head[k], self.cap[k], self.flow[k]

    def residual(self, k: int) -> int:
        return self.cap[k] - self.flow[k]

    def arc_between(self, u: int, v: int) -> int | None:
        for k in self.adj[u]:
            if k % 2 == 0 and self.head[k] == v:
                return k
        return None


def slot_capacity(S_t: float, instance: Instance) -> int:
    """Number of unit tasks slot power ``S_t`` can run, with the validator's slack."""
    cfg = instance.config
    k = math.floor(min(cfg.u_max, utilization_of(S_t + EPS, cfg)) + 1e-9)
    while k > 0 and power_of(k, cfg) > S_t + EPS:
        k -= 1
    return int(max(k, 0))


def _check_unit(instance: Instance):
    if instance.config.beta_max != 0:
        raise ValueError("flow reduction needs beta_max = 0")
    for task in instance.tasks:
        if task.u != 1 or task.r != 1:
            raise ValueError(f"flow reduction needs unit tasks, task {task.id} has u={task.u}, r={task.r}")


def build_network(instance: Instance) -> FlowNetwork:
    _check_unit(instance)
    T = instance.T_total
    net = FlowNetwork([task.id for task in instance.tasks], T)
    for j, task in enumerate(instance.tasks):
        node = net.task_node(j)
        net.add_arc(SOURCE, node, 1)
        for t in range(task.a, min(task.last_start, T) + 1):
            net.add_arc(node, net.slot_node(t), 1)
    for t in range(1, T + 1):
        net.add_arc(net.slot_node(t), SINK, slot_capacity(instance.solar[t], instance))
    return net


def max_flow(net: FlowNetwork) -> tuple[int, dict[int, int]]:
    """Shortest augmenting paths; returns the flow value and task -> slot."""
    value = 0
    n = net.n_nodes
    while True:
        parent_arc = [-1] * n
        parent_arc[SOURCE] = -2
        queue = deque([SOURCE])
        while queue and parent_arc[SINK] == -1:
            u = queue.popleft()
            for k in net.adj[u]:
                v = net.head[k]
                if parent_arc[v] == -1 and net.cap[k] - net.flow[k] > 0:
                    parent_arc[v] = k
                    queue.append(v)
        if parent_arc[SINK] == -1:
            break
        # bottleneck, then push
        push = math.inf
        v = SINK
        while v != SOURCE:
            k = parent_arc[v]
            push = min(push, net.cap[k] - net.flow[k])
            v = net.head[k ^ 1]
        v = SINK
        while v != SOURCE:
            k = parent_arc[v]
            net.flow[k] += push
            net.flow[k ^ 1] -= push
            v = net.head[k ^ 1]
        value += push

    first_slot = net.slot_node(1)
    assignment = {}
    for j, task_id in enumerate(net.task_ids):
        for k in net.adj[net.task_node(j)]:
            if k % 2 == 0 and net.flow[k] > 0:
                assignment[task_id] = net.head[k] - first_slot + 1
    return int(value), assignment


def solve_unit_snb(instance: Instance) -> Schedule:
    """Revenue-optimal schedule of a unit-task, battery-free instance."""
    net = build_network(instance)
    _, assignment = max_flow(net)
    return make_schedule(assignment, instance)
