"""Offline heuristics: no battery (reverse greedy sweep), infinite battery
(peak-to-valley task moves) and finite battery (moves towards the average
draw, bounded by free storage).

All three share :class:`SchedulerState`. Priority between tasks is
``(-r, id)``: higher revenue first, smaller id on ties. Slot ties go to the
smaller slot index.
"""
from __future__ import annotations

import heapq
import math

import numpy as np

from .model import (
    Instance,
    Schedule,
    Task,
    headroom,
    make_schedule,
    power_of,
    usable_utilization,
    utilization_of,
)


class SchedulerState:
    """Per-slot load, executed sets and the task queue of one solve.

    ``battery=False`` caps every slot by its own solar power. With
    ``battery=True`` the cap at a slot is whatever extra power it can draw
    without making any later slot infeasible under ``config.beta_max``.
    """

    def __init__(self, instance: Instance, battery: bool = True):
        self.instance = instance
        self.cfg = instance.config
        self.T = instance.T_total
        self.S = instance.solar.watts
        self.beta_max = self.cfg.beta_max if battery else 0.0

        tasks = instance.tasks
        self.tasks = tasks
        self.index = {task.id: i for i, task in enumerate(tasks)}
        self.u = [task.u for task in tasks]
        self.r = [task.r for task in tasks]
        self.first = [task.a for task in tasks]
        self.last = [min(task.last_start, self.T) for task in tasks]

        # candidate lists per slot (0-based), already in priority order
        order = sorted(range(len(tasks)), key=lambda i: (-tasks[i].r, tasks[i].id))
        self.rank = [0] * len(tasks)
        for pos, i in enumerate(order):
            self.rank[i] = pos
        self.cover: list[list[int]] = [[] for _ in range(self.T)]
        for i in order:
            for t in range(self.first[i], self.last[i] + 1):
                self.cover[t - 1].append(i)
        self.n_queued = np.array([len(c) for c in self.cover], dtype=np.int64)
        # scan shortcuts for best_fitting, reset whenever a task is requeued:
        # cover[t][:head[t]] all run, and a (cap, load) pair that found nothing
        self._head = [0] * self.T
        self._miss: list[tuple[float, float] | None] = [None] * self.T

        self.slot_of = [0] * len(tasks)  # 0 means "in TQ"
        self.running: list[list[int]] = [[] for _ in range(self.T)]
        self.U = np.zeros(self.T)
        self.P = np.zeros(self.T)
        self.R = 0.0
        self._headroom: np.ndarray | None = None

    # -- capacity ---------------------------------------------------------

    def headroom(self) -> np.ndarray:
        if self._headroom is None:
            self._headroom = headroom(self.P, self.S, self.beta_max)
        return self._headroom

    def u_canbe(self, t: int) -> float:
        """Utilization ceiling of slot ``t`` (1-based) under the current plan."""
        if self.beta_max == 0:
            return usable_utilization(self.S[t - 1], 0.0, self.cfg)
        h = self.headroom()[t - 1]
        return min(self.cfg.u_max, utilization_of(self.P[t - 1] + max(h, 0.0), self.cfg))

    # -- primitive moves --------------------------------------------------

    def _set_slot(self, t: int):
        us = [self.u[j] for j in self.running[t - 1]]
        self.U[t - 1] = math.fsum(us)
        self.P[t - 1] = power_of(self.U[t - 1], self.cfg) if us else 0.0
        self._headroom = None

    def fits(self, i: int, t: int) -> bool:
        return self.U[t - 1] + self.u[i] <= self.u_canbe(t)

    def execute(self, i: int, t: int):
        self.slot_of[i] = t
        self.running[t - 1].append(i)
        self._set_slot(t)
        self.R += self.r[i]
        self.n_queued[self.first[i] - 1:self.last[i]] -= 1

    def unexecute(self, i: int) -> float:
        t = self.slot_of[i]
        before = self.P[t - 1]
        self.running[t - 1].remove(i)
        self.slot_of[i] = 0
        self._set_slot(t)
        self.R -= self.r[i]
        self.n_queued[self.first[i] - 1:self.last[i]] += 1
        for k in range(self.first[i] - 1, self.last[i]):
            self._head[k] = 0
            self._miss[k] = None
        return before - self.P[t - 1]

    def lowest_running(self, t: int) -> int | None:
        run = self.running[t - 1]
        return max(run, key=self.rank.__getitem__) if run else None

    def best_fitting(self, t: int) -> int | None:
        """Highest-priority queued task that fits at ``t``."""
        k = t - 1
        if self.n_queued[k] == 0:
            return None
        cap = self.u_canbe(t)
        load = self.U[k]
        if cap <= load:
            return None
        # the queue only shrank since the miss, so a tighter slot still misses
        miss = self._miss[k]
        if miss is not None and cap <= miss[0] and load >= miss[1]:
            return None
        slot_of, u, cover = self.slot_of, self.u, self.cover[k]
        head = self._head[k]
        while head < len(cover) and slot_of[cover[head]]:
            head += 1
        self._head[k] = head
        for pos in range(head, len(cover)):
            i = cover[pos]
            if slot_of[i] == 0 and load + u[i] <= cap:
                return i
        self._miss[k] = (cap, load)
        return None

    def assignment(self) -> dict[int, int]:
        return {self.tasks[i].id: t for i, t in enumerate(self.slot_of) if t}

    def to_schedule(self) -> Schedule:
        return make_schedule(self.assignment(), self.instance)


class _Journal:
    """Undo log for one speculative round."""

    def __init__(self, state: SchedulerState):
        self.state = state
        self.ops: list[tuple[str, int, int]] = []
        self.gained: list[float] = []
        self.lost: list[float] = []

    def execute(self, i: int, t: int) -> float:
        st = self.state
        before = st.P[t - 1]
        st.execute(i, t)
        self.ops.append(("exe", i, t))
        self.gained.append(st.r[i])
        return st.P[t - 1] - before

    def drop(self, i: int) -> float:
        st = self.state
        t = st.slot_of[i]
        saved = st.unexecute(i)
        self.ops.append(("drop", i, t))
        self.lost.append(st.r[i])
        return saved

    @property
    def delta(self) -> float:
        return math.fsum(self.gained) - math.fsum(self.lost)

    def revert(self):
        st = self.state
        for op, i, t in reversed(self.ops):
            if op == "exe":
                st.unexecute(i)
            else:
                st.execute(i, t)
        self.ops.clear()


# ---------------------------------------------------------------------------
# Single-task procedures


def _check_window(state: SchedulerState, i: int, t: int):
    if not state.first[i] <= t <= state.last[i]:
        task = state.tasks[i]
        raise ValueError(f"slot {t} outside window {task.a}..{task.last_start} of task {task.id}")


def try_execute(task: Task, t: int, state: SchedulerState) -> bool:
    """Run ``task`` at ``t`` if the slot's utilization ceiling allows it."""
    i = state.index[task.id]
    _check_window(state, i, t)
    if state.slot_of[i]:
        raise ValueError(f"task {task.id} already executes at slot {state.slot_of[i]}")
    if state.fits(i, t):
        state.execute(i, t)
        return True
    return False


def drop_task(task: Task, t: int, state: SchedulerState) -> float:
    """Return ``task`` to the queue; the result is the power freed at ``t``."""
    i = state.index[task.id]
    if state.slot_of[i] != t:
        raise ValueError(f"task {task.id} is not executing at slot {t}")
    return state.unexecute(i)


# ---------------------------------------------------------------------------
# Schedulers


def _sweep_no_battery(state: SchedulerState):
    umin = min(state.u, default=0.0)
    for t in range(state.T, 0, -1):
        cap = state.u_canbe(t)
        if cap < umin:
            continue
        for i in state.cover[t - 1]:
            if state.slot_of[i]:
                continue
            if state.U[t - 1] + state.u[i] <= cap:
                state.execute(i, t)
                if cap - state.U[t - 1] < umin:
                    break


def _fill_stored(state: SchedulerState):
    """Place queued tasks into capacity that only exists thanks to storage.

    Slots are visited in time order, so charge is spent soon after it is
    harvested rather than hoarded for the emptier late slots.
    """
    for t in range(1, state.T + 1):
        while True:
            i = state.best_fitting(t)
            if i is None:
                break
            state.execute(i, t)


def _initial_state(instance: Instance) -> SchedulerState:
    base = SchedulerState(instance, battery=False)
    _sweep_no_battery(base)
    state = SchedulerState(instance, battery=True)
    for i, t in enumerate(base.slot_of):
        if t:
            state.slot_of[i] = t
            state.running[t - 1].append(i)
            state.R += state.r[i]
            state.n_queued[state.first[i] - 1:state.last[i]] -= 1
    for t in range(1, state.T + 1):
        if state.running[t - 1]:
            state._set_slot(t)
    _fill_stored(state)
    return state


def schedule_snb(instance: Instance) -> Schedule:
    """Latest-slot-first greedy by revenue, each slot powered by its own sun.

    The plan ignores the battery; the returned trajectories still follow the
    instance's battery, which simply collects the unused surplus.
    """
    state = SchedulerState(instance, battery=False)
    _sweep_no_battery(state)
    return make_schedule(state.assignment(), instance)


def _argmax_busy(values: np.ndarray, U: np.ndarray, excluded: set[int] | None = None) -> int | None:
    mask = U > 0
    if excluded:
        idx = np.fromiter((t - 1 for t in excluded), dtype=np.int64)
        mask[idx] = False
    if not mask.any():
        return None
    masked = np.where(mask, values, -np.inf)
    return int(np.argmax(masked)) + 1


def schedule_sib(instance: Instance, max_rounds: int | None = None) -> Schedule:
    """Shift load from the busiest slot to the idlest later slots.

    Each round drops the cheapest task at the highest-utilization slot and
    spends the freed power on the best queued tasks at the least-loaded
    later slots. A round is kept only if total revenue went up; otherwise
    it is undone and that peak is not tried again.
    """
    state = _initial_state(instance)
    ineligible: set[int] = set()
    rounds = 0
    while max_rounds is None or rounds < max_rounds:
        if not state.n_queued.any():
            break
        t_max = _argmax_busy(state.U, state.U, ineligible)
        if t_max is None:
            break
        rounds += 1
        journal = _Journal(state)
        p_save = journal.drop(state.lowest_running(t_max))

        # later slots ordered by load; a slot with nothing that fits is
        # skipped for the rest of the round
        heap = [(state.U[t - 1], t) for t in range(t_max + 1, state.T + 1) if state.n_queued[t - 1]]
        heapq.heapify(heap)
        while p_save > 0 and heap:
            _, t_min = heapq.heappop(heap)
            i = state.best_fitting(t_min)
            if i is None:
                continue
            p_save -= journal.execute(i, t_min)
            if state.n_queued[t_min - 1]:
                heapq.heappush(heap, (state.U[t_min - 1], t_min))

        if journal.delta > 0:
            continue
        journal.revert()
        ineligible.add(t_max)
    return make_schedule(state.assignment(), instance)


def schedule_sfb(instance: Instance, max_rounds: int | None = None) -> Schedule:
    """Move power from the peak slot to the nearest later below-average slot.

    The amount moved per round is bounded by the battery capacity left over
    by earlier moves along the storage interval, and by how far both slots
    sit from the average draw of the initial no-battery plan.
    """
    state = _initial_state(instance)
    B = state.beta_max
    p_avg = float(state.P.sum()) / state.T if state.T else 0.0
    # charge reserved by committed moves, indexed by slot start (0 = slot 1)
    reserved = np.zeros(state.T + 1)
    ineligible: set[int] = set()
    rounds = 0
    while max_rounds is None or rounds < max_rounds:
        if not state.n_queued.any():
            break
        t_max = _argmax_busy(state.P, state.U, ineligible)
        if t_max is None:
            break
        below = np.flatnonzero(state.P[t_max:] < p_avg)
        if len(below) == 0:
            ineligible.add(t_max)
            continue
        t_min = t_max + 1 + int(below[0])
        rounds += 1

        # the moved power sits in the battery at the start of t_max+1 .. t_min
        p_move = min(B - float(reserved[t_max:t_min].max()),
                     state.P[t_max - 1] - p_avg,
                     p_avg - state.P[t_min - 1])

        journal = _Journal(state)
        moved = 0.0
        while p_move > 0:
            victim = state.lowest_running(t_max)
            if victim is None:
                break
            p_save = journal.drop(victim)
            freed = p_save
            while p_save > 0:
                i = state.best_fitting(t_min)
                if i is None:
                    break
                p_save -= journal.execute(i, t_min)
            p_move -= freed
            moved += freed

        if journal.delta > 0:
            reserved[t_max:t_min] += moved
            continue
        journal.revert()
        ineligible.add(t_max)
    return make_schedule(state.assignment(), instance)


def schedule_offline(instance: Instance) -> Schedule:
    """Pick the heuristic matching the battery: none, finite or unbounded."""
    cfg = instance.config
    if cfg.beta_max == 0:
        return schedule_snb(instance)
    if cfg.infinite_battery:
        return schedule_sib(instance)
    return schedule_sfb(instance)
