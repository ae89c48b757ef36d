import numpy as np
import pytest
from hypothesis import given, settings

from conftest import instances, make_task
from oracles import general_optimum
from greenedge.model import INFINITE, EsConfig, Instance, SolarProfile, Task, power_of, validate
from greenedge.offline import (
    SchedulerState,
    drop_task,
    schedule_offline,
    schedule_sfb,
    schedule_sib,
    schedule_snb,
    try_execute,
)

UNIT_CAP = EsConfig(p_s=0.0, p_max=1.0, u_max=1.0)  # power(U) = U^3, so S=1 gives cap 1


def state_with(tasks, S, cfg=UNIT_CAP, battery=False):
    return SchedulerState(Instance(cfg, SolarProfile(S), tasks), battery=battery)


class TestTryExecute:
    def test_fits(self):
        t = make_task(1, 1, 2, 1.0)
        st_ = state_with([t], [1.0])
        assert try_execute(t, 1, st_)
        assert st_.R == t.r and st_.U[0] == 1.0

    def test_capacity_exceeded(self):
        a, b = make_task(1, 1, 2, 0.5), make_task(2, 1, 2, 1.0)
        st_ = state_with([a, b], [1.0])
        assert try_execute(a, 1, st_)
        assert not try_execute(b, 1, st_)
        assert st_.U[0] == 0.5 and st_.R == a.r

    def test_sequence(self):
        tasks = [make_task(i, 1, 2, 0.4) for i in (1, 2, 3)]
        st_ = state_with(tasks, [1.0])
        assert [try_execute(t, 1, st_) for t in tasks] == [True, True, False]

    def test_rejects_outside_window(self):
        t = make_task(1, 2, 3, 0.5)
        st_ = state_with([t], [1.0, 1.0, 1.0])
        with pytest.raises(ValueError):
            try_execute(t, 1, st_)
        with pytest.raises(ValueError):
            try_execute(t, 3, st_)
        assert try_execute(t, 2, st_)
        with pytest.raises(ValueError):
            try_execute(t, 2, st_)


class TestDropTask:
    def test_only_task(self):
        t = make_task(1, 1, 2, 0.5)
        st_ = state_with([t], [1.0])
        try_execute(t, 1, st_)
        assert drop_task(t, 1, st_) == power_of(0.5, UNIT_CAP)
        assert st_.U[0] == 0 and st_.P[0] == 0 and st_.R == 0

    def test_saved_power(self):
        cfg = EsConfig(p_s=20, p_max=2000, u_max=100)
        big, small = make_task(1, 1, 2, 40.0), make_task(2, 1, 2, 10.0)
        st_ = state_with([big, small], [2000.0], cfg)
        try_execute(big, 1, st_)
        try_execute(small, 1, st_)
        assert drop_task(small, 1, st_) == pytest.approx(120.78, abs=0.01)

    def test_drop_then_reexecute_is_identity(self):
        rng = np.random.default_rng(5)
        tasks = [make_task(i + 1, 1, 3, float(u)) for i, u in enumerate(rng.uniform(0.1, 5, 6))]
        st_ = state_with(tasks, [2000.0, 2000.0], EsConfig())
        for t in tasks:
            try_execute(t, 1, st_)
        U, P, R = st_.U.copy(), st_.P.copy(), st_.R
        drop_task(tasks[2], 1, st_)
        try_execute(tasks[2], 1, st_)
        assert np.array_equal(U, st_.U) and np.array_equal(P, st_.P)
        assert st_.R == pytest.approx(R, abs=1e-15)

    def test_rejects_unassigned(self):
        t = make_task(1, 1, 2, 0.5)
        with pytest.raises(ValueError):
            drop_task(t, 1, state_with([t], [1.0]))


class TestSNB:
    def test_last_window_slot(self):
        t = make_task(1, 2, 6, 0.5)
        s = schedule_snb(Instance(UNIT_CAP, SolarProfile([1.0] * 6), [t]))
        assert s.assignment == {1: 5}

    def test_zero_sun(self):
        s = schedule_snb(Instance(EsConfig(), SolarProfile([0.0] * 5), [make_task(1, 1, 3, 1.0)]))
        assert s.assignment == {} and s.revenue == 0

    def test_prefers_revenue_then_id(self):
        tasks = [make_task(1, 1, 2, 0.6), make_task(2, 1, 2, 0.6), make_task(3, 1, 3, 0.9)]
        s = schedule_snb(Instance(UNIT_CAP, SolarProfile([1.0]), tasks))
        # one task fits; tasks 1 and 2 tie on revenue and beat task 3
        assert tasks[2].r < tasks[0].r == tasks[1].r
        assert s.assignment == {1: 1}

    @settings(max_examples=80)
    @given(instances(max_tasks=10, max_T=6))
    def test_never_uses_battery(self, inst):
        s = schedule_snb(inst)
        assert np.all(s.P <= inst.solar.watts + 1e-6)
        assert validate(s, inst).accepted
        if inst.config.beta_max == 0:
            assert not s.beta.any()


def _two_slot(beta_max):
    """Slot 1 can run two unit tasks, slot 2 has no sun.

    Dropping the cheaper slot-1 task frees power(2) - power(1) = 7, far more
    than the unit task confined to slot 2 needs (power(1) = 1).
    """
    cfg = EsConfig(p_s=0.0, p_max=8.0, u_max=2.0, beta_max=beta_max)
    tasks = [
        make_task(1, 1, 3, 1.0),  # window {1, 2}, r = 0.2
        make_task(2, 1, 2, 1.0),  # window {1},    r = 0.5
        make_task(3, 2, 3, 1.0),  # window {2},    r = 0.5
    ]
    return Instance(cfg, SolarProfile([power_of(2, cfg), 0.0]), tasks)


class TestSIB:
    def test_moves_power_to_dark_slot(self):
        inst = _two_slot(INFINITE)
        snb, sib = schedule_snb(inst), schedule_sib(inst)
        assert snb.assignment == {1: 1, 2: 1}
        assert sib.assignment == {2: 1, 3: 2}
        assert sib.revenue == pytest.approx(snb.revenue + 0.3)
        assert validate(sib, inst).accepted

    def test_no_improving_move(self):
        tasks = [make_task(i, i, i + 1, 1.0) for i in (1, 2, 3)]
        inst = Instance(EsConfig(beta_max=INFINITE), SolarProfile([2000.0] * 3), tasks)
        assert schedule_sib(inst).assignment == schedule_snb(inst).assignment

    def test_round_budget(self):
        inst = _two_slot(INFINITE)
        assert schedule_sib(inst, max_rounds=0).assignment == schedule_snb(inst).assignment


class TestSFB:
    def test_zero_capacity_is_snb(self):
        inst = _two_slot(0.0)
        assert schedule_sfb(inst).revenue == schedule_snb(inst).revenue

    def test_capacity_exactly_sufficient(self):
        # slot 2 needs power(1) = 1 W-slot of stored charge
        inst = _two_slot(1.0)
        assert schedule_sfb(inst).revenue == pytest.approx(schedule_sib(_two_slot(INFINITE)).revenue)

    def test_capacity_one_unit_short(self):
        inst = _two_slot(0.0)
        assert schedule_sfb(inst).revenue == schedule_snb(inst).revenue
        short = _two_slot(0.999)  # just below the 1 W-slot needed
        assert schedule_sfb(short).revenue == schedule_snb(short).revenue

    def test_big_battery_improves(self):
        inst = _two_slot(50.0)
        assert schedule_sfb(inst).revenue > schedule_snb(inst).revenue


def test_dispatch():
    assert schedule_offline(_two_slot(0.0)).assignment == schedule_snb(_two_slot(0.0)).assignment
    assert schedule_offline(_two_slot(INFINITE)).assignment == schedule_sib(_two_slot(INFINITE)).assignment
    assert schedule_offline(_two_slot(3.0)).assignment == schedule_sfb(_two_slot(3.0)).assignment


@settings(max_examples=150)
@given(instances(max_tasks=14, max_T=8))
def test_heuristics_feasible_and_monotone(inst):
    snb = schedule_snb(inst)
    assert validate(snb, inst).accepted
    for solver in (schedule_sib, schedule_sfb):
        if solver is schedule_sfb and inst.config.infinite_battery:
            continue
        s = solver(inst)
        rep = validate(s, inst)
        assert rep.accepted, rep.summary()
        assert s.revenue >= snb.revenue - 1e-12


@settings(max_examples=60)
@given(instances(max_tasks=5, max_T=3))
def test_heuristics_below_exhaustive_optimum(inst):
    cfg = inst.config
    tasks = [(t.a, t.last_start, t.u, t.r) for t in inst.tasks]
    opt = general_optimum(tasks, list(inst.solar.watts), cfg.p_s, cfg.p_max, cfg.u_max, cfg.beta_max)
    assert schedule_offline(inst).revenue <= opt + 1e-9
    assert schedule_snb(inst).revenue <= opt + 1e-9


@settings(max_examples=30)
@given(instances(max_tasks=14, max_T=8))
def test_deterministic(inst):
    a, b = schedule_offline(inst), schedule_offline(inst)
    assert a.assignment == b.assignment and a.revenue == b.revenue
    assert np.array_equal(a.P, b.P)


def test_equal_revenue_ties_go_to_smaller_id():
    tasks = [Task(2, 1, 1, 2, 1.0, 1.0), Task(1, 1, 1, 2, 1.0, 1.0)]
    s = schedule_snb(Instance(UNIT_CAP, SolarProfile([1.0]), tasks))
    assert s.assignment == {1: 1}


@pytest.mark.parametrize("beta", [0.0, 500.0, 5000.0, INFINITE])
def test_medium_random_instances_validate(beta):
    from conftest import random_instance

    rng = np.random.default_rng(11)
    for _ in range(5):
        inst = random_instance(rng, 300, 40, beta)
        s = schedule_offline(inst)
        assert validate(s, inst).accepted
        assert s.revenue >= schedule_snb(inst).revenue
