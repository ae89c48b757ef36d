import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings

from conftest import instances, make_task
from oracles import unit_optimum, units_supported
from greenedge.flow_optimal import SINK, SOURCE, build_network, max_flow, slot_capacity, solve_unit_snb
from greenedge.model import EsConfig, Instance, SolarProfile, Task, power_of, validate
from greenedge.offline import schedule_snb

CFG = EsConfig()


def unit(id, a, d):
    return Task(id, a, 1, d, 1.0, 1.0)


def unit_instance(S, tasks, cfg=CFG):
    return Instance(cfg, SolarProfile(S), tasks)


def test_empty_network():
    inst = unit_instance([100.0, 0.0], [])
    net = build_network(inst)
    arcs = list(net.arcs())
    assert len(arcs) == 2 and all(head == SINK for _, head, _, _ in arcs)
    assert max_flow(net) == (0, {})


def test_single_task_arcs():
    inst = unit_instance([2000.0] * 4, [unit(1, 2, 4)])
    net = build_network(inst)
    task = net.task_node(0)
    assert net.arc_between(SOURCE, task) is not None
    assert {net.head[k] for k in net.adj[task] if k % 2 == 0} == {net.slot_node(2), net.slot_node(3)}


def test_three_tasks_capacity_two():
    # S chosen so exactly two unit tasks run: power(2) <= S < power(3)
    S = (power_of(2, CFG) + power_of(3, CFG)) / 2
    assert units_supported(S, 20, 2000, 100) == 2
    inst = unit_instance([S], [unit(i, 1, 2) for i in (1, 2, 3)])
    net = build_network(inst)
    k = net.arc_between(net.slot_node(1), SINK)
    assert net.cap[k] == 2
    value, assignment = max_flow(net)
    assert value == 2 == unit_optimum([[1]] * 3, [2])
    assert sorted(assignment) == [1, 2] and set(assignment.values()) == {1}


def test_disconnected_task_excluded():
    # window lies past the horizon
    inst = unit_instance([2000.0] * 2, [unit(1, 1, 2), Task(2, 2, 1, 3, 1.0, 1.0)])
    base = max_flow(build_network(unit_instance([2000.0] * 2, [unit(1, 1, 2)])))[0]
    value, assignment = max_flow(build_network(inst))
    assert value == base + 1  # task 2 fits at slot 2
    starved = unit_instance([2000.0, 0.0], [unit(1, 1, 2), Task(2, 2, 1, 3, 1.0, 1.0)])
    assert max_flow(build_network(starved))[0] == 1


@pytest.mark.parametrize("T", range(1, 7))
def test_chain_of_full_windows(T):
    S = [power_of(1, CFG)] * T
    inst = unit_instance(S, [unit(i + 1, 1, T + 1) for i in range(T)])
    assert max_flow(build_network(inst))[0] == T == unit_optimum([list(range(1, T + 1))] * T, [1] * T)


def test_slot_capacity_matches_power_curve():
    for S in (0.0, 19.99, 20.0, power_of(1, CFG), power_of(5, CFG) - 1e-9, 1234.5, 2000.0):
        assert slot_capacity(S, unit_instance([S], [])) == units_supported(S, 20, 2000, 100)


@pytest.mark.parametrize("bad", [
    dict(tasks=[make_task(1, 1, 2, 2.0)]),
    dict(tasks=[Task(1, 1, 1, 2, 1.0, 0.5)]),
    dict(tasks=[unit(1, 1, 2)], cfg=EsConfig(beta_max=10)),
])
def test_rejects_non_unit(bad):
    inst = unit_instance([100.0], bad["tasks"], bad.get("cfg", CFG))
    with pytest.raises(ValueError):
        build_network(inst)
    with pytest.raises(ValueError):
        solve_unit_snb(inst)


def _networkx_value(inst):
    G = nx.DiGraph()
    caps = [slot_capacity(s, inst) for s in inst.solar.watts]
    for t, c in enumerate(caps, 1):
        G.add_edge(("slot", t), "sink", capacity=c)
    for task in inst.tasks:
        G.add_edge("src", ("task", task.id), capacity=1)
        for t in range(task.a, min(task.last_start, inst.T_total) + 1):
            G.add_edge(("task", task.id), ("slot", t), capacity=1)
    if "src" not in G:
        return 0
    return nx.maximum_flow_value(G, "src", "sink")


@settings(max_examples=150)
@given(instances(max_tasks=12, max_T=6, unit=True))
def test_matches_brute_force_and_networkx(inst):
    sched = solve_unit_snb(inst)
    caps = [slot_capacity(s, inst) for s in inst.solar.watts]
    windows = [list(range(t.a, min(t.last_start, inst.T_total) + 1)) for t in inst.tasks]
    opt = unit_optimum(windows, caps)
    assert sched.revenue == opt == _networkx_value(inst)
    assert validate(sched, inst).accepted
    assert schedule_snb(inst).revenue <= sched.revenue


@settings(max_examples=60)
@given(instances(max_tasks=12, max_T=6, unit=True))
def test_flows_are_integral_and_conserved(inst):
    net = build_network(inst)
    value, _ = max_flow(net)
    inflow = np.zeros(net.n_nodes, dtype=int)
    for tail, head, cap, flow in net.arcs():
        assert isinstance(flow, int) and 0 <= flow <= cap
        inflow[head] += flow
        inflow[tail] -= flow
    assert inflow[SINK] == value and inflow[SOURCE] == -value
    assert not inflow[2:].any()
