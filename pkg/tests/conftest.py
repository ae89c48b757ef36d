from __future__ import annotations

import math
import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from greenedge.model import INFINITE, EsConfig, Instance, SolarProfile, Task, revenue_of  # noqa: E402

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def small_cfg():
    return EsConfig(p_s=20.0, p_max=2000.0, u_max=100.0)


def make_task(id, a, d, u, e=1):
    return Task(id, a, e, d, u, revenue_of(u, a, d))


@st.composite
def instances(draw, max_tasks=12, max_T=8, betas=(0.0, 50.0, 400.0, 5000.0, INFINITE), unit=False):
    """Small random instances, degenerate ones included."""
    T = draw(st.integers(1, max_T))
    p_s = draw(st.sampled_from([0.0, 20.0, 100.0]))
    cfg = EsConfig(p_s=p_s, p_max=2000.0, u_max=100.0 if not unit else 4.0,
                   beta_max=0.0 if unit else draw(st.sampled_from(betas)))
    solar_kind = draw(st.sampled_from(["zero", "random", "random", "full"]))
    if solar_kind == "zero":
        S = [0.0] * T
    elif solar_kind == "full":
        S = [cfg.p_max] * T
    else:
        S = draw(st.lists(st.floats(0, cfg.p_max, allow_nan=False), min_size=T, max_size=T))
    n = draw(st.integers(0, max_tasks))
    tasks = []
    for i in range(n):
        a = draw(st.integers(1, T))
        k = draw(st.integers(0, 5))
        if unit:
            tasks.append(Task(i + 1, a, 1, a + 1 + k, 1.0, 1.0))
        else:
            u = draw(st.floats(0.5, cfg.u_max, allow_nan=False))
            tasks.append(make_task(i + 1, a, a + 1 + k, u))
    return Instance(cfg, SolarProfile(S), tasks)


def random_instance(rng: np.random.Generator, N: int, T: int, beta: float, kind: str = "random",
                    u_scale: float = 30.0) -> Instance:
    """Numpy-driven instance for loops that need more cases than hypothesis."""
    cfg = EsConfig(beta_max=beta)
    if kind == "zero":
        S = np.zeros(T)
    else:
        S = rng.uniform(0, cfg.p_max, T) * (rng.random(T) < 0.7)
    tasks = []
    for i in range(N):
        a = int(rng.integers(1, T + 1))
        d = a + 1 + int(rng.integers(0, 6))
        u = float(min(cfg.u_max, max(1e-3, rng.exponential(u_scale))))
        tasks.append(make_task(i + 1, a, d, u))
    return Instance(cfg, SolarProfile(S), tasks)


def finite(x: float) -> bool:
    return not math.isinf(x)
