"""Synthetic tasks, solar profiles, prediction deviations and spikes.

Everything is a pure function of its arguments and an integer seed.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import SolarProfile, Task, revenue_of

K_MAX = 5
U_FLOOR = 1e-3  # smallest utilization a sampled task may have (cores)


@dataclass(frozen=True)
class GenSpec:
    rho: float
    N: int
    T_total: int = 1440
    u_mean: float | None = None  # only the spread matters; u is rescaled onto rho
    u_sigma: float | None = None  # defaults to 30% of the mean
    arrival_weights: Sequence[float] | None = None  # None -> daily traffic curve
    seed: int = 0
    u_max: float = 100.0
    e: int = 1

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.N < 0:
            raise ValueError("N must be non-negative")
        if self.arrival_weights is not None:
            w = np.asarray(self.arrival_weights, dtype=float)
            if len(w) != self.T_total or np.any(w < 0) or not w.sum() > 0:
                raise ValueError("arrival_weights must be T_total non-negative values, not all zero")


@dataclass(frozen=True)
class DeviationSpec:
    P_d: float = 0.0
    T_d: float = 0.0
    seed: int = 0
    trend_bias: float = 0.5  # share of below-forecast draws flipped upward on slopes

    def __post_init__(self):
        for name in ("P_d", "T_d"):
            if not 0 <= getattr(self, name) <= 100:
                raise ValueError(f"{name} must lie in [0, 100]")
        if not 0 <= self.trend_bias <= 1:
            raise ValueError("trend_bias must lie in [0, 1]")


# ---------------------------------------------------------------------------
# Daily shapes


def traffic_weights(T_total: int = 1440) -> np.ndarray:
    """Relative vehicle arrival intensity over one day: morning and evening rush."""
    hours = (np.arange(T_total) + 0.5) * 24.0 / T_total
    w = (0.25
         + 1.0 * np.exp(-0.5 * ((hours - 8.5) / 1.5) ** 2)
         + 0.6 * np.exp(-0.5 * ((hours - 13.0) / 2.5) ** 2)
         + 1.1 * np.exp(-0.5 * ((hours - 17.75) / 1.75) ** 2))
    night = (hours < 5) | (hours > 22.5)
    w[night] *= 0.4
    return w


def synthetic_solar(T_total: int = 1440, p_max: float = 2000.0, sunrise: float = 6.0,
                    sunset: float = 18.5, cloud: float = 0.0, seed: int = 0) -> SolarProfile:
    """Clear-sky bell between sunrise and sunset, optionally dimmed by clouds.

    ``cloud`` is the depth of a smooth random attenuation in ``[0, 1)``.
    The peak is always rescaled to ``p_max``.
    """
    hours = (np.arange(T_total) + 0.5) * 24.0 / T_total
    phase = (hours - sunrise) / (sunset - sunrise)
    shape = np.where((phase > 0) & (phase < 1), np.sin(np.pi * np.clip(phase, 0, 1)) ** 1.5, 0.0)
    if cloud > 0:
        rng = np.random.default_rng(seed)
        knots = rng.uniform(1 - cloud, 1.0, size=25)
        shape = shape * np.interp(hours, np.linspace(0, 24, 25), knots)
    if shape.max() > 0:
        shape = shape * (p_max / shape.max())
    return SolarProfile(shape)


# ---------------------------------------------------------------------------
# Tasks


def _sample_u(rng: np.random.Generator, n: int, mean: float, sigma: float, u_max: float) -> np.ndarray:
    return np.clip(rng.normal(mean, sigma, size=n), U_FLOOR, u_max)


def _rescale_to_mean(u: np.ndarray, target: float, u_max: float) -> np.ndarray:
    for _ in range(100):
        m = u.mean()
        if abs(m / target - 1) < 1e-12:
            break
        u = np.clip(u * (target / m), U_FLOOR, u_max)
    return u


def generate_tasks(spec: GenSpec) -> list[Task]:
    """Sample ``spec.N`` tasks whose mean(u)/mean(d - a) equals ``spec.rho``."""
    if spec.N == 0:
        return []
    rng = np.random.default_rng(spec.seed)
    w = traffic_weights(spec.T_total) if spec.arrival_weights is None else np.asarray(spec.arrival_weights, float)
    a = np.sort(rng.choice(spec.T_total, size=spec.N, p=w / w.sum())) + 1
    k = rng.integers(0, K_MAX + 1, size=spec.N)
    lax = spec.e + k  # d - a
    target = spec.rho * lax.mean()
    if target > spec.u_max:
        raise ValueError(f"rho={spec.rho} needs mean utilization {target:.3g} > u_max={spec.u_max}")
    u_mean = spec.u_mean if spec.u_mean is not None else target
    u_sigma = spec.u_sigma if spec.u_sigma is not None else 0.3 * u_mean
    u = _sample_u(rng, spec.N, u_mean, u_sigma, spec.u_max)
    u = _rescale_to_mean(u, target, spec.u_max)

    tasks = []
    for i in range(spec.N):
        ai, di, ui = int(a[i]), int(a[i] + lax[i]), float(u[i])
        tasks.append(Task(i + 1, ai, spec.e, di, ui, revenue_of(ui, ai, di)))
    return tasks


def realized_rho(tasks: Sequence[Task]) -> float:
    return float(np.mean([t.u for t in tasks]) / np.mean([t.d - t.a for t in tasks]))


def _fresh_tasks(rng: np.random.Generator, arrivals: Sequence[int], first_id: int,
                 u_mean: float, u_sigma: float, u_max: float, e: int = 1) -> list[Task]:
    n = len(arrivals)
    u = _sample_u(rng, n, u_mean, u_sigma, u_max)
    k = rng.integers(0, K_MAX + 1, size=n)
    out = []
    for j in range(n):
        a = int(arrivals[j])
        d = a + e + int(k[j])
        out.append(Task(first_id + j, a, e, d, float(u[j]), revenue_of(float(u[j]), a, d)))
    return out


def _u_stats(tasks: Sequence[Task]) -> tuple[float, float]:
    us = np.array([t.u for t in tasks])
    return float(us.mean()), float(us.std())


def derive_actual_tasks(pred: Sequence[Task], spec: DeviationSpec, u_max: float = 100.0) -> list[Task]:
    """Keep (100 - T_d)% of the forecast tasks; resample the rest in place.

    Replacements keep the arrival slot of the task they stand in for and
    get fresh ids above every forecast id.
    """
    pred = list(pred)
    n_replaced = math.floor(len(pred) * spec.T_d / 100 + 0.5)
    if n_replaced == 0:
        return pred
    rng = np.random.default_rng([spec.seed, 1])
    gone = set(rng.choice(len(pred), size=n_replaced, replace=False).tolist())
    mean, sigma = _u_stats(pred)
    first_id = max(t.id for t in pred) + 1
    gone_sorted = sorted(gone)
    fresh = _fresh_tasks(rng, [pred[i].a for i in gone_sorted], first_id, mean, sigma, u_max, pred[0].e)
    kept = [t for i, t in enumerate(pred) if i not in gone]
    return sorted(kept + fresh, key=lambda t: (t.a, t.id))


# ---------------------------------------------------------------------------
# Solar


def derive_actual_solar(pred: SolarProfile, spec: DeviationSpec, p_max: float = 2000.0) -> SolarProfile:
    """Perturb a forecast by a per-slot multiplier in ``[1 - P_d%, 1 + P_d%]``.

    The multiplier is uniform. On slopes of the forecast a share
    ``trend_bias`` of the below-forecast draws is mirrored above it, so the
    actual curve tends to rise ahead of the forecast and fall behind it.
    """
    s = pred.watts
    if spec.P_d == 0:
        return SolarProfile(s.copy())
    rng = np.random.default_rng([spec.seed, 2])
    xi = rng.uniform(-1.0, 1.0, size=len(s))
    slope = np.diff(s, prepend=s[:1]) != 0
    flip = rng.random(len(s)) < spec.trend_bias
    xi = np.where(slope & flip, np.abs(xi), xi)
    actual = s * (1 + spec.P_d / 100 * xi)
    return SolarProfile(np.clip(actual, 0.0, p_max))


def spike_slots(T_total: int, rate: float, seed: int = 0) -> np.ndarray:
    """1-based slots chosen for spikes: ``round(rate% * T_total)`` of them."""
    n = math.floor(T_total * rate / 100 + 0.5)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    rng = np.random.default_rng([seed, 3])
    return np.sort(rng.choice(T_total, size=n, replace=False)) + 1


def inject_spikes(target, rate: float, magnitude: float | None = None, seed: int = 0,
                  T_total: int | None = None, u_max: float = 100.0):
    """Sudden solar drops or task bursts at randomly chosen slots.

    A :class:`SolarProfile` has the chosen slots multiplied by ``magnitude``
    (default 0.2). A task list gets ``magnitude`` (default 5) times the
    slot's forecast arrivals added as fresh tasks at each chosen slot.
    """
    if isinstance(target, SolarProfile):
        factor = 0.2 if magnitude is None else magnitude
        slots = spike_slots(len(target), rate, seed)
        w = target.watts.copy()
        w[slots - 1] *= factor
        return SolarProfile(w)

    tasks = list(target)
    if T_total is None:
        raise ValueError("T_total is required when spiking a task list")
    burst = 5 if magnitude is None else magnitude
    slots = spike_slots(T_total, rate, seed)
    if not len(slots) or not tasks:
        return tasks
    counts = np.bincount([t.a for t in tasks], minlength=T_total + 1)
    arrivals = np.repeat(slots, np.floor(burst * counts[slots] + 0.5).astype(int))
    rng = np.random.default_rng([seed, 4])
    mean, sigma = _u_stats(tasks)
    fresh = _fresh_tasks(rng, arrivals, max(t.id for t in tasks) + 1, mean, sigma, u_max, tasks[0].e)
    return sorted(tasks + fresh, key=lambda t: (t.a, t.id))


# ---------------------------------------------------------------------------
# Solar CSV ingestion


class SolarFormatError(ValueError):
    pass


def _parse_time(value: str) -> float:
    try:
        return float(value)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(value.strip()).timestamp()
    except ValueError as exc:
        raise SolarFormatError(f"unparseable timestamp {value!r}") from exc


def load_solar(path: str | Path, T_total: int = 1440, p_max_target: float = 2000.0) -> SolarProfile:
    """Read a two-column solar CSV and normalise it onto ``[0, p_max_target]``.

    The first column is either ``slot`` (one row per one-minute slot) or
    ``timestamp`` (ISO-8601 or epoch seconds), in which case readings are
    averaged into one-minute bins counted from the first reading. The
    second column is power in any unit; only its shape is kept.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise SolarFormatError(f"{path}: empty file")
    header = [c.strip().lower() for c in rows[0]]
    if len(header) < 2 or header[0] not in ("slot", "timestamp"):
        raise SolarFormatError(f"{path}: header must be 'slot,watts' or 'timestamp,watts'")
    body = rows[1:]
    if not body:
        raise SolarFormatError(f"{path}: no data rows")

    keys, watts = [], []
    for n, row in enumerate(body, start=2):
        if len(row) < 2:
            raise SolarFormatError(f"{path}:{n}: expected two columns")
        try:
            watts.append(float(row[1]))
        except ValueError as exc:
            raise SolarFormatError(f"{path}:{n}: bad power value {row[1]!r}") from exc
        keys.append(row[0])
        if not math.isfinite(watts[-1]):
            raise SolarFormatError(f"{path}:{n}: non-finite power value")

    if header[0] == "slot":
        try:
            slots = [int(k) for k in keys]
        except ValueError as exc:
            raise SolarFormatError(f"{path}: slot column must hold integers") from exc
        if any(b <= a for a, b in zip(slots, slots[1:])):
            raise SolarFormatError(f"{path}: slots must be strictly increasing")
        series = np.array(watts)
    else:
        times = np.array([_parse_time(k) for k in keys])
        if np.any(np.diff(times) <= 0):
            raise SolarFormatError(f"{path}: timestamps must be strictly increasing")
        bins = np.floor((times - times[0]) / 60.0).astype(np.int64)
        sums = np.bincount(bins, weights=watts)
        counts = np.bincount(bins)
        if np.any(counts == 0):
            raise SolarFormatError(f"{path}: gap in readings (a one-minute bin is empty)")
        series = sums / counts

    if len(series) < T_total:
        raise SolarFormatError(f"{path}: {len(series)} one-minute slots, need {T_total}")
    series = np.clip(series[:T_total], 0.0, None)
    peak = series.max()
    if not peak > 0:
        raise SolarFormatError(f"{path}: all readings are zero, cannot normalise")
    return SolarProfile(series * (p_max_target / peak))


def normalize_solar(watts: Sequence[float], p_max_target: float = 2000.0) -> SolarProfile:
    w = np.clip(np.asarray(watts, dtype=float), 0.0, None)
    if not w.max(initial=0.0) > 0:
        raise ValueError("cannot normalise an all-zero profile")
    return SolarProfile(w * (p_max_target / w.max()))
