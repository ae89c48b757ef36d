"""Revenue-maximising task scheduling for solar-powered edge servers."""
from .baselines import BaselinePolicy, run_baseline
from .flow_optimal import build_network, max_flow, solve_unit_snb
from .model import (
    EPS,
    INFINITE,
    EsConfig,
    Instance,
    InvalidInstance,
    Schedule,
    SolarProfile,
    Task,
    ValidationReport,
    Violation,
    power_of,
    revenue_of,
    utilization_of,
    validate,
)
from .offline import drop_task, schedule_offline, schedule_sfb, schedule_sib, schedule_snb, try_execute
from .online import MetricsReport, OnlineContext, run_online
from .workload import DeviationSpec, GenSpec, generate_tasks, inject_spikes, load_solar, synthetic_solar

__all__ = [
    "BaselinePolicy", "DeviationSpec", "EPS", "EsConfig", "GenSpec", "INFINITE", "Instance",
    "InvalidInstance", "MetricsReport", "OnlineContext", "Schedule", "SolarProfile", "Task",
    "ValidationReport", "Violation", "build_network", "drop_task", "generate_tasks", "inject_spikes",
    "load_solar", "max_flow", "power_of", "revenue_of", "run_baseline", "run_online",
    "schedule_offline", "schedule_sfb", "schedule_sib", "schedule_snb", "solve_unit_snb",
    "synthetic_solar", "try_execute", "utilization_of", "validate",
]
