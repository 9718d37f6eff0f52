"""Discrete-event HPC batch scheduling with heuristic baselines and a ReAct LLM agent."""

from .metrics import MetricsReport, NormalizedReport, compute_metrics, jain_index, normalize
from .policies import PolicyKind, exact_min_makespan, fcfs_schedule, serial_sgs, sjf_schedule
from .sim import (
    BackfillJob,
    ClusterState,
    Delay,
    StartJob,
    Stop,
    apply,
    audit_schedule,
    new_state,
    render_feedback,
    validate,
)
from .workload import (
    ClusterConfig,
    JobSpec,
    Scenario,
    ScenarioSpec,
    generate_workload,
    read_workload,
    sample_gamma,
    write_workload,
)

__version__ = "0.1.0"
