"""Scheduling objectives and FCFS-relative normalization."""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .workload import ClusterConfig, JobSpec

METRIC_FIELDS = (
    "makespan",
    "avg_wait",
    "avg_turnaround",
    "throughput",
    "node_utilization",
    "memory_utilization",
    "jain_job",
    "jain_user",
)

# lower is better for these; the rest are higher-is-better
NEGATIVE_METRICS = frozenset({"makespan", "avg_wait", "avg_turnaround"})


@dataclass(frozen=True)
class MetricsReport:
    makespan: float
    avg_wait: float
    avg_turnaround: float
    throughput: float
    node_utilization: float
    memory_utilization: float
    jain_job: float
    jain_user: float
    num_jobs: int = field(default=0, compare=False)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in METRIC_FIELDS}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict, num_jobs: int = 0) -> "MetricsReport":
        return cls(**{k: float(data[k]) for k in METRIC_FIELDS}, num_jobs=num_jobs)


def jain_index(values) -> float:
    """Jain's fairness index ``(sum v)^2 / (n * sum v^2)``; 1.0 for an all-zero vector."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("jain_index of an empty vector")
    if np.any(v < 0):
        raise ValueError("jain_index expects non-negative values")
    # a constant vector (including all zeros) is perfectly fair; the ratio below
    # can land an ulp away from 1 on such input
    if np.all(v == v[0]):
        return 1.0
    # the index is scale-free; rescaling avoids underflow on tiny values
    v = v / v.max()
    sq = float(np.dot(v, v))
    total = float(v.sum())
    return min(1.0, total * total / (v.size * sq))


def compute_metrics(jobs: Sequence[JobSpec], schedule: dict, config: ClusterConfig) -> MetricsReport:
    """All eight objectives for a complete schedule (every submit time is 0)."""
    missing = [j.job_id for j in jobs if j.job_id not in schedule]
    if missing:
        raise ValueError(f"schedule has no start time for job(s) {missing}")
    starts = np.array([schedule[j.job_id] for j in jobs], dtype=float)
    walls = np.array([j.walltime for j in jobs], dtype=float)
    nodes = np.array([j.nodes for j in jobs], dtype=float)
    mem = np.array([j.memory_gb for j in jobs], dtype=float)
    n = len(jobs)

    ends = starts + walls
    span = float(ends.max())
    waits = starts  # submit_time == 0
    by_user = defaultdict(list)
    for job, w in zip(jobs, waits):
        by_user[job.user_id].append(w)
    user_means = [float(np.mean(ws)) for _, ws in sorted(by_user.items())]

    return MetricsReport(
        makespan=span,
        avg_wait=float(waits.mean()),
        avg_turnaround=float(ends.mean()),
        throughput=n / (span - float(starts.min())),
        node_utilization=float(np.dot(nodes, walls)) / (config.total_nodes * span),
        memory_utilization=float(np.dot(mem, walls)) / (config.total_memory_gb * span),
        jain_job=jain_index(waits),
        jain_user=jain_index(user_means),
        num_jobs=n,
    )


@dataclass(frozen=True)
class NormalizedReport:
    values: dict
    undefined: frozenset = frozenset()

    def __getitem__(self, key):
        return self.values[key]

    def to_dict(self) -> dict:
        return {k: ("inf" if k in self.undefined else self.values[k]) for k in METRIC_FIELDS}


def normalize(report: MetricsReport, baseline: MetricsReport) -> NormalizedReport:
    """Fieldwise ``report / baseline``.

    0/0 is 1.0; a positive value over a zero baseline is flagged undefined and
    stored as ``inf``.
    """
    if report.num_jobs and baseline.num_jobs and report.num_jobs != baseline.num_jobs:
        raise ValueError(
            f"cannot normalize a {report.num_jobs}-job run against a {baseline.num_jobs}-job baseline"
        )
    values, undefined = {}, set()
    for name in METRIC_FIELDS:
        r, b = getattr(report, name), getattr(baseline, name)
        if b == 0:
            if r == 0:
                values[name] = 1.0
            else:
                values[name] = math.inf
                undefined.add(name)
        else:
            values[name] = r / b
    return NormalizedReport(values, frozenset(undefined))

