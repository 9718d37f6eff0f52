"""Synthetic HPC workloads: job records, cluster capacity and the seven scenarios.

All randomness flows through a :class:`numpy.random.Generator` built from the
PCG64 bit generator, seeded with the scenario seed. Per job the draws happen in
a fixed order (scenario-specific demand draws first, then the user draw), so a
``(kind, num_jobs, seed, num_users)`` tuple always yields the same workload.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

DEFAULT_NODES = 256
DEFAULT_MEMORY_GB = 2048

JOB_FIELDS = ("job_id", "user_id", "submit_time", "walltime", "nodes", "memory_gb")


class WorkloadError(ValueError):
    """Invalid scenario parameters or an unreadable workload file."""


class Scenario(str, enum.Enum):
    HOMOGENEOUS_SHORT = "HomogeneousShort"
    HETEROGENEOUS_MIX = "HeterogeneousMix"
    LONG_JOB_DOMINANT = "LongJobDominant"
    HIGH_PARALLELISM = "HighParallelism"
    RESOURCE_SPARSE = "ResourceSparse"
    BURSTY_IDLE = "BurstyIdle"
    ADVERSARIAL = "Adversarial"

    @classmethod
    def parse(cls, value: "str | Scenario") -> "Scenario":
        if isinstance(value, Scenario):
            return value
        key = str(value).replace("-", "").replace("_", "").replace(" ", "").lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        raise WorkloadError(f"unknown scenario kind {value!r}")


@dataclass(frozen=True)
class ClusterConfig:
    total_nodes: int = DEFAULT_NODES
    total_memory_gb: int = DEFAULT_MEMORY_GB

    def __post_init__(self):
        if self.total_nodes < 1 or self.total_memory_gb < 1:
            raise WorkloadError("cluster capacities must be >= 1")


@dataclass(frozen=True)
class JobSpec:
    job_id: int
    user_id: str
    submit_time: int
    walltime: int
    nodes: int
    memory_gb: int

    def check(self, config: Optional[ClusterConfig] = None) -> None:
        """Raise :class:`WorkloadError` naming the first field out of range."""
        config = config or ClusterConfig()
        if self.job_id < 1:
            raise WorkloadError("job_id out of range")
        if self.submit_time != 0:
            raise WorkloadError("submit_time out of range")
        if self.walltime < 1:
            raise WorkloadError("walltime out of range")
        if not 1 <= self.nodes <= config.total_nodes:
            raise WorkloadError("nodes out of range")
        if not 1 <= self.memory_gb <= config.total_memory_gb:
            raise WorkloadError("memory_gb out of range")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ScenarioSpec:
    kind: Scenario
    num_jobs: int
    seed: int = 0
    num_users: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Scenario.parse(self.kind))
        if int(self.num_jobs) < 1:
            raise WorkloadError("num_jobs must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise WorkloadError("seed must be an unsigned 64-bit integer")
        if self.num_users is not None and self.num_users < 1:
            raise WorkloadError("num_users must be >= 1")

    @property
    def users(self) -> int:
        return self.num_users if self.num_users is not None else min(8, self.num_jobs)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def sample_gamma(shape: float, scale: float, rng: np.random.Generator) -> float:
    """Draw one Gamma(shape, scale) variate; the mean is ``shape * scale``."""
    if not (shape > 0 and scale > 0):
        raise WorkloadError(f"gamma parameters must be positive, got shape={shape}, scale={scale}")
    return float(rng.gamma(shape, scale))


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _uniform_int(rng, low, high):
    # inclusive on both ends
    return int(rng.integers(low, high + 1))


def _choice(rng, options):
    return options[int(rng.integers(0, len(options)))]


def _demands(kind: Scenario, index: int, rng: np.random.Generator):
    """Return (walltime, nodes, memory_gb) for the job at 0-based position ``index``."""
    if kind is Scenario.HOMOGENEOUS_SHORT:
        return _uniform_int(rng, 30, 120), 2, 4
    if kind is Scenario.HETEROGENEOUS_MIX:
        walltime = max(1, round_half_up(sample_gamma(1.5, 300.0, rng)))
        nodes = 2 ** _uniform_int(rng, 0, 8)
        memory = nodes * 2 ** _uniform_int(rng, 0, 3)
        return walltime, nodes, memory
    if kind is Scenario.LONG_JOB_DOMINANT:
        if rng.random() < 0.2:
            return _uniform_int(rng, 10_000, 50_000), 128, 512
        return _uniform_int(rng, 60, 500), 2, 4
    if kind is Scenario.HIGH_PARALLELISM:
        nodes = _choice(rng, (64, 128, 256))
        walltime = max(1, round_half_up(sample_gamma(1.0, 800.0, rng)))
        return walltime, nodes, nodes * 8
    if kind is Scenario.RESOURCE_SPARSE:
        memory = _choice(rng, (1, 2, 4))
        return _uniform_int(rng, 30, 300), 1, memory
    if kind is Scenario.BURSTY_IDLE:
        if index % 2 == 0:
            walltime = _uniform_int(rng, 30, 120)
        else:
            walltime = _uniform_int(rng, 2000, 5000)
        nodes = _choice(rng, (1, 2, 4))
        memory = _choice(rng, (2, 4, 8))
        return walltime, nodes, memory
    if kind is Scenario.ADVERSARIAL:
        if index == 0:
            return 100_000, 128, 1024
        return 60, 1, 2
    raise WorkloadError(f"unknown scenario kind {kind!r}")


def generate_workload(spec: ScenarioSpec, config: Optional[ClusterConfig] = None) -> list[JobSpec]:
    """Generate ``spec.num_jobs`` jobs for the requested scenario.

    Demands are clamped to the cluster capacities so every job fits an empty
    cluster on its own.
    """
    config = config or ClusterConfig()
    rng = make_rng(int(spec.seed))
    users = spec.users
    jobs = []
    for i in range(int(spec.num_jobs)):
        walltime, nodes, memory = _demands(spec.kind, i, rng)
        user = int(rng.integers(1, users + 1))
        jobs.append(
            JobSpec(
                job_id=i + 1,
                user_id=f"user_{user}",
                submit_time=0,
                walltime=int(walltime),
                nodes=int(min(max(nodes, 1), config.total_nodes)),
                memory_gb=int(min(max(memory, 1), config.total_memory_gb)),
            )
        )
    return jobs


def validate_jobs(jobs: Sequence[JobSpec], config: Optional[ClusterConfig] = None) -> None:
    if not jobs:
        raise WorkloadError("no jobs")
    for expected, job in enumerate(jobs, start=1):
        job.check(config)
        if job.job_id != expected:
            raise WorkloadError(f"job_id out of range: expected {expected}, got {job.job_id}")


def dumps_workload(jobs: Iterable[JobSpec]) -> str:
    rows = [job.to_dict() for job in sorted(jobs, key=lambda j: j.job_id)]
    return json.dumps(rows, indent=2) + "\n"


def write_workload(jobs: Sequence[JobSpec], path) -> None:
    validate_jobs(sorted(jobs, key=lambda j: j.job_id))
    Path(path).write_text(dumps_workload(jobs), encoding="utf-8")


def loads_workload(text: str, config: Optional[ClusterConfig] = None) -> list[JobSpec]:
    if not text.strip():
        raise WorkloadError("no jobs")
    try:
        rows = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WorkloadError(f"malformed workload JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(rows, list):
        raise WorkloadError("workload must be a JSON array")
    if not rows:
        raise WorkloadError("no jobs")
    jobs = []
    for pos, row in enumerate(rows, start=1):
        if not isinstance(row, dict):
            raise WorkloadError(f"job #{pos}: expected an object")
        missing = [k for k in JOB_FIELDS if k not in row]
        if missing:
            raise WorkloadError(f"job #{pos}: missing field {missing[0]!r}")
        try:
            job = JobSpec(
                job_id=_as_int(row["job_id"], "job_id"),
                user_id=str(row["user_id"]),
                submit_time=_as_int(row["submit_time"], "submit_time"),
                walltime=_as_int(row["walltime"], "walltime"),
                nodes=_as_int(row["nodes"], "nodes"),
                memory_gb=_as_int(row["memory_gb"], "memory_gb"),
            )
            job.check(config)
        except WorkloadError as exc:
            raise WorkloadError(f"job #{pos}: {exc}") from None
        jobs.append(job)
    validate_jobs(jobs, config)
    return jobs


def _as_int(value, name):
    if isinstance(value, bool) or not isinstance(value, int):
        raise WorkloadError(f"{name} must be an integer")
    return value


def read_workload(path, config: Optional[ClusterConfig] = None) -> list[JobSpec]:
    return loads_workload(Path(path).read_text(encoding="utf-8"), config)
