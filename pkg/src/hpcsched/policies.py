"""Baseline schedulers: FCFS, SJF and an exact makespan solver for small instances."""

from __future__ import annotations

import enum
import time
from typing import Optional, Protocol, Sequence

from . import sim
from .sim import Delay, StartJob, Stop
from .workload import ClusterConfig, JobSpec


class PolicyKind(str, enum.Enum):
    FCFS = "fcfs"
    SJF = "sjf"
    EXACT = "exact"
    REACT = "react"

    @classmethod
    def parse(cls, value):
        if isinstance(value, PolicyKind):
            return value
        aliases = {"exactmakespan": "exact", "reactagent": "react"}
        key = str(value).lower().replace("_", "").replace("-", "")
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown policy {value!r}") from None


class InstanceTooLarge(ValueError):
    """The exact solver refuses instances above its job limit."""


class SolverTimeout(RuntimeError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


def _drain(state):
    sim.apply(state, Stop())
    return state.schedule


def fcfs_schedule(jobs: Sequence[JobSpec], config: ClusterConfig) -> dict:
    """Strict head-of-line FCFS in ascending job_id order, without backfilling."""
    state = sim.new_state(config, jobs)
    while state.waiting:
        head = state.jobs[state.waiting[0]]
        if state.fits(head):
            sim.apply(state, StartJob(head.job_id))
        else:
            sim.apply(state, Delay())
    return _drain(state)


def sjf_schedule(jobs: Sequence[JobSpec], config: ClusterConfig) -> dict:
    """Work-conserving SJF: at each event start every fitting job by (walltime, job_id)."""
    state = sim.new_state(config, jobs)
    while state.waiting:
        for job_id in sorted(state.waiting, key=lambda j: (state.jobs[j].walltime, j)):
            if state.fits(state.jobs[job_id]):
                sim.apply(state, StartJob(job_id))
        if state.waiting:
            sim.apply(state, Delay())
    return _drain(state)


def makespan(jobs: Sequence[JobSpec], schedule: dict) -> int:
    return max(schedule[j.job_id] + j.walltime for j in jobs)


class _Profile:
    """Placed jobs as (start, end, nodes, memory) tuples for the serial SGS."""

    __slots__ = ("cap_n", "cap_m", "placed", "_step")

    def __init__(self, config, placed=()):
        self.cap_n = config.total_nodes
        self.cap_m = config.total_memory_gb
        self.placed = list(placed)
        self._step = None

    def step_function(self):
        """Breakpoints and the usage on each ``[b_i, b_{i+1})``; usage is 0 past the last."""
        if self._step is None:
            bps = sorted({0} | {s for s, _, _, _ in self.placed} | {e for _, e, _, _ in self.placed})
            index = {t: i for i, t in enumerate(bps)}
            dn = [0] * (len(bps) + 1)
            dm = [0] * (len(bps) + 1)
            for s, e, n, m in self.placed:
                dn[index[s]] += n
                dn[index[e]] -= n
                dm[index[s]] += m
                dm[index[e]] -= m
            un, um, cn, cm = [], [], 0, 0
            for i in range(len(bps)):
                cn += dn[i]
                cm += dm[i]
                un.append(cn)
                um.append(cm)
            self._step = (bps, un, um)
        return self._step

    def earliest_start(self, job: JobSpec) -> int:
        # the earliest feasible start always lies on a breakpoint
        bps, un, um = self.step_function()
        free_n = self.cap_n - job.nodes
        free_m = self.cap_m - job.memory_gb
        k = len(bps)
        i = 0
        while i < k:
            t = bps[i]
            end = t + job.walltime
            j = i
            while j < k and bps[j] < end:
                if un[j] > free_n or um[j] > free_m:
                    break
                j += 1
            else:
                return t
            i = j + 1
        return bps[-1]

    def place(self, job: JobSpec, t: int) -> None:
        self.placed.append((t, t + job.walltime, job.nodes, job.memory_gb))
        self._step = None

    def pop(self) -> None:
        self.placed.pop()
        self._step = None


def serial_sgs(permutation: Sequence[int], jobs: Sequence[JobSpec], config: ClusterConfig) -> dict:
    """Place jobs in ``permutation`` order, each at its earliest feasible start."""
    by_id = {j.job_id: j for j in jobs}
    if sorted(permutation) != sorted(by_id):
        raise ValueError("permutation must be a bijection over the job ids")
    profile = _Profile(config)
    schedule = {}
    for job_id in permutation:
        job = by_id[job_id]
        t = profile.earliest_start(job)
        profile.place(job, t)
        schedule[job_id] = t
    return dict(sorted(schedule.items()))


class ExternalSolver(Protocol):
    """Adapter slot for a third-party solver (e.g. a CP-SAT model).

    Implementations receive the workload and cluster and must return a total
    schedule; the harness audits the result like any other policy.
    """

    def solve(self, jobs: Sequence[JobSpec], config: ClusterConfig) -> dict: ...


def exact_min_makespan(
    jobs: Sequence[JobSpec],
    config: ClusterConfig,
    max_jobs: int = 10,
    time_budget: Optional[float] = None,
) -> dict:
    """Minimum-makespan schedule by branch and bound over serial-SGS permutations.

    Permutations are explored in lexicographic job_id order and the incumbent is
    only replaced on strict improvement, so the result is the schedule of the
    lexicographically smallest optimal permutation.

    Raises:
        InstanceTooLarge: more than ``max_jobs`` jobs.
        SolverTimeout: ``time_budget`` seconds elapsed before optimality was
            proven; ``exc.best`` holds the incumbent schedule, if any.
    """
    if len(jobs) > max_jobs:
        raise InstanceTooLarge(f"exact solver limited to {max_jobs} jobs, got {len(jobs)}")
    if not jobs:
        raise ValueError("no jobs")
    ordered = sorted(jobs, key=lambda j: j.job_id)
    area_n = sum(j.nodes * j.walltime for j in ordered)
    area_m = sum(j.memory_gb * j.walltime for j in ordered)
    lower = max(
        max(j.walltime for j in ordered),
        -(-area_n // config.total_nodes),
        -(-area_m // config.total_memory_gb),
    )
    # heuristic upper bound; pruning against it is strict until a permutation is found
    upper = min(makespan(ordered, fcfs_schedule(ordered, config)),
                makespan(ordered, sjf_schedule(ordered, config)))

    # identical jobs are interchangeable; keep them in ascending id order
    signature = {j.job_id: (j.walltime, j.nodes, j.memory_gb) for j in ordered}
    prev_twin = {}
    last_seen = {}
    for j in ordered:
        sig = signature[j.job_id]
        prev_twin[j.job_id] = last_seen.get(sig)
        last_seen[sig] = j.job_id

    deadline = None if time_budget is None else time.monotonic() + time_budget
    best = {"value": upper, "perm": None, "done": False}
    n = len(ordered)
    # identical placements reached via different prefixes have identical subtrees;
    # lexicographic DFS always reaches the smaller prefix first
    seen = set()

    def search(prefix, profile, used, current, key):
        if best["done"]:
            return
        if deadline is not None and time.monotonic() > deadline:
            raise SolverTimeout("exact solver time budget exhausted")
        if len(prefix) == n:
            if best["perm"] is None or current < best["value"]:
                best.update(value=current, perm=list(prefix))
                if current <= lower:
                    best["done"] = True
            return
        if key in seen:
            return
        seen.add(key)
        remaining = [j for j in ordered if j.job_id not in used]
        starts = {j.job_id: profile.earliest_start(j) for j in remaining}
        # placing more jobs never makes a remaining job start earlier
        node_bound = max([current, lower] + [starts[j.job_id] + j.walltime for j in remaining])
        if node_bound > best["value"] or (best["perm"] is not None and node_bound >= best["value"]):
            return
        for job in remaining:
            jid = job.job_id
            twin = prev_twin[jid]
            if twin is not None and twin not in used:
                continue
            t = starts[jid]
            profile.place(job, t)
            used.add(jid)
            prefix.append(jid)
            search(prefix, profile, used, max(current, t + job.walltime), key | {(jid, t)})
            prefix.pop()
            used.discard(jid)
            profile.pop()
            if best["done"]:
                return

    try:
        search([], _Profile(config), set(), 0, frozenset())
    except SolverTimeout as exc:
        exc.best = serial_sgs(best["perm"], ordered, config) if best["perm"] else None
        raise
    assert best["perm"] is not None, "heuristic upper bound is always attainable by some SGS order"
    return serial_sgs(best["perm"], ordered, config)


def run_policy(kind, jobs, config, **kwargs) -> dict:
    kind = PolicyKind.parse(kind)
    if kind is PolicyKind.FCFS:
        return fcfs_schedule(jobs, config)
    if kind is PolicyKind.SJF:
        return sjf_schedule(jobs, config)
    if kind is PolicyKind.EXACT:
        return exact_min_makespan(jobs, config, **kwargs)
    raise ValueError("the ReAct agent is run through hpcsched.agent.run_react_loop")
