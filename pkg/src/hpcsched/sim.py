"""Discrete-event cluster simulator with action validation and feedback text.

The simulator is the only component allowed to change cluster state. Every
proposed action goes through :func:`validate` first; :func:`apply` refuses
anything that was not accepted.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .workload import ClusterConfig, JobSpec

Schedule = dict  # job_id -> start time


class SimulationError(RuntimeError):
    """Contract violation by the caller (e.g. applying a rejected action)."""


class AuditError(ValueError):
    pass


@dataclass(frozen=True)
class StartJob:
    job_id: int
    name = "StartJob"

    def text(self) -> str:
        return f"StartJob(job_id={self.job_id})"


@dataclass(frozen=True)
class BackfillJob:
    job_id: int
    name = "BackfillJob"

    def text(self) -> str:
        return f"BackfillJob(job_id={self.job_id})"


@dataclass(frozen=True)
class Delay:
    name = "Delay"

    def text(self) -> str:
        return "Delay"


@dataclass(frozen=True)
class Stop:
    name = "Stop"

    def text(self) -> str:
        return "Stop"


Action = Union[StartJob, BackfillJob, Delay, Stop]


class Reason(enum.Enum):
    INSUFFICIENT_NODES = "insufficient_nodes"
    INSUFFICIENT_MEMORY = "insufficient_memory"
    INSUFFICIENT_RESOURCES = "insufficient_resources"
    UNKNOWN_JOB = "unknown_job"
    NOT_WAITING = "not_waiting"
    NO_RUNNING_JOBS = "no_running_jobs"
    JOBS_WAITING = "jobs_waiting"
    UNPARSEABLE = "unparseable"
    FINISHED = "finished"

    @property
    def short(self) -> str:
        return _SHORT_REASONS[self]


_SHORT_REASONS = {
    Reason.INSUFFICIENT_NODES: "not enough resources",
    Reason.INSUFFICIENT_MEMORY: "not enough resources",
    Reason.INSUFFICIENT_RESOURCES: "not enough resources",
    Reason.UNKNOWN_JOB: "unknown job",
    Reason.NOT_WAITING: "job not waiting",
    Reason.NO_RUNNING_JOBS: "no running jobs",
    Reason.JOBS_WAITING: "jobs still waiting",
    Reason.UNPARSEABLE: "could not parse action",
    Reason.FINISHED: "simulation finished",
}


@dataclass(frozen=True)
class Outcome:
    """Result of validating one action.

    ``text`` is a short description for accepted actions (with an optional
    advisory ``note``) and the full feedback text for rejections.
    """

    accepted: bool
    text: str
    reason: Optional[Reason] = None
    note: Optional[str] = None

    @property
    def feedback(self) -> Optional[str]:
        if not self.accepted:
            return self.text
        return self.note


@dataclass
class ClusterState:
    config: ClusterConfig
    jobs: dict
    now: int = 0
    available_nodes: int = 0
    available_memory_gb: int = 0
    running: dict = field(default_factory=dict)  # job_id -> (start, end)
    waiting: list = field(default_factory=list)
    completed: dict = field(default_factory=dict)  # job_id -> (start, end)
    stopped: bool = False

    @property
    def schedule(self) -> Schedule:
        starts = {j: se[0] for j, se in self.completed.items()}
        starts.update({j: se[0] for j, se in self.running.items()})
        return dict(sorted(starts.items()))

    @property
    def all_started(self) -> bool:
        return not self.waiting

    def fits(self, job: JobSpec) -> bool:
        return job.nodes <= self.available_nodes and job.memory_gb <= self.available_memory_gb

    def check_invariants(self) -> None:
        used_n = sum(self.jobs[j].nodes for j in self.running)
        used_m = sum(self.jobs[j].memory_gb for j in self.running)
        assert self.available_nodes == self.config.total_nodes - used_n
        assert self.available_memory_gb == self.config.total_memory_gb - used_m
        assert 0 <= self.available_nodes <= self.config.total_nodes
        assert 0 <= self.available_memory_gb <= self.config.total_memory_gb
        ids = set(self.running) | set(self.waiting) | set(self.completed)
        assert len(self.running) + len(self.waiting) + len(self.completed) == len(self.jobs)
        assert ids == set(self.jobs)
        for start, end in self.running.values():
            assert start <= self.now < end


def new_state(config: ClusterConfig, jobs: Sequence[JobSpec]) -> ClusterState:
    if not jobs:
        raise ValueError("cannot simulate an empty job list")
    by_id = {job.job_id: job for job in jobs}
    if len(by_id) != len(jobs):
        raise ValueError("duplicate job_id in workload")
    return ClusterState(
        config=config,
        jobs=by_id,
        available_nodes=config.total_nodes,
        available_memory_gb=config.total_memory_gb,
        waiting=sorted(by_id),
    )


def _fmt_t(t) -> str:
    return str(int(t)) if float(t).is_integer() else f"{t:g}"


def render_feedback(state: ClusterState, action: Optional[Action], reason: Reason, detail: str = "") -> str:
    """Render the natural-language rejection text for ``action``.

    The first line is ``[t=<now>] Action: <name> failed (<short reason>)``;
    a ``Feedback:`` line with specifics follows.
    """
    name = action.name if action is not None else "<none>"
    head = f"[t={_fmt_t(state.now)}] Action: {name} failed ({reason.short})"
    job_id = getattr(action, "job_id", None)
    if reason in (Reason.INSUFFICIENT_NODES, Reason.INSUFFICIENT_MEMORY, Reason.INSUFFICIENT_RESOURCES):
        job = state.jobs[job_id]
        body = (
            f"Job {job_id} cannot be started — requires {job.nodes} Nodes, {job.memory_gb} GB; "
            f"available: {state.available_nodes} Nodes, {state.available_memory_gb} GB."
        )
    elif reason is Reason.UNKNOWN_JOB:
        body = f"Job {job_id} does not exist in this workload."
    elif reason is Reason.NOT_WAITING:
        where = "running" if job_id in state.running else "completed"
        body = f"Job {job_id} is already {where}; choose a job from the waiting list."
    elif reason is Reason.NO_RUNNING_JOBS:
        body = "Nothing is running, so there is no completion to wait for; start a waiting job."
    elif reason is Reason.JOBS_WAITING:
        pending = ", ".join(str(j) for j in state.waiting[:10])
        more = " ..." if len(state.waiting) > 10 else ""
        body = f"{len(state.waiting)} job(s) have not been started yet: {pending}{more}."
    elif reason is Reason.UNPARSEABLE:
        body = (detail or "no Action line") + (
            ". Reply with 'Action: StartJob(job_id=X)', 'Action: BackfillJob(job_id=Y)', "
            "'Action: Delay' or 'Action: Stop'."
        )
        detail = ""
    else:
        body = "The simulation has already ended."
    if detail:
        body = f"{body} {detail}"
    return f"{head}\nFeedback: {body}"


def _reject(state, action, reason):
    return Outcome(False, render_feedback(state, action, reason), reason)


def validate(state: ClusterState, action: Action) -> Outcome:
    """Check ``action`` against the current state without mutating it."""
    if state.stopped:
        return _reject(state, action, Reason.FINISHED)
    if isinstance(action, (StartJob, BackfillJob)):
        job = state.jobs.get(action.job_id)
        if job is None:
            return _reject(state, action, Reason.UNKNOWN_JOB)
        if action.job_id not in state.waiting:
            return _reject(state, action, Reason.NOT_WAITING)
        if job.nodes > state.available_nodes and job.memory_gb > state.available_memory_gb:
            return _reject(state, action, Reason.INSUFFICIENT_RESOURCES)
        if job.nodes > state.available_nodes:
            return _reject(state, action, Reason.INSUFFICIENT_NODES)
        if job.memory_gb > state.available_memory_gb:
            return _reject(state, action, Reason.INSUFFICIENT_MEMORY)
        end = state.now + job.walltime
        desc = f"[t={_fmt_t(state.now)}] {action.text()} accepted; job {job.job_id} runs until t={_fmt_t(end)}"
        note = None
        if isinstance(action, BackfillJob):
            blocked = [
                j for j in state.waiting if j < action.job_id and not state.fits(state.jobs[j])
            ]
            if not blocked:
                note = (
                    f"[t={_fmt_t(state.now)}] Note: no earlier-queued job is blocked; "
                    f"BackfillJob({job.job_id}) was executed as a regular start."
                )
        return Outcome(True, desc, note=note)
    if isinstance(action, Delay):
        if not state.running:
            return _reject(state, action, Reason.NO_RUNNING_JOBS)
        nxt = min(end for _, end in state.running.values())
        return Outcome(True, f"[t={_fmt_t(state.now)}] Delay accepted; advancing to t={_fmt_t(nxt)}")
    if isinstance(action, Stop):
        if state.waiting:
            return _reject(state, action, Reason.JOBS_WAITING)
        return Outcome(True, f"[t={_fmt_t(state.now)}] Stop accepted; draining running jobs")
    raise TypeError(f"not an action: {action!r}")


def advance_to_next_event(state: ClusterState) -> int:
    """Move the clock to the earliest running completion and retire every job ending then."""
    if not state.running:
        raise SimulationError("advance_to_next_event requires at least one running job")
    t = min(end for _, end in state.running.values())
    state.now = t
    for job_id in sorted(j for j, (_, end) in state.running.items() if end == t):
        start, end = state.running.pop(job_id)
        job = state.jobs[job_id]
        state.available_nodes += job.nodes
        state.available_memory_gb += job.memory_gb
        state.completed[job_id] = (start, end)
    return t


def apply(state: ClusterState, action: Action) -> ClusterState:
    """Execute an accepted action in place and return the state."""
    outcome = validate(state, action)
    if not outcome.accepted:
        raise SimulationError(f"cannot apply rejected action {action.text()}: {outcome.text}")
    if isinstance(action, (StartJob, BackfillJob)):
        job = state.jobs[action.job_id]
        state.waiting.remove(job.job_id)
        state.running[job.job_id] = (state.now, state.now + job.walltime)
        state.available_nodes -= job.nodes
        state.available_memory_gb -= job.memory_gb
    elif isinstance(action, Delay):
        advance_to_next_event(state)
    elif isinstance(action, Stop):
        while state.running:
            advance_to_next_event(state)
        state.stopped = True
    return state


@dataclass(frozen=True)
class Violation:
    t: int
    resource: str
    demand: int
    capacity: int


def audit_schedule(jobs: Sequence[JobSpec], schedule: Schedule, config: ClusterConfig) -> list:
    """Return every capacity violation of ``schedule`` at its event boundaries.

    A job occupies resources on the half-open interval ``[start, start + walltime)``.
    """
    missing = [j.job_id for j in jobs if j.job_id not in schedule]
    if missing:
        raise AuditError(f"schedule has no start time for job(s) {missing}")
    if any(schedule[j.job_id] < 0 for j in jobs):
        raise AuditError("negative start time in schedule")
    spans = [(schedule[j.job_id], schedule[j.job_id] + j.walltime, j) for j in jobs]
    times = sorted({s for s, _, _ in spans} | {e for _, e, _ in spans})
    violations = []
    for t in times:
        nodes = mem = 0
        for start, end, job in spans:
            if start <= t < end:
                nodes += job.nodes
                mem += job.memory_gb
        if nodes > config.total_nodes:
            violations.append(Violation(t, "nodes", nodes, config.total_nodes))
        if mem > config.total_memory_gb:
            violations.append(Violation(t, "memory_gb", mem, config.total_memory_gb))
    return violations


@dataclass
class TraceRecord:
    """One decision step as persisted to ``trace.jsonl``."""

    step: int
    t: int
    prompt_hash: str
    thought: str
    action_text: str
    outcome: str  # "accepted", "rejected" or "forced"
    feedback: Optional[str]

    def to_json(self) -> str:
        return json.dumps(
            {
                "step": self.step,
                "t": self.t,
                "prompt_hash": self.prompt_hash,
                "thought": self.thought,
                "action_text": self.action_text,
                "outcome": self.outcome,
                "feedback": self.feedback,
            },
            ensure_ascii=False,
        )


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def write_trace(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


def read_trace(path) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(TraceRecord(**json.loads(line)))
    return out
