"""The observe / prompt / act / feedback loop driving the simulator."""

from __future__ import annotations

import logging
import statistics
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .. import sim
from ..sim import ClusterState, Delay, StartJob, Stop, TraceRecord
from ..workload import ClusterConfig, JobSpec
from .parsing import ParseFailure, parse_response
from .prompt import ScratchpadEntry, build_prompt
from .providers import Provider

log = logging.getLogger(__name__)


class AgentBudgetExceeded(RuntimeError):
    pass


@dataclass
class OverheadReport:
    total_elapsed: float = 0.0
    call_count: int = 0
    per_call_latencies: list = field(default_factory=list)
    rejected_action_count: int = 0
    forced_action_count: int = 0

    @property
    def total_latency(self) -> float:
        return float(sum(self.per_call_latencies))

    def latency_stats(self) -> dict:
        lat = self.per_call_latencies
        if not lat:
            return {"mean_latency": 0.0, "median_latency": 0.0, "p95_latency": 0.0}
        return {
            "mean_latency": float(np.mean(lat)),
            "median_latency": float(statistics.median(lat)),
            "p95_latency": float(np.percentile(lat, 95)),
        }

    def to_dict(self) -> dict:
        return {
            "total_elapsed": self.total_elapsed,
            "call_count": self.call_count,
            "per_call_latencies": list(self.per_call_latencies),
            "rejected_action_count": self.rejected_action_count,
            "forced_action_count": self.forced_action_count,
            "total_latency": self.total_latency,
            **self.latency_stats(),
        }


@dataclass
class AgentRun:
    schedule: dict
    scratchpad: list
    overhead: OverheadReport
    records: list
    prompts: list


def _forced_action(state: ClusterState):
    if state.running:
        return Delay()
    if not state.waiting:
        return Stop()
    for jid in state.waiting:
        if state.fits(state.jobs[jid]):
            return StartJob(jid)
    raise AssertionError("an empty cluster always admits some waiting job")


def run_react_loop(
    jobs: Sequence[JobSpec],
    config: ClusterConfig,
    provider: Provider,
    max_calls: Optional[int] = None,
    max_consecutive_rejects: int = 5,
    scratchpad_window: Optional[int] = None,
    keep_prompts: bool = False,
) -> AgentRun:
    """Schedule ``jobs`` by repeatedly querying ``provider`` for one action.

    Every provider response becomes one scratchpad entry. After
    ``max_consecutive_rejects`` rejections in a row the harness forces a
    safe action; once nothing is waiting, the model gets one more step to
    say Stop before the harness stops for it.

    Raises:
        AgentBudgetExceeded: more than ``max_calls`` provider calls needed.
        ProviderError: the provider failed hard.
    """
    if max_calls is None:
        max_calls = 10 * len(jobs)
    state = sim.new_state(config, jobs)
    pad: list = []
    records: list = []
    prompts: list = []
    report = OverheadReport()
    consecutive = 0
    steps_since_empty = 0
    t_start = time.perf_counter()

    def record(entry, phash, outcome):
        pad.append(entry)
        records.append(
            TraceRecord(
                step=len(records) + 1,
                t=entry.t,
                prompt_hash=phash,
                thought=entry.thought,
                action_text=entry.action_text,
                outcome=outcome,
                feedback=entry.feedback,
            )
        )

    def force(action, why):
        t = state.now
        outcome = sim.validate(state, action)
        assert outcome.accepted, outcome.text
        sim.apply(state, action)
        report.forced_action_count += 1
        entry = ScratchpadEntry(
            t=t,
            thought=f"[harness] {why}",
            action_text=action.text(),
            feedback=outcome.note,
            forced=True,
        )
        record(entry, "", "forced")

    while not state.stopped:
        if report.call_count >= max_calls:
            report.total_elapsed = time.perf_counter() - t_start
            raise AgentBudgetExceeded(
                f"call budget of {max_calls} exhausted at t={state.now} with "
                f"{len(state.waiting)} job(s) waiting"
            )
        prompt = build_prompt(state, pad, window=scratchpad_window)
        if keep_prompts:
            prompts.append(prompt)
        result = provider.complete(prompt)
        report.call_count += 1
        report.per_call_latencies.append(result.latency)

        t = state.now
        parsed = parse_response(result.text)
        if isinstance(parsed, ParseFailure):
            feedback = sim.render_feedback(state, None, sim.Reason.UNPARSEABLE, parsed.reason)
            entry = ScratchpadEntry(t, parsed.thought, "<none>", feedback, rejected=True)
            accepted = False
        else:
            thought, action = parsed
            outcome = sim.validate(state, action)
            accepted = outcome.accepted
            if accepted:
                sim.apply(state, action)
            entry = ScratchpadEntry(t, thought, action.text(), outcome.feedback, rejected=not accepted)
        record(entry, sim.prompt_hash(prompt), "accepted" if accepted else "rejected")

        if accepted:
            consecutive = 0
        else:
            consecutive += 1
            report.rejected_action_count += 1
            log.debug("rejected step at t=%s: %s", t, entry.feedback)

        if state.stopped:
            break
        if consecutive >= max_consecutive_rejects:
            force(_forced_action(state), f"{consecutive} consecutive rejections; forcing a safe action")
            consecutive = 0
        if not state.waiting and not state.stopped:
            steps_since_empty += 1
            if steps_since_empty > 1:
                force(Stop(), "all jobs have start times; stopping")

    report.total_elapsed = time.perf_counter() - t_start
    schedule = state.schedule
    violations = sim.audit_schedule(list(state.jobs.values()), schedule, config)
    assert not violations, f"validated actions produced an infeasible schedule: {violations}"
    return AgentRun(schedule=schedule, scratchpad=pad, overhead=report, records=records, prompts=prompts)
