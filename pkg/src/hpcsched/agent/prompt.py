"""Prompt rendering for the ReAct scheduling agent."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Optional, Sequence

from ..sim import ClusterState

PREAMBLE = (
    "You are scheduling batch jobs on a shared HPC cluster. Each turn you see the "
    "cluster state, the queue, your own earlier decisions with any feedback, and "
    "per-user wait statistics. Pick one action for the current moment."
)

COMPLETED_SHOWN = 10


@dataclass
class ScratchpadEntry:
    t: int
    thought: str
    action_text: str
    feedback: Optional[str] = None
    forced: bool = False
    rejected: bool = False

    def render(self, index: int) -> str:
        tag = " [forced by harness]" if self.forced else ""
        lines = [f"Step {index} (t={self.t}){tag}"]
        thought = self.thought.strip() or "(no thought given)"
        lines.append(f"Thought: {thought}")
        lines.append(f"Action: {self.action_text}")
        if self.feedback:
            lines.append(self.feedback)
        return "\n".join(lines)


def _objectives(config) -> str:
    return "\n".join(
        [
            "Goals (weigh them together):",
            "- Fairness: keep wait times even across users; nobody should starve.",
            "- Makespan: finish the whole workload early.",
            "- Utilization: keep nodes and memory busy.",
            "- Throughput: complete many jobs per unit time.",
            f"- Feasibility: never go above {config.total_nodes} Nodes or "
            f"{config.total_memory_gb} GB memory.",
            "",
            "Favoring one goal may cost another. A long-waiting job started now helps fairness",
            "and may stretch the makespan; short jobs first lift throughput and can delay big jobs.",
        ]
    )


DECIDE = "\n".join(
    [
        "Choose exactly one action:",
        "   - StartJob(job_id=X)",
        "   - BackfillJob(job_id=Y)",
        "   - Delay   (wait for the next job completion)",
        "   - Stop    (only once every job has started)",
        "",
        "Output format:",
        "Thought: <your reasoning>",
        "Action: <your action>",
    ]
)


def fairness_indicators(state: ClusterState) -> dict:
    """Mean wait per user over completed jobs, keyed by user_id."""
    waits = defaultdict(list)
    for job_id, (start, _) in state.completed.items():
        waits[state.jobs[job_id].user_id].append(start)
    return {user: sum(w) / len(w) for user, w in sorted(waits.items())}


def _scratchpad_section(entries: Sequence[ScratchpadEntry], window: Optional[int]) -> str:
    if not entries:
        return "(nothing yet)"
    indexed = list(enumerate(entries, start=1))
    if window is None or len(indexed) <= window:
        return "\n\n".join(e.render(i) for i, e in indexed)
    shown = indexed[-window:] if window > 0 else []
    omitted = len(indexed) - len(shown)
    pinned = None
    rejected = [(i, e) for i, e in indexed if e.rejected]
    if rejected and rejected[-1] not in shown:
        pinned = rejected[-1]
        omitted -= 1
    parts = [f"... ({omitted} earlier entries omitted)"]
    if pinned is not None:
        parts.append("Most recent rejection:\n" + pinned[1].render(pinned[0]))
    parts.extend(e.render(i) for i, e in shown)
    return "\n\n".join(parts)


def build_prompt(
    state: ClusterState,
    scratchpad: Sequence[ScratchpadEntry] = (),
    fairness_context: Optional[dict] = None,
    window: Optional[int] = None,
) -> str:
    """Render the full single-turn prompt for the current decision point."""
    cfg = state.config
    jobs = state.jobs
    out = [PREAMBLE, ""]
    out.append(f"System capacity: {cfg.total_nodes} nodes, {cfg.total_memory_gb} GB memory")
    out.append(f"Current time: {state.now}")
    out.append(f"Available Nodes: {state.available_nodes}")
    out.append(f"Available Memory: {state.available_memory_gb} GB")
    out.append("")

    out.append("Running Jobs:")
    if state.running:
        for jid, (start, end) in sorted(state.running.items()):
            j = jobs[jid]
            out.append(
                f"- Job {jid}: user={j.user_id}, {j.nodes} Nodes, {j.memory_gb} GB, "
                f"start={start}, end={end}"
            )
    else:
        out.append("None")
    out.append("")

    out.append("Completed Jobs:")
    if state.completed:
        recent = sorted(state.completed.items(), key=lambda kv: (kv[1][1], kv[0]))[-COMPLETED_SHOWN:]
        out.append(f"{len(state.completed)} completed; most recent {len(recent)}:")
        for jid, (start, end) in recent:
            j = jobs[jid]
            out.append(f"- Job {jid}: user={j.user_id}, start={start}, end={end}, wait={start}")
    else:
        out.append("None")
    out.append("")

    out.append("Waiting Jobs (eligible to schedule):")
    if state.waiting:
        for jid in state.waiting:
            j = jobs[jid]
            out.append(
                f"- Job {jid}: user={j.user_id}, {j.nodes} Nodes, {j.memory_gb} GB, "
                f"walltime={j.walltime}, waited={state.now - j.submit_time}"
            )
    else:
        out.append("None")
    out.append("")

    fairness = fairness_indicators(state) if fairness_context is None else fairness_context
    out.append("Fairness indicators (mean wait of completed jobs per user):")
    if fairness:
        out.append(", ".join(f"{u}: {w:.1f}s" for u, w in fairness.items()))
    else:
        out.append("(no completed jobs yet)")
    out.append("")

    out.append("# Scratchpad (Decision History)")
    out.append(_scratchpad_section(scratchpad, window))
    out.append("")
    out.append(_objectives(cfg))
    out.append("")
    out.append(DECIDE)
    return "\n".join(out) + "\n"
