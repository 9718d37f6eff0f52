"""Extract (Thought, Action) from a model response."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..sim import Action, BackfillJob, Delay, StartJob, Stop

_ACTION_MARK = re.compile(r"action\s*:", re.IGNORECASE)
_THOUGHT_MARK = re.compile(r"thought\s*:", re.IGNORECASE)
_JOB_CALL = re.compile(
    r"^(startjob|backfilljob)\s*\(\s*(?:job_?id\s*=\s*)?(\d+)\s*\)$", re.IGNORECASE
)


@dataclass(frozen=True)
class ParseFailure:
    reason: str
    thought: str = ""


def parse_response(text: str):
    """Return ``(thought, action)`` or a :class:`ParseFailure`.

    The action comes from the line holding the last ``Action:`` marker. The
    thought spans from the first ``Thought:`` marker up to that marker.
    """
    marks = list(_ACTION_MARK.finditer(text))
    if not marks:
        return ParseFailure("no Action line")
    last = marks[-1]
    first_thought = _THOUGHT_MARK.search(text, 0, last.start())
    thought = text[first_thought.end():last.start()].strip() if first_thought else ""
    # the model may bold the marker: "**Action:** Delay"
    thought = thought.rstrip("*# \n").strip()

    raw = text[last.end():].split("\n", 1)[0]
    token = raw.strip().strip("`*_ ").strip()
    token = token.rstrip(".").strip()
    if not token:
        return ParseFailure("empty Action line", thought)
    low = token.lower()
    if low == "delay":
        return thought, Delay()
    if low == "stop":
        return thought, Stop()
    compact = re.sub(r"\s+", "", token) if "(" in token else token
    m = _JOB_CALL.match(compact) or _JOB_CALL.match(token)
    if m:
        cls = StartJob if m.group(1).lower() == "startjob" else BackfillJob
        return thought, cls(int(m.group(2)))
    return ParseFailure(f"unrecognized action {token!r}", thought)


def action_text(action: Action) -> str:
    return action.text()
