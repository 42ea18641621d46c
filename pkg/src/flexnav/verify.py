"""Step 3: feasibility check of a guidance against the view it points at."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import _assets
from .perceive import Observation, ViewDescriptor
from .plan import Finished, Guidance, PlannerOutput
from .providers import Provider, ProviderError

log = logging.getLogger(__name__)

DEFAULT_REASON = "the verifier gave no reason"


@dataclass(frozen=True)
class Verdict:
    feasible: bool
    reason: str = ""

    def __post_init__(self):
        if not self.feasible and not self.reason.strip():
            raise ValueError("an infeasible verdict needs a reason")


FEASIBLE = Verdict(True)


def select_direction_view(observation: Observation, direction: int) -> ViewDescriptor:
    return observation.view(direction)


_VERDICT = re.compile(r"^\W*(INFEASIBLE|FEASIBLE)\b\W*(.*)$", re.IGNORECASE | re.DOTALL)


def parse_verdict(raw: str) -> Optional[Verdict]:
    m = _VERDICT.match(raw.strip())
    if not m:
        return None
    if m.group(1).upper() == "FEASIBLE":
        return FEASIBLE
    reason = " ".join(m.group(2).split())
    return Verdict(False, reason or DEFAULT_REASON)


def verify(provider: Provider, view: ViewDescriptor, guidance: Guidance,
           warnings: Optional[list] = None) -> Verdict:
    """Ask the verifier about one guidance. Fails open on transport or parse errors."""
    content = _assets.prompt("verify.txt").format(
        label=view.orientation_label, scene=view.scene_text, guidance=guidance.text)
    request = {
        "view": {"label": view.orientation_label, "bucket": view.orientation_bucket,
                 "payload": view.scene_text},
        "guidance": guidance.text,
        "messages": [{"role": "user", "content": content}],
    }
    try:
        raw = provider(request)
    except ProviderError as exc:
        msg = f"verifier unavailable, accepting guidance: {exc}"
        log.warning(msg)
        if warnings is not None:
            warnings.append(msg)
        return FEASIBLE
    verdict = parse_verdict(raw)
    if verdict is None:
        msg = f"unparseable verifier reply {raw[:80]!r}, accepting guidance"
        log.warning(msg)
        if warnings is not None:
            warnings.append(msg)
        return FEASIBLE
    return verdict


@dataclass
class LoopOutcome:
    output: PlannerOutput
    planner_calls: int
    verifier_calls: int
    verdicts: list[Verdict] = field(default_factory=list)
    accepted_unverified: bool = False


def plan_verify_loop(
    plan: Callable[[Optional[str]], PlannerOutput],
    check: Callable[[Guidance], Verdict],
    cap: int,
    warnings: Optional[list] = None,
    precheck: Optional[Callable[[Guidance], Optional[str]]] = None,
) -> LoopOutcome:
    """Plan, verify, re-plan with the rejection reason, at most ``cap`` plans.

    ``plan(feedback)`` returns the planner output for the given feedback.
    ``precheck`` may reject a guidance before the verifier sees it (strict
    action-space mode); it is honoured once per loop. When the cap runs out the
    last guidance is accepted anyway.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    feedback: Optional[str] = None
    out = LoopOutcome(Finished(), 0, 0)
    prechecked = False
    for attempt in range(cap):
        output = plan(feedback)
        out.planner_calls += 1
        out.output = output
        if isinstance(output, Finished):
            return out
        if precheck is not None and not prechecked and attempt + 1 < cap:
            reason = precheck(output)
            if reason:
                prechecked = True
                feedback = reason
                continue
        verdict = check(output)
        out.verifier_calls += 1
        out.verdicts.append(verdict)
        if verdict.feasible:
            return out
        feedback = verdict.reason
    out.accepted_unverified = True
    msg = f"re-plan cap {cap} reached, proceeding with the last guidance"
    log.warning(msg)
    if warnings is not None:
        warnings.append(msg)
    return out
