"""Step 4: ensemble execution of one guidance.

Each step every follower proposes a move; a unanimous proposal is executed
directly, a split is settled by the tie-breaker as a multiple-choice question.
"""

from __future__ import annotations

import logging
import re
import string
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from . import _assets
from .envgraph import NavGraph, neighbors
from .perceive import discretize_views
from .plan import Guidance
from .providers import Provider, ProviderError
from .state import EpisodeState
from .textualize import Step, TrajectorySegment, describe_move, describe_trajectory, move_geometry

log = logging.getLogger(__name__)

STOP_TOKEN = "STOP"
STOP_TEXT = "stop here"
CONTEXT_MODES = ("single", "multi")


@dataclass(frozen=True)
class MoveTo:
    node: str


@dataclass(frozen=True)
class Stop:
    pass


Action = Union[MoveTo, Stop]


@dataclass(frozen=True)
class VoteResult:
    proposals: tuple[Optional[Action], ...]  # None = abstained
    options: tuple[Action, ...]  # distinct proposals, in order of first proposer

    @property
    def unanimous(self) -> bool:
        return len(self.options) == 1

    @property
    def action(self) -> Action:
        if not self.unanimous:
            raise ValueError("split vote has no single action")
        return self.options[0]


def guidance_context(mode: str, guidances: Sequence[str]) -> str:
    if not guidances:
        raise ValueError("no guidance yet")
    if mode == "single":
        return guidances[-1]
    if mode == "multi":
        return ". ".join(g.strip().rstrip(".") for g in guidances)
    raise ValueError(f"unknown guidance context mode {mode!r}")


def parse_follower_reply(raw: str, candidates: Sequence[str]) -> Optional[Action]:
    token = raw.strip().strip(".").strip()
    if token.upper() == STOP_TOKEN:
        return Stop()
    if token in candidates:
        return MoveTo(token)
    return None


def step_votes(followers: Sequence[Provider], request: dict,
               warnings: Optional[list] = None) -> Optional[VoteResult]:
    """Query every follower once. Returns None when all of them abstain."""
    cands = [n["id"] for n in request["neighbors"]]
    proposals: list[Optional[Action]] = []
    for i, follower in enumerate(followers):
        try:
            act = parse_follower_reply(follower(request), cands)
        except ProviderError as exc:
            act = None
            if warnings is not None:
                warnings.append(f"follower{i} failed: {exc}")
        else:
            if act is None and warnings is not None:
                warnings.append(f"follower{i} proposed an invalid action, abstaining")
        proposals.append(act)
    options: list[Action] = []
    for p in proposals:
        if p is not None and p not in options:
            options.append(p)
    if not options:
        return None
    return VoteResult(tuple(proposals), tuple(options))


def plurality(proposals: Sequence[Optional[Action]]) -> Action:
    """Most proposed action; ties go to the one proposed by the lowest follower index."""
    counts = Counter(p for p in proposals if p is not None)
    best = max(counts.values())
    for p in proposals:
        if p is not None and counts[p] == best:
            return p
    raise ValueError("no proposals")


def tiebreak_prompt(guidance: str, iter_history: str, option_texts: Sequence[str]) -> str:
    letters = string.ascii_uppercase
    options = "\n".join(f"{letters[i]}. {t}" for i, t in enumerate(option_texts))
    return _assets.prompt("tiebreak.txt").format(
        guidance=guidance, history=iter_history or "none", options=options)


def parse_letter(raw: str, n_options: int) -> Optional[int]:
    m = re.search(r"\b([A-Z])\b", raw.strip())
    if not m:
        m = re.fullmatch(r"\W*([a-z])\W*", raw.strip())
    if not m:
        return None
    idx = ord(m.group(1).upper()) - ord("A")
    return idx if idx < n_options else None


def tie_break(provider: Provider, context: str, iter_history: str, vote: VoteResult,
              option_texts: Sequence[str], warnings: Optional[list] = None) -> tuple[Action, bool]:
    """Returns (chosen action, whether the plurality fallback was used)."""
    prompt = tiebreak_prompt(context, iter_history, option_texts)
    try:
        raw = provider({"messages": [{"role": "user", "content": prompt}],
                        "options": list(option_texts)})
        idx = parse_letter(raw, len(vote.options))
    except ProviderError as exc:
        idx = None
        raw = f"<error: {exc}>"
    if idx is None:
        if warnings is not None:
            warnings.append(f"tie-break reply {raw[:40]!r} unusable, using plurality")
        return plurality(vote.proposals), True
    return vote.options[idx], False


def _front_scene(graph: NavGraph, node: str, heading: float) -> Optional[str]:
    if graph.viewpoints[node].scene_descriptions is None:
        return None
    return discretize_views(graph, node, heading)[0].scene_text


def follower_request(graph: NavGraph, state: EpisodeState, context: str,
                     observation_text: str) -> dict:
    nbrs = []
    for n in neighbors(graph, state.node):
        turn, _, dz = move_geometry(graph, state.node, n, state.heading)
        nbrs.append({"id": n, "heading": round(turn, 6), "distance": round(graph.weight(state.node, n), 6),
                     "height": round(dz, 6)})
    return {
        "context": context,
        "node": state.node,
        "neighbors": nbrs,
        "memory_map": state.memory.summary(),
        "observation": observation_text,
    }


def execute_guidance(
    graph: NavGraph,
    state: EpisodeState,
    guidance: Guidance,
    followers: Sequence[Provider],
    tiebreaker: Provider,
    context_mode: str = "multi",
    max_moves: int = 5,
    observation_text: str = "",
) -> TrajectorySegment:
    """Run the follower ensemble on ``guidance`` for at most ``max_moves`` moves."""
    state.guidances.append(guidance.text)
    context = guidance_context(context_mode, state.guidances)
    steps: list[Step] = []
    state.memory.visit(state.node, neighbors(graph, state.node))
    moves = 0
    while moves < max_moves:
        request = follower_request(graph, state, context, observation_text)
        vote = step_votes(followers, request, state.warnings)
        if vote is None:
            state.warn(f"all followers abstained at {state.node}")
            break

        def render(action: Action) -> str:
            if isinstance(action, Stop):
                return STOP_TEXT
            _, new_heading, _ = move_geometry(graph, state.node, action.node, state.heading)
            return describe_move(graph, state.node, action.node,
                                 _front_scene(graph, action.node, new_heading), state.rng, state.heading)

        texts = [render(a) for a in vote.options]
        if vote.unanimous:
            state.unanimous_steps += 1
            action, text = vote.options[0], texts[0]
            fallback = False
        else:
            state.split_steps += 1
            action, fallback = tie_break(tiebreaker, context, describe_trajectory(steps), vote,
                                         texts, state.warnings)
            text = texts[vote.options.index(action)]
        state.event("vote", node=state.node,
                    proposals=[None if p is None else _action_str(p) for p in vote.proposals],
                    chosen=_action_str(action), unanimous=vote.unanimous, fallback=fallback)
        if isinstance(action, Stop):
            steps.append(Step(state.node, None, STOP_TEXT))
            break
        turn, new_heading, _ = move_geometry(graph, state.node, action.node, state.heading)
        steps.append(Step(state.node, action.node, text, turn, graph.weight(state.node, action.node)))
        state.event("move", src=state.node, dst=action.node, text=text)
        state.node = action.node
        state.heading = new_heading
        state.trajectory.append(action.node)
        state.memory.visit(action.node, neighbors(graph, action.node))
        moves += 1
    return TrajectorySegment(steps)


def _action_str(action: Action) -> str:
    return STOP_TOKEN if isinstance(action, Stop) else action.node
