"""Deterministic offline providers.

The oracle planner and the landmark followers read the episode goals and the
graph directly, so whole episodes can run without any model. They exist to
exercise the pipeline, not to measure navigation skill.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from typing import Iterable, Optional, Sequence

from .envgraph import Episode, NavGraph, geodesic, shortest_path
from .execute import STOP_TOKEN
from .lexicon import ADJECTIVES, OBJECT_NOUNS, PLACE_NOUNS
from .locate import token_overlap
from .perceive import nearest_bucket
from .plan import FINISH_TOKEN, Guidance, format_guidance
from .providers import ProviderError, ProviderSet
from .textualize import move_geometry


class ScriptedResponder:
    """Replies from a fixed list; the last reply repeats once the list runs out
    unless ``cycle`` is set."""

    def __init__(self, replies: Sequence[str], cycle: bool = False):
        if not replies:
            raise ValueError("need at least one reply")
        self.replies = list(replies)
        self.cycle = cycle
        self.requests: list[dict] = []

    def __call__(self, request: dict) -> str:
        i = len(self.requests)
        self.requests.append(request)
        if self.cycle:
            return self.replies[i % len(self.replies)]
        return self.replies[min(i, len(self.replies) - 1)]


class FailingProvider:
    def __init__(self, message: str = "provider down"):
        self.message = message
        self.calls = 0

    def __call__(self, request: dict) -> str:
        self.calls += 1
        raise ProviderError(self.message)


def echo_perceiver(request: dict) -> str:
    """Round 1 repeats the stored scene texts; round 2 names the front scene."""
    views = request["views"]
    if request["round"] == 1:
        return "\n".join(f"{v['label']}: {v['payload']}" for v in views)
    front = request["descriptions"][0].split(",")[0]
    return f"in {front}"


def always_feasible(request: dict) -> str:
    return "FEASIBLE"


class KeywordVerifier:
    """Rejects guidances containing any keyword, with the mapped reason."""

    def __init__(self, rules: dict[str, str]):
        self.rules = rules

    def __call__(self, request: dict) -> str:
        text = request["guidance"].lower()
        for kw, reason in self.rules.items():
            if kw.lower() in text:
                return f"INFEASIBLE: {reason}"
        return "FEASIBLE"


def _node_and_heading(request: dict) -> tuple[str, float]:
    meta = request.get("meta") or {}
    if "node" not in meta:
        raise ProviderError("oracle mocks need request meta with the agent node")
    return meta["node"], float(meta.get("heading", 0.0))


def _nearest_goal_path(graph: NavGraph, node: str, goals: Iterable[str]) -> Optional[list[str]]:
    best = min(goals, key=lambda g: (geodesic(graph, node, g), g))
    return shortest_path(graph, node, best)


class OraclePlanner:
    """Walks the shortest path to the goal in hops of ``hops`` viewpoints,
    naming an object at the hop target as the landmark."""

    def __init__(self, graph: NavGraph, episode: Episode, hops: int = 3):
        self.graph = graph
        self.episode = episode
        self.hops = hops

    def __call__(self, request: dict) -> str:
        node, heading = _node_and_heading(request)
        goals = self.episode.goal_viewpoints
        if node in goals:
            return f"Thought: the target is within reach here. {FINISH_TOKEN}"
        path = _nearest_goal_path(self.graph, node, goals)
        if path is None:
            return f"Thought: no way forward. {FINISH_TOKEN}"
        target = path[min(self.hops, len(path) - 1)]
        landmark = self.graph.viewpoints[target].objects[0].name
        turn, _, _ = move_geometry(self.graph, node, path[1], heading)
        g = Guidance(
            thought=f"The {self.episode.target_object} is likely further along; head for the {landmark}",
            direction=nearest_bucket(turn),
            text=f"go to the {landmark}",
        )
        return format_guidance(g)


class OracleStepPlanner:
    """Per-step planner for the call-count baseline: next hop id or Finished!."""

    def __init__(self, graph: NavGraph, episode: Episode):
        self.graph = graph
        self.episode = episode

    def __call__(self, request: dict) -> str:
        node, _ = _node_and_heading(request)
        if node in self.episode.goal_viewpoints:
            return FINISH_TOKEN
        path = _nearest_goal_path(self.graph, node, self.episode.goal_viewpoints)
        return path[1] if path and len(path) > 1 else FINISH_TOKEN


class LandmarkFollower:
    """Heads along the shortest path to the viewpoint owning the most recently
    mentioned landmark, and stops on arrival."""

    def __init__(self, graph: NavGraph):
        self.graph = graph
        self.owner = {}
        for vid in sorted(graph.viewpoints):
            for o in graph.viewpoints[vid].objects:
                self.owner.setdefault(o.name.lower(), vid)
        self._names = sorted(self.owner, key=len, reverse=True)

    def landmark(self, context: str) -> Optional[str]:
        text = context.lower()
        best, best_pos = None, -1
        for name in self._names:
            pos = text.rfind(name)
            if pos > best_pos:
                best, best_pos = name, pos
        return best

    def __call__(self, request: dict) -> str:
        name = self.landmark(request["context"])
        node = request["node"]
        if name is None or self.owner[name] == node:
            return STOP_TOKEN
        path = shortest_path(self.graph, node, self.owner[name])
        return path[1] if path else STOP_TOKEN


class FirstNeighborFollower:
    """Never stops: always moves to the first listed neighbor."""

    def __call__(self, request: dict) -> str:
        nbrs = request["neighbors"]
        return nbrs[0]["id"] if nbrs else STOP_TOKEN


class NoisyFollower:
    """With probability ``p`` replaces the wrapped follower's answer by a random
    neighbor or STOP."""

    def __init__(self, base, p: float, rng: random.Random):
        self.base = base
        self.p = p
        self.rng = rng

    def __call__(self, request: dict) -> str:
        answer = self.base(request)
        if self.rng.random() < self.p:
            choices = [n["id"] for n in request["neighbors"]] + [STOP_TOKEN]
            return self.rng.choice(choices)
        return answer


class ScriptedFollower:
    def __init__(self, actions: Sequence[str]):
        self.actions = list(actions)
        self.calls = 0

    def __call__(self, request: dict) -> str:
        a = self.actions[min(self.calls, len(self.actions) - 1)]
        self.calls += 1
        return a


def lexicon_extractor(request: dict) -> str:
    """Last object noun in the instruction with the adjectives right before it."""
    words = re.findall(r"[a-z]+", request["instruction"].lower())
    for i in range(len(words) - 1, -1, -1):
        w = words[i]
        if w in OBJECT_NOUNS and w not in PLACE_NOUNS:
            j = i
            while j > 0 and words[j - 1] in ADJECTIVES:
                j -= 1
            return " ".join(words[j:i + 1])
    return ""


def token_overlap_scorer(request: dict) -> str:
    return json.dumps([round(token_overlap(name, target), 6) for name, target in request["pairs"]])


def derive_seed(*parts) -> int:
    h = hashlib.sha256(":".join(map(str, parts)).encode()).hexdigest()
    return int(h[:12], 16)


def mock_providers(graph: NavGraph, episode: Episode, seed: int = 0, hops: int = 3,
                   noise: Sequence[float] = (0.0, 0.15, 0.15)) -> ProviderSet:
    """Oracle planner, echo perceiver, feasible verifier, landmark followers with
    optional noise, and a tie-breaker that always answers A (the clean follower's
    proposal is listed first)."""
    followers = []
    for i, p in enumerate(noise):
        base = LandmarkFollower(graph)
        followers.append(NoisyFollower(base, p, random.Random(derive_seed(seed, episode.id, i))) if p else base)
    return ProviderSet(
        planner=OraclePlanner(graph, episode, hops),
        verifier=always_feasible,
        followers=followers,
        tiebreaker=ScriptedResponder(["A"]),
        perceiver=echo_perceiver,
        extractor=lexicon_extractor,
        scorer=token_overlap_scorer,
    )
