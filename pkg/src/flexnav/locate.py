"""Step 5: pick the target object at the final node."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from typing import Optional

from . import _assets
from .envgraph import OBJECT_RADIUS, NavGraph, objects_within
from .providers import Provider, ProviderError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LocalizationResult:
    target_phrase: str
    candidates: tuple[tuple[str, str, float], ...]  # (object_id, name, score)
    chosen: Optional[str] = None
    chosen_name: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "target_phrase": self.target_phrase,
            "candidates": [list(c) for c in self.candidates],
            "chosen": self.chosen,
            "chosen_name": self.chosen_name,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LocalizationResult":
        return cls(d["target_phrase"], tuple(tuple(c) for c in d["candidates"]),
                   d.get("chosen"), d.get("chosen_name"))


def tokens(text: str) -> set[str]:
    return set(re.findall(r"[a-z0-9]+", text.lower()))


def token_overlap(name: str, target: str) -> float:
    """1.0 on case-insensitive equality, else Jaccard overlap of word tokens."""
    if name.strip().lower() == target.strip().lower():
        return 1.0
    a, b = tokens(name), tokens(target)
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


def extract_target(provider: Provider, instruction: str, warnings: Optional[list] = None) -> str:
    if not instruction.strip():
        raise ValueError("empty instruction")
    content = _assets.prompt("extract_target.txt").format(instruction=instruction.strip())
    try:
        phrase = provider({"instruction": instruction,
                           "messages": [{"role": "user", "content": content}]}).strip().strip('."')
    except ProviderError as exc:
        phrase = ""
        log.warning("target extraction failed: %s", exc)
    if not phrase:
        if warnings is not None:
            warnings.append("target extraction empty, using the whole instruction")
        return instruction.strip()
    return phrase


def choose(scored: list[tuple[str, str, float]]) -> Optional[tuple[str, str, float]]:
    """Highest score; ties to the smallest object id."""
    if not scored:
        return None
    return min(scored, key=lambda c: (-c[2], c[0]))


def locate(provider: Provider, graph: NavGraph, final_node: str, target_phrase: str,
           warnings: Optional[list] = None) -> LocalizationResult:
    cands = objects_within(graph, final_node, OBJECT_RADIUS)
    if not cands:
        return LocalizationResult(target_phrase, ())
    pairs = [[o.name, target_phrase] for o in cands]
    try:
        raw = provider({"pairs": pairs})
        scores = [float(s) for s in json.loads(raw)]
        if len(scores) != len(cands):
            raise ValueError(f"expected {len(cands)} scores, got {len(scores)}")
    except (ProviderError, ValueError, TypeError) as exc:
        if warnings is not None:
            warnings.append(f"object scoring failed, all candidates scored 0: {exc}")
        scores = [0.0] * len(cands)
    scored = [(o.object_id, o.name, s) for o, s in zip(cands, scores)]
    best = choose(scored)
    return LocalizationResult(target_phrase, tuple(scored), best[0], best[1])
