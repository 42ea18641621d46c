"""Step 1: textual observation of the agent's surroundings at a node."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from . import _assets
from .envgraph import OBJECT_RADIUS, NavGraph, objects_within
from .providers import Provider

RELATIVE_LABELS = {0: "front", 90: "right", 180: "back", 270: "left"}
COMPASS_LABELS = {0: "north", 90: "east", 180: "south", 270: "west"}
VIEW_ORDER = (0, 90, 180, 270)
STORY_HEIGHT = 3.0


class PerceptionError(RuntimeError):
    pass


@dataclass(frozen=True)
class ViewDescriptor:
    orientation_bucket: int  # relative to agent heading
    orientation_label: str
    scene_text: str


@dataclass(frozen=True)
class Observation:
    node: str
    height_m: float
    floor_index: int
    position_desc: str
    views: tuple[ViewDescriptor, ...]
    objects_in_3m: tuple[str, ...]

    @property
    def formatted_text(self) -> str:
        return format_observation(self)

    def view(self, bucket: int) -> ViewDescriptor:
        for v in self.views:
            if v.orientation_bucket == bucket:
                return v
        raise KeyError(bucket)


def nearest_bucket(heading: float) -> int:
    """Snap a heading to the closest multiple of 90; exact halves round up."""
    return int(math.floor((heading % 360.0) / 90.0 + 0.5)) % 4 * 90


def absolute_buckets(agent_heading: float) -> list[int]:
    return [nearest_bucket(agent_heading + rel) for rel in VIEW_ORDER]


def discretize_views(graph: NavGraph, node: str, agent_heading: float,
                     label_mode: str = "relative") -> list[ViewDescriptor]:
    """Four agent-frame views filled from the stored absolute scene texts."""
    vp = graph.viewpoints[node]
    if vp.scene_descriptions is None:
        raise PerceptionError(f"viewpoint {node} has no stored scene descriptions")
    out = []
    for rel, absb in zip(VIEW_ORDER, absolute_buckets(agent_heading)):
        label = RELATIVE_LABELS[rel] if label_mode == "relative" else COMPASS_LABELS[absb]
        out.append(ViewDescriptor(rel, label, vp.scene_descriptions[absb]))
    return out


def infer_floor(height_m: float, story_height: float = STORY_HEIGHT) -> int:
    if not math.isfinite(height_m):
        raise ValueError("height must be finite")
    return max(0, math.floor(height_m / story_height))


def _clause(text: str) -> str:
    return text.strip().rstrip(".").strip()


def format_observation(obs: Observation) -> str:
    parts = [f"Height off ground is {obs.height_m:.1f} meters."]
    if obs.position_desc.strip():
        parts.append(_clause(obs.position_desc) + ".")
    for v in obs.views:
        parts.append(f"{v.orientation_label}: {_clause(v.scene_text)}.")
    objs = ", ".join(obs.objects_in_3m) if obs.objects_in_3m else "none"
    parts.append(f"Objects in 3m: {objs}.")
    return " ".join(parts)


_VIEW_LINE = re.compile(r"^\s*[-*]?\s*([A-Za-z]+)\s*:\s*(.+?)\s*$")


def _parse_round1(raw: str, labels: list[str]) -> dict[str, str]:
    found = {}
    for line in raw.splitlines():
        m = _VIEW_LINE.match(line)
        if m and m.group(1).lower() in labels and m.group(1).lower() not in found:
            found[m.group(1).lower()] = m.group(2)
    return found


def perceive(provider: Provider, graph: NavGraph, node: str, agent_heading: float,
             story_height: float = STORY_HEIGHT, label_mode: str = "relative",
             with_position: bool = True) -> Observation:
    """Two-round perception: joint per-view descriptions, then position inference."""
    vp = graph.viewpoints[node]
    if vp.scene_descriptions is not None:
        views = discretize_views(graph, node, agent_heading, label_mode)
        payloads = [v.scene_text for v in views]
    else:
        absb = absolute_buckets(agent_heading)
        labels = [RELATIVE_LABELS[r] if label_mode == "relative" else COMPASS_LABELS[a]
                  for r, a in zip(VIEW_ORDER, absb)]
        views = [ViewDescriptor(r, lab, "") for r, lab in zip(VIEW_ORDER, labels)]
        payloads = [f"image://{node}/{a}" for a in absb]
    labels = [v.orientation_label for v in views]
    view_req = [{"label": lab, "payload": p} for lab, p in zip(labels, payloads)]

    listing = "\n".join(f"{lab}: <{p}>" for lab, p in zip(labels, payloads))
    round1 = [{"role": "user", "content": _assets.prompt("perceive_round1.txt") + "\n" + listing}]
    raw1 = provider({"round": 1, "views": view_req, "messages": round1})
    described = _parse_round1(raw1, labels)
    missing = [lab for lab in labels if lab not in described]
    if missing:
        raise PerceptionError(f"perceiver gave no description for {missing} at {node}")
    descs = [described[lab] for lab in labels]

    position = ""
    if with_position:
        round2 = round1 + [
            {"role": "assistant", "content": raw1},
            {"role": "user", "content": _assets.prompt("perceive_round2.txt")},
        ]
        position = provider({"round": 2, "views": view_req, "descriptions": descs,
                             "messages": round2}).strip()

    names: list[str] = []
    for obj in objects_within(graph, node, OBJECT_RADIUS):
        if obj.name not in names:
            names.append(obj.name)
    z = vp.position[2]
    return Observation(
        node=node,
        height_m=z,
        floor_index=infer_floor(z, story_height),
        position_desc=position,
        views=tuple(ViewDescriptor(v.orientation_bucket, v.orientation_label, d)
                    for v, d in zip(views, descs)),
        objects_in_3m=tuple(names),
    )
