"""Turn executed moves into directional-phrase text.

The same rendering feeds both the tie-break options and the navigation
history shown to the planner.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .envgraph import OBJECT_RADIUS, NavGraph, heading_between, height_delta, objects_within

GO_DOWNSTAIRS = "go downstairs"
GO_UPSTAIRS = "go upstairs"
GO_FORWARD = "go forward"
TURN_LEFT = "turn left"
TURN_RIGHT = "turn right"
TURN_AROUND = "turn around"

DIRECTIONAL_PHRASES = (GO_DOWNSTAIRS, GO_UPSTAIRS, GO_FORWARD, TURN_LEFT, TURN_RIGHT, TURN_AROUND)

FORWARD_LIMIT = 30.0
TURN_LIMIT = 150.0
STAIRS_THRESHOLD = 0.2

HISTORY_STYLES = ("landmark", "symbolic")


def normalize_delta(deg: float) -> float:
    """Wrap an angle difference into (-180, 180]."""
    d = (deg + 180.0) % 360.0 - 180.0
    return 180.0 if d == -180.0 else d


def directional_phrase(heading_delta: float, height_delta: float) -> str:
    """Stairs first (strictly above 0.2 m), then |dtheta| < 30 forward,
    30..150 inclusive a turn, beyond that turn around. Positive = clockwise = right."""
    if abs(height_delta) > STAIRS_THRESHOLD:
        return GO_UPSTAIRS if height_delta > 0 else GO_DOWNSTAIRS
    mag = abs(heading_delta)
    if mag < FORWARD_LIMIT:
        return GO_FORWARD
    if mag <= TURN_LIMIT:
        return TURN_RIGHT if heading_delta > 0 else TURN_LEFT
    return TURN_AROUND


def _clause(text: str) -> str:
    return text.strip().rstrip(".").strip()


def move_geometry(graph: NavGraph, src: str, dst: str, heading: float) -> tuple[float, float, float]:
    """(signed turn in degrees, new heading, height change) for moving src -> dst.

    A purely vertical move keeps the current heading.
    """
    dz = height_delta(graph, src, dst)
    try:
        new_heading = heading_between(graph.position(src), graph.position(dst))
    except ValueError:
        return 0.0, heading % 360.0, dz
    return normalize_delta(new_heading - heading), new_heading, dz


def describe_move(
    graph: NavGraph,
    src: str,
    dst: str,
    scene_of_dst: Optional[str],
    rng: random.Random,
    heading: float = 0.0,
) -> str:
    """Landmark description of one move, e.g.
    ``"turn left to sofa, facing toward a living room."``

    Stairs moves are rendered as the bare phrase. ``heading`` is the agent
    heading before the move.
    """
    turn, _, dz = move_geometry(graph, src, dst, heading)
    phrase = directional_phrase(turn, dz)
    if phrase in (GO_UPSTAIRS, GO_DOWNSTAIRS):
        return phrase + "."
    text = phrase
    objs = objects_within(graph, dst, OBJECT_RADIUS)
    if objs:
        text += " to " + rng.choice(objs).name
    if scene_of_dst:
        text += ", facing toward " + _clause(scene_of_dst)
    return text + "."


def describe_symbolic(turn: float, dist: float) -> str:
    return f"Turn {round(turn):d} degrees. Move {dist:.1f} meters."


@dataclass(frozen=True)
class Step:
    src: str
    dst: Optional[str]  # None marks a stop
    action_text: str
    turn: float = 0.0
    distance: float = 0.0

    @property
    def is_stop(self) -> bool:
        return self.dst is None


@dataclass
class TrajectorySegment:
    steps: list[Step]

    @property
    def moves(self) -> list[Step]:
        return [s for s in self.steps if not s.is_stop]

    @property
    def stopped(self) -> bool:
        return bool(self.steps) and self.steps[-1].is_stop

    def nodes(self) -> list[str]:
        return [s.dst for s in self.moves]  # type: ignore[misc]


def describe_trajectory(segment: TrajectorySegment | Sequence[Step], style: str = "landmark") -> str:
    steps = segment.moves if isinstance(segment, TrajectorySegment) else [s for s in segment if not s.is_stop]
    if not steps:
        return "did not move."
    if style == "landmark":
        return " ".join(s.action_text for s in steps)
    if style == "symbolic":
        return " ".join(describe_symbolic(s.turn, s.distance) for s in steps)
    raise ValueError(f"unknown history style {style!r}")
