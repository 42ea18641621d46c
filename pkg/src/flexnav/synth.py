"""Seeded synthetic multi-floor houses and episodes for offline runs."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .envgraph import (
    BUCKETS,
    OBJECT_RADIUS,
    Episode,
    NavGraph,
    ObjectAnnotation,
    Pose,
    Viewpoint,
    distance,
    heading_between,
    shortest_path,
)
from .lexicon import ADJECTIVES, OBJECT_NOUNS, ORDINALS, ROOMS
from .perceive import nearest_bucket

SPACING = 2.5
STORY = 3.0
CAMERA_HEIGHT = 1.5
_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass
class _Node:
    vid: str
    floor: int
    cell: tuple[int, int]
    pos: tuple[float, float, float]
    room: str = ""


def _grow_cells(rng: random.Random, k: int) -> tuple[list[tuple[int, int]], list[tuple[int, int, int, int]]]:
    cells = [(0, 0)]
    tree = []
    seen = {(0, 0)}
    while len(cells) < k:
        base = rng.choice(cells)
        dx, dy = rng.choice(_STEPS)
        nxt = (base[0] + dx, base[1] + dy)
        if nxt in seen:
            continue
        seen.add(nxt)
        cells.append(nxt)
        tree.append((*base, *nxt))
    return cells, tree


def generate_environment(n_nodes: int, floors: int = 1, seed: int = 0) -> NavGraph:
    """Connected house graph: grid-like floors joined by one staircase edge each."""
    if floors < 1 or n_nodes < 2 * floors:
        raise ValueError("need at least two nodes per floor")
    rng = random.Random(seed)
    per_floor = [n_nodes // floors + (1 if f < n_nodes % floors else 0) for f in range(floors)]
    nodes: list[_Node] = []
    edges: set[tuple[str, str]] = set()
    by_floor: list[dict[tuple[int, int], _Node]] = []
    room_pool = list(ROOMS)
    rng.shuffle(room_pool)
    idx = 0
    for f, k in enumerate(per_floor):
        cells, tree = _grow_cells(rng, k)
        shift = 1.2 * f
        layer = {}
        for c in cells:
            pos = (
                round(c[0] * SPACING + shift + rng.uniform(-0.3, 0.3), 3),
                round(c[1] * SPACING + rng.uniform(-0.3, 0.3), 3),
                round(f * STORY + CAMERA_HEIGHT + rng.uniform(-0.05, 0.05), 3),
            )
            room = room_pool[(c[0] // 2 + 3 * (c[1] // 2) + 5 * f) % len(room_pool)]
            node = _Node(f"v{idx:02d}", f, c, pos, room)
            idx += 1
            layer[c] = node
            nodes.append(node)
        for ax, ay, bx, by in tree:
            edges.add(tuple(sorted((layer[(ax, ay)].vid, layer[(bx, by)].vid))))
        for c, node in layer.items():
            for dx, dy in ((1, 0), (0, 1)):
                other = layer.get((c[0] + dx, c[1] + dy))
                if other is not None and rng.random() < 0.6:
                    edges.add(tuple(sorted((node.vid, other.vid))))
        by_floor.append(layer)
    for f in range(floors - 1):
        low = rng.choice(sorted(by_floor[f].values(), key=lambda n: n.vid))
        up = min(by_floor[f + 1].values(),
                 key=lambda n: (math.dist(low.pos[:2], n.pos[:2]), n.vid))
        edges.add(tuple(sorted((low.vid, up.vid))))

    pool = [f"{a} {n}" for a in ADJECTIVES for n in OBJECT_NOUNS]
    rng.shuffle(pool)
    objects: dict[str, list[ObjectAnnotation]] = {}
    for node in nodes:
        objs = []
        for j in range(rng.randint(1, 3)):
            r = rng.uniform(0.4, 2.0)
            phi = rng.uniform(0, 2 * math.pi)
            p = (round(node.pos[0] + r * math.sin(phi), 3), round(node.pos[1] + r * math.cos(phi), 3),
                 round(node.pos[2] + rng.uniform(-1.0, 0.5), 3))
            objs.append(ObjectAnnotation(f"{node.vid}_o{j}", pool.pop(), p))
        objects[node.vid] = objs

    all_objs = [o for objs in objects.values() for o in objs]
    adj: dict[str, list[str]] = {n.vid: [] for n in nodes}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    by_id = {n.vid: n for n in nodes}
    vps = []
    for node in nodes:
        scenes = {}
        for b in BUCKETS:
            seen = []
            for o in all_objs:
                d = distance(node.pos, o.position)
                if 0 < d <= OBJECT_RADIUS + 1.0 and math.dist(node.pos[:2], o.position[:2]) > 0:
                    if nearest_bucket(heading_between(node.pos, o.position)) == b:
                        seen.append((d, o.name))
            text = _a(node.room)
            if seen:
                names = [n for _, n in sorted(seen)[:2]]
                text += " with " + " and ".join(_a(n) for n in names)
            else:
                text += " with a plain wall"
            for other in sorted(adj[node.vid]):
                o = by_id[other]
                if nearest_bucket(heading_between(node.pos, o.pos)) != b:
                    continue
                if o.floor > node.floor:
                    text += ", a staircase leading up"
                elif o.floor < node.floor:
                    text += ", a staircase leading down"
                elif o.room != node.room:
                    text += f", an open doorway to the {o.room}"
            scenes[b] = text
        vps.append(Viewpoint(node.vid, Pose(*node.pos), tuple(objects[node.vid]), scenes))
    return NavGraph(vps, sorted(edges))


def _a(noun: str) -> str:
    return ("an " if noun[0] in "aeiou" else "a ") + noun


def _room_of(graph: NavGraph, vid: str) -> str:
    text = graph.viewpoints[vid].scene_descriptions[0]
    return text.split(" with ")[0].split(" ", 1)[1]


def generate_episodes(graph: NavGraph, count: int, seed: int = 0, scan: str = "",
                      min_hops: int = 3, story_height: float = STORY) -> list[Episode]:
    """Episodes whose target is a uniquely named object; goals are all viewpoints
    within 3 m of it, and the start is at least ``min_hops`` moves from every goal."""
    rng = random.Random(seed)
    owned = sorted(
        ((o, vid) for vid, vp in graph.viewpoints.items() for o in vp.objects),
        key=lambda t: t[0].object_id,
    )
    episodes = []
    attempts = 0
    while len(episodes) < count and attempts < 200 * count:
        attempts += 1
        obj, owner = rng.choice(owned)
        goals = tuple(sorted(v for v, vp in graph.viewpoints.items()
                             if distance(vp.position, obj.position) <= OBJECT_RADIUS))
        if not goals:
            continue
        starts = []
        for s in sorted(graph.viewpoints):
            paths = [shortest_path(graph, s, g) for g in goals]
            if any(p is None for p in paths):
                continue
            if min(len(p) - 1 for p in paths) >= min_hops:
                starts.append(s)
        if not starts:
            continue
        start = rng.choice(starts)
        floor = int(graph.position(owner)[2] // story_height)
        ordinal = ORDINALS[min(floor, len(ORDINALS) - 1)]
        instruction = f"Go to the {_room_of(graph, owner)} on the {ordinal} floor and find the {obj.name}."
        episodes.append(Episode(
            id=f"{scan or 'ep'}_{len(episodes):03d}",
            instruction=instruction,
            start_viewpoint=start,
            start_heading=float(rng.randrange(0, 360, 30)),
            goal_viewpoints=goals,
            target_object=obj.name,
            scan=scan,
        ))
    return episodes
