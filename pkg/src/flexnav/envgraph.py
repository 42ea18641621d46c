"""Environment model: an undirected weighted graph of viewpoints.

Coordinates are meters. Compass headings use 0 deg = +y and grow clockwise,
so +x is 90 deg.
"""

from __future__ import annotations

import heapq
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

OBJECT_RADIUS = 3.0
BUCKETS = (0, 90, 180, 270)


class GraphFormatError(ValueError):
    """Environment file could not be parsed."""


class GraphValidationError(ValueError):
    """Environment file parsed but violates a graph invariant."""


class UnknownNodeError(KeyError):
    pass


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    z: float
    heading: float = 0.0
    elevation: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "heading", float(self.heading) % 360.0)
        if not -90.0 <= self.elevation <= 90.0:
            raise ValueError(f"elevation {self.elevation} outside [-90, 90]")

    @property
    def position(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class ObjectAnnotation:
    object_id: str
    name: str
    position: tuple[float, float, float]


@dataclass(frozen=True)
class Viewpoint:
    id: str
    pose: Pose
    objects: tuple[ObjectAnnotation, ...] = ()
    # absolute bucket (0/90/180/270) -> scene text
    scene_descriptions: Optional[dict[int, str]] = None

    def __post_init__(self):
        ids = [o.object_id for o in self.objects]
        if len(ids) != len(set(ids)):
            raise GraphValidationError(f"duplicate object id at viewpoint {self.id}")
        if self.scene_descriptions is not None and set(self.scene_descriptions) != set(BUCKETS):
            raise GraphValidationError(
                f"viewpoint {self.id}: scenes must have exactly the buckets {BUCKETS}"
            )

    @property
    def position(self) -> tuple[float, float, float]:
        return self.pose.position


@dataclass(frozen=True)
class Episode:
    id: str
    instruction: str
    start_viewpoint: str
    start_heading: float
    goal_viewpoints: tuple[str, ...]
    target_object: str
    scan: str = ""

    def __post_init__(self):
        if not self.goal_viewpoints:
            raise ValueError(f"episode {self.id} has no goal viewpoints")

    def check_against(self, graph: "NavGraph") -> None:
        for node in (self.start_viewpoint, *self.goal_viewpoints):
            if node not in graph.viewpoints:
                raise GraphValidationError(f"episode {self.id}: unknown viewpoint {node!r}")


def distance(p: Sequence[float], q: Sequence[float]) -> float:
    return math.dist(p, q)


def _edge_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


class NavGraph:
    """Immutable navigation graph. Edge weights are Euclidean distances.

    Shortest-path trees are cached per source; the cache only ever grows, so
    sharing one graph between threads is safe.
    """

    def __init__(self, viewpoints: Iterable[Viewpoint], edges: Iterable[tuple[str, str]]):
        self.viewpoints: dict[str, Viewpoint] = {}
        for vp in viewpoints:
            if vp.id in self.viewpoints:
                raise GraphValidationError(f"duplicate viewpoint id {vp.id!r}")
            self.viewpoints[vp.id] = vp
        adj: dict[str, dict[str, float]] = {v: {} for v in self.viewpoints}
        keys = set()
        for a, b in edges:
            if a == b:
                raise GraphValidationError(f"self-loop on {a!r}")
            for end in (a, b):
                if end not in self.viewpoints:
                    raise GraphValidationError(f"edge ({a}, {b}) references unknown viewpoint {end!r}")
            w = distance(self.viewpoints[a].position, self.viewpoints[b].position)
            adj[a][b] = w
            adj[b][a] = w
            keys.add(_edge_key(a, b))
        self.edges: frozenset[tuple[str, str]] = frozenset(keys)
        self._adj = adj
        self._sorted_nbrs = {v: tuple(sorted(n)) for v, n in adj.items()}
        self._sssp: dict[str, tuple[dict[str, float], dict[str, str]]] = {}
        self.warnings: list[str] = []
        n_comp = len(self.components())
        if n_comp > 1:
            msg = f"graph has {n_comp} connected components"
            self.warnings.append(msg)
            warnings.warn(msg, stacklevel=2)

    def __contains__(self, node: str) -> bool:
        return node in self.viewpoints

    def __len__(self) -> int:
        return len(self.viewpoints)

    def _check(self, node: str) -> None:
        if node not in self.viewpoints:
            raise UnknownNodeError(node)

    def position(self, node: str) -> tuple[float, float, float]:
        self._check(node)
        return self.viewpoints[node].position

    def weight(self, a: str, b: str) -> float:
        try:
            return self._adj[a][b]
        except KeyError:
            raise GraphValidationError(f"no edge between {a!r} and {b!r}") from None

    def has_edge(self, a: str, b: str) -> bool:
        return b in self._adj.get(a, {})

    def components(self) -> list[set[str]]:
        seen: set[str] = set()
        comps = []
        for start in sorted(self.viewpoints):
            if start in seen:
                continue
            comp = {start}
            stack = [start]
            while stack:
                u = stack.pop()
                for v in self._adj[u]:
                    if v not in comp:
                        comp.add(v)
                        stack.append(v)
            seen |= comp
            comps.append(comp)
        return comps

    def shortest_paths_from(self, source: str) -> tuple[dict[str, float], dict[str, str]]:
        """Dijkstra from ``source``: (distances, predecessor map)."""
        self._check(source)
        cached = self._sssp.get(source)
        if cached is not None:
            return cached
        dist = {source: 0.0}
        prev: dict[str, str] = {}
        heap = [(0.0, source)]
        done = set()
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            for v in self._sorted_nbrs[u]:
                nd = d + self._adj[u][v]
                if nd < dist.get(v, math.inf):
                    dist[v] = nd
                    prev[v] = u
                    heapq.heappush(heap, (nd, v))
        self._sssp[source] = (dist, prev)
        return dist, prev


def neighbors(graph: NavGraph, node: str) -> list[str]:
    graph._check(node)
    return list(graph._sorted_nbrs[node])


def geodesic(graph: NavGraph, a: str, b: str) -> float:
    """Shortest weighted path length; ``math.inf`` when unreachable."""
    graph._check(b)
    dist, _ = graph.shortest_paths_from(a)
    return dist.get(b, math.inf)


def shortest_path(graph: NavGraph, a: str, b: str) -> Optional[list[str]]:
    graph._check(b)
    dist, prev = graph.shortest_paths_from(a)
    if b not in dist:
        return None
    path = [b]
    while path[-1] != a:
        path.append(prev[path[-1]])
    return path[::-1]


def objects_within(graph: NavGraph, node: str, radius: float = OBJECT_RADIUS) -> list[ObjectAnnotation]:
    """Annotated objects (from any viewpoint) within ``radius`` of ``node``, inclusive.

    An object annotated at several viewpoints is reported once. Sorted by
    distance, then object id.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    here = graph.position(node)
    found: dict[str, tuple[float, ObjectAnnotation]] = {}
    for vp in graph.viewpoints.values():
        for obj in vp.objects:
            if obj.object_id in found:
                continue
            d = distance(here, obj.position)
            if d <= radius:
                found[obj.object_id] = (d, obj)
    return [obj for d, obj in sorted(found.values(), key=lambda t: (t[0], t[1].object_id))]


def heading_between(src: Pose | Sequence[float], dst: Sequence[float]) -> float:
    """Compass heading of the planar displacement ``src -> dst`` in [0, 360)."""
    if isinstance(src, Pose):
        src = src.position
    dx = dst[0] - src[0]
    dy = dst[1] - src[1]
    if dx == 0 and dy == 0:
        raise ValueError("zero planar displacement has no heading")
    return math.degrees(math.atan2(dx, dy)) % 360.0


def height_delta(graph: NavGraph, a: str, b: str) -> float:
    return graph.position(b)[2] - graph.position(a)[2]


# -- serialization -----------------------------------------------------------

def graph_to_dict(graph: NavGraph) -> dict:
    vps = []
    for vid in sorted(graph.viewpoints):
        vp = graph.viewpoints[vid]
        rec = {
            "id": vp.id,
            "position": list(vp.position),
            "objects": [
                {"id": o.object_id, "name": o.name, "position": list(o.position)} for o in vp.objects
            ],
        }
        if vp.scene_descriptions is not None:
            rec["scenes"] = {str(k): vp.scene_descriptions[k] for k in BUCKETS}
        vps.append(rec)
    return {"viewpoints": vps, "edges": [list(e) for e in sorted(graph.edges)]}


def dumps_graph(graph: NavGraph) -> str:
    return json.dumps(graph_to_dict(graph), indent=2, sort_keys=True) + "\n"


def save_graph(graph: NavGraph, path: str | Path) -> None:
    Path(path).write_text(dumps_graph(graph), encoding="utf-8")


def _triple(value, where: str) -> tuple[float, float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise GraphValidationError(f"{where}: position must be [x, y, z]")
    try:
        return tuple(float(c) for c in value)  # type: ignore[return-value]
    except (TypeError, ValueError):
        raise GraphValidationError(f"{where}: non-numeric position {value!r}") from None


def graph_from_dict(data: dict, source: str = "<dict>") -> NavGraph:
    if not isinstance(data, dict) or "viewpoints" not in data or "edges" not in data:
        raise GraphValidationError(f"{source}: top level needs 'viewpoints' and 'edges'")
    vps = []
    for i, rec in enumerate(data["viewpoints"]):
        where = f"{source}: viewpoints[{i}]"
        try:
            vid = str(rec["id"])
            pos = _triple(rec["position"], where)
            objs = tuple(
                ObjectAnnotation(str(o["id"]), str(o["name"]), _triple(o["position"], f"{where}.objects"))
                for o in rec.get("objects", [])
            )
        except (KeyError, TypeError) as exc:
            raise GraphValidationError(f"{where}: missing field {exc}") from None
        scenes = rec.get("scenes")
        if scenes is not None:
            try:
                scenes = {int(k): str(v) for k, v in scenes.items()}
            except (ValueError, AttributeError):
                raise GraphValidationError(f"{where}: bad scenes block") from None
        vps.append(Viewpoint(vid, Pose(*pos), objs, scenes))
    edges = []
    for i, e in enumerate(data["edges"]):
        if not isinstance(e, (list, tuple)) or len(e) != 2:
            raise GraphValidationError(f"{source}: edges[{i}] must be a pair of ids")
        edges.append((str(e[0]), str(e[1])))
    return NavGraph(vps, edges)


def load_graph(path: str | Path) -> NavGraph:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if exc.lineno <= len(text.splitlines()) else ""
        raise GraphFormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}") from None
    return graph_from_dict(data, str(path))
