"""Navigation and grounding metrics: TL, NE, SR, OSR, SPL, RGS, RGSPL, GP."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .envgraph import OBJECT_RADIUS, Episode, NavGraph, geodesic, objects_within
from .locate import LocalizationResult

METRIC_NAMES = ("TL", "NE", "SR", "OSR", "SPL", "RGS", "RGSPL", "GP")
RATE_METRICS = ("SR", "OSR", "SPL", "RGS", "RGSPL")


@dataclass
class EpisodeResult:
    episode: Episode
    trajectory: list[str]
    localization: LocalizationResult
    planner_calls: int = 0
    iterations: int = 0
    aborted: bool = False
    abort_reason: Optional[str] = None
    warnings: list[str] = field(default_factory=list)
    ledger: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)  # wall seconds per role; never persisted with results

    def __post_init__(self):
        if not self.trajectory or self.trajectory[0] != self.episode.start_viewpoint:
            raise ValueError("trajectory must begin at the episode start")

    @property
    def final_node(self) -> str:
        return self.trajectory[-1]


def check_result(graph: NavGraph, result: EpisodeResult) -> None:
    for a, b in zip(result.trajectory, result.trajectory[1:]):
        if not graph.has_edge(a, b):
            raise ValueError(f"trajectory step {a}->{b} is not a graph edge")


def tl(graph: NavGraph, result: EpisodeResult) -> float:
    t = result.trajectory
    return sum(graph.weight(a, b) for a, b in zip(t, t[1:]))


def _goal_distance(graph: NavGraph, node: str, goals: Iterable[str]) -> float:
    return min(geodesic(graph, node, g) for g in goals)


def shortest_length(graph: NavGraph, episode: Episode) -> float:
    return _goal_distance(graph, episode.start_viewpoint, episode.goal_viewpoints)


def ne(graph: NavGraph, result: EpisodeResult) -> float:
    return _goal_distance(graph, result.final_node, result.episode.goal_viewpoints)


def target_visible(graph: NavGraph, node: str, target: str, radius: float = OBJECT_RADIUS) -> bool:
    want = target.strip().lower()
    return any(o.name.strip().lower() == want for o in objects_within(graph, node, radius))


def sr(graph: NavGraph, result: EpisodeResult) -> int:
    return int(target_visible(graph, result.final_node, result.episode.target_object))


def osr(graph: NavGraph, result: EpisodeResult) -> int:
    target = result.episode.target_object
    return int(any(target_visible(graph, n, target) for n in dict.fromkeys(result.trajectory)))


def _path_weight(success: int, shortest: float, travelled: float) -> float:
    if not success or math.isinf(shortest):
        # an unreachable goal has no reference length; such episodes are excluded from means anyway
        return 0.0
    if shortest == 0:
        return 1.0
    return shortest / max(travelled, shortest)


def spl(graph: NavGraph, result: EpisodeResult) -> float:
    return _path_weight(sr(graph, result), shortest_length(graph, result.episode), tl(graph, result))


def rgs(graph: NavGraph, result: EpisodeResult) -> int:
    name = result.localization.chosen_name
    if name is None or not sr(graph, result):
        return 0
    return int(name.strip().lower() == result.episode.target_object.strip().lower())


def rgspl(graph: NavGraph, result: EpisodeResult) -> float:
    return _path_weight(rgs(graph, result), shortest_length(graph, result.episode), tl(graph, result))


def gp(graph: NavGraph, result: EpisodeResult) -> float:
    return shortest_length(graph, result.episode) - ne(graph, result)


def episode_metrics(graph: NavGraph, result: EpisodeResult) -> dict[str, float]:
    return {
        "TL": tl(graph, result),
        "NE": ne(graph, result),
        "SR": sr(graph, result),
        "OSR": osr(graph, result),
        "SPL": spl(graph, result),
        "RGS": rgs(graph, result),
        "RGSPL": rgspl(graph, result),
        "GP": gp(graph, result),
    }


@dataclass
class MetricsReport:
    per_episode: list[dict]
    means: dict[str, float]
    n_included: int
    excluded: list[str]

    @property
    def n_excluded(self) -> int:
        return len(self.excluded)


def aggregate_records(records: Iterable[dict]) -> MetricsReport:
    """Macro averages over per-episode metric records ``{"episode_id", "metrics"}``.

    Records with an infinite shortest length or NE are left out and listed.
    """
    rows, excluded = [], []
    for rec in records:
        m = rec["metrics"]
        if not (math.isfinite(m["NE"]) and math.isfinite(m["GP"])):
            excluded.append(rec["episode_id"])
            continue
        rows.append({"episode_id": rec["episode_id"], **{k: m[k] for k in METRIC_NAMES}})
    n = len(rows)
    means = {k: (sum(r[k] for r in rows) / n if n else math.nan) for k in METRIC_NAMES}
    return MetricsReport(rows, means, n, excluded)


def aggregate(graphs: Mapping[str, NavGraph] | NavGraph, results: Iterable[EpisodeResult]) -> MetricsReport:
    recs = []
    for r in results:
        g = graphs if isinstance(graphs, NavGraph) else graphs[r.episode.scan]
        recs.append({"episode_id": r.episode.id, "metrics": episode_metrics(g, r)})
    return aggregate_records(recs)


def result_record(graph: NavGraph, result: EpisodeResult) -> dict:
    ep = result.episode
    return {
        "episode_id": ep.id,
        "scan": ep.scan,
        "goals": list(ep.goal_viewpoints),
        "target": ep.target_object,
        "trajectory": list(result.trajectory),
        "final_node": result.final_node,
        "planner_calls": result.planner_calls,
        "iterations": result.iterations,
        "aborted": result.aborted,
        "abort_reason": result.abort_reason,
        "localization": result.localization.to_dict(),
        "metrics": episode_metrics(graph, result),
        "ledger": result.ledger,
        "warnings": list(result.warnings),
    }


def dumps_record(rec: dict) -> str:
    # infinities are legal here; json writes them as Infinity
    return json.dumps(rec, sort_keys=True, ensure_ascii=False)


def write_results(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dumps_record(rec) + "\n")


def read_results(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def summary_rows(report: MetricsReport) -> list[dict]:
    row = {"episodes": report.n_included, "excluded": report.n_excluded}
    for k in METRIC_NAMES:
        v = report.means[k]
        row[k] = round(100 * v if k in RATE_METRICS else v, 2)
    return [row]


def write_summary(path: str | Path, report: MetricsReport) -> None:
    rows = summary_rows(report)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def format_table(report: MetricsReport) -> str:
    row = summary_rows(report)[0]
    cols = ["episodes", *METRIC_NAMES]
    head = " | ".join(f"{c:>8}" for c in cols)
    vals = " | ".join(f"{row[c]:>8}" for c in cols)
    out = f"{head}\n{'-' * len(head)}\n{vals}"
    if report.n_excluded:
        out += f"\n({report.n_excluded} episodes excluded: unreachable goal)"
    return out
