"""Episode files and graph directories.

Episodes file: JSON lines (or one JSON list) of records
``{"id", "scan", "instruction", "start", "heading", "goals", "target"}``.
Graph directory: one environment file per scan, named ``<scan>.json``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from .envgraph import Episode, GraphFormatError, GraphValidationError, NavGraph, load_graph

REQUIRED = ("id", "scan", "instruction", "start", "goals", "target")


class DatasetError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__(f"{len(errors)} dataset error(s):\n" + "\n".join(f"  - {e}" for e in errors))


def episode_to_dict(ep: Episode) -> dict:
    return {
        "id": ep.id,
        "scan": ep.scan,
        "instruction": ep.instruction,
        "start": ep.start_viewpoint,
        "heading": ep.start_heading,
        "goals": list(ep.goal_viewpoints),
        "target": ep.target_object,
    }


def write_episodes(path: str | Path, episodes: Iterable[Episode]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ep in episodes:
            fh.write(json.dumps(episode_to_dict(ep), sort_keys=True) + "\n")


def _read_records(path: Path) -> list[dict]:
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("["):
        return json.loads(text)
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.strip():
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DatasetError([f"{path}:{lineno}: {exc.msg}"]) from None
    return out


def load_episodes(path: str | Path) -> list[Episode]:
    path = Path(path)
    errors, episodes = [], []
    for i, rec in enumerate(_read_records(path)):
        missing = [k for k in REQUIRED if k not in rec]
        if missing:
            errors.append(f"record {i}: missing {missing}")
            continue
        if not isinstance(rec["goals"], list) or not rec["goals"]:
            errors.append(f"record {i} ({rec['id']}): goals must be a nonempty list")
            continue
        episodes.append(Episode(
            id=str(rec["id"]),
            instruction=str(rec["instruction"]),
            start_viewpoint=str(rec["start"]),
            start_heading=float(rec.get("heading", 0.0)),
            goal_viewpoints=tuple(str(g) for g in rec["goals"]),
            target_object=str(rec["target"]),
            scan=str(rec["scan"]),
        ))
    ids = [e.id for e in episodes]
    for dup in sorted({i for i in ids if ids.count(i) > 1}):
        errors.append(f"duplicate episode id {dup}")
    if errors:
        raise DatasetError(errors)
    return episodes


def load_dataset(graph_dir: str | Path, episodes_file: str | Path) -> tuple[dict[str, NavGraph], list[Episode]]:
    episodes = load_episodes(episodes_file)
    graphs: dict[str, NavGraph] = {}
    errors = []
    for scan in sorted({e.scan for e in episodes}):
        path = Path(graph_dir) / f"{scan}.json"
        if not path.exists():
            errors.append(f"no environment file for scan {scan!r} at {path}")
            continue
        try:
            graphs[scan] = load_graph(path)
        except (GraphFormatError, GraphValidationError) as exc:
            errors.append(str(exc))
    for ep in episodes:
        if ep.scan in graphs:
            try:
                ep.check_against(graphs[ep.scan])
            except GraphValidationError as exc:
                errors.append(str(exc))
    if errors:
        raise DatasetError(errors)
    return graphs, episodes
