"""Graphviz export of a walked trajectory."""

from __future__ import annotations

from typing import Sequence

from .envgraph import NavGraph


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def trajectory_dot(graph: NavGraph, trajectory: Sequence[str], goals: Sequence[str] = (),
                   name: str = "trajectory") -> str:
    """DOT source with nodes placed at their x-y positions (use ``neato -n``).

    Start is green, goals red, visited nodes filled; walked edges are bold and
    labelled with their step index.
    """
    visited = set(trajectory)
    walked: dict[tuple[str, str], list[int]] = {}
    for i, (a, b) in enumerate(zip(trajectory, trajectory[1:]), 1):
        walked.setdefault(tuple(sorted((a, b))), []).append(i)
    lines = [f"graph {_q(name)} {{", "  node [shape=circle, fontsize=10];"]
    for vid in sorted(graph.viewpoints):
        x, y, z = graph.position(vid)
        attrs = [f'pos="{x * 40:.1f},{y * 40:.1f}!"', f"tooltip={_q(f'z={z:.2f}')}"]
        if trajectory and vid == trajectory[0]:
            attrs += ["style=filled", "fillcolor=palegreen"]
        elif vid in goals:
            attrs += ["style=filled", "fillcolor=salmon"]
        elif vid in visited:
            attrs += ["style=filled", "fillcolor=lightblue"]
        lines.append(f"  {_q(vid)} [{', '.join(attrs)}];")
    for a, b in sorted(graph.edges):
        steps = walked.get((a, b))
        if steps:
            label = ",".join(map(str, steps))
            lines.append(f"  {_q(a)} -- {_q(b)} [penwidth=3, color=blue, label={_q(label)}];")
        else:
            lines.append(f"  {_q(a)} -- {_q(b)} [color=gray];")
    lines.append("}")
    return "\n".join(lines) + "\n"
