"""Per-episode mutable state and cost accounting."""

from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass, field
from typing import Optional

from .envgraph import Episode
from .plan import NavHistory


@dataclass
class RoleCost:
    calls: int = 0
    prompt_chars: int = 0
    response_chars: int = 0
    errors: int = 0
    wall_time: float = 0.0

    @property
    def est_tokens(self) -> int:
        # rough chars/4 estimate
        return math.ceil((self.prompt_chars + self.response_chars) / 4)


@dataclass
class CostLedger:
    roles: dict[str, RoleCost] = field(default_factory=dict)

    def record(self, role: str, prompt_chars: int, response_chars: int,
               wall_time: float = 0.0, error: bool = False) -> None:
        rc = self.roles.setdefault(role, RoleCost())
        rc.calls += 1
        rc.prompt_chars += prompt_chars
        rc.response_chars += response_chars
        rc.wall_time += wall_time
        rc.errors += int(error)

    def calls(self, role: str) -> int:
        if role == "follower":
            return sum(rc.calls for r, rc in self.roles.items() if r.startswith("follower"))
        rc = self.roles.get(role)
        return rc.calls if rc else 0

    @property
    def total_calls(self) -> int:
        return sum(rc.calls for rc in self.roles.values())

    @property
    def total_tokens(self) -> int:
        return sum(rc.est_tokens for rc in self.roles.values())

    def to_dict(self, timing: bool = False) -> dict:
        out = {}
        for role in sorted(self.roles):
            rc = self.roles[role]
            rec = {k: v for k, v in asdict(rc).items() if k != "wall_time"}
            rec["est_tokens"] = rc.est_tokens
            if timing:
                rec["wall_time"] = rc.wall_time
            out[role] = rec
        return out


@dataclass
class MemoryMap:
    """Topological record of where the agent has been, kept across guidances."""

    visited: list[str] = field(default_factory=list)
    edges: set[tuple[str, str]] = field(default_factory=set)

    def visit(self, node: str, nbrs=()) -> None:
        if node not in self.visited:
            self.visited.append(node)
        for n in nbrs:
            self.edges.add((node, n) if node <= n else (n, node))

    def summary(self) -> str:
        if not self.visited:
            return "empty"
        conn = ", ".join(f"{a}-{b}" for a, b in sorted(self.edges))
        return f"Visited: {', '.join(self.visited)}. Known connections: {conn or 'none'}."


@dataclass
class EpisodeState:
    episode: Episode
    node: str
    heading: float
    rng: random.Random
    memory: MemoryMap = field(default_factory=MemoryMap)
    history: NavHistory = field(default_factory=NavHistory)
    guidances: list[str] = field(default_factory=list)
    trajectory: list[str] = field(default_factory=list)
    planner_calls: int = 0  # budgeted planner uses, re-plans included
    iterations: int = 0
    split_steps: int = 0
    unanimous_steps: int = 0
    ledger: CostLedger = field(default_factory=CostLedger)
    trace: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    finished: bool = False
    aborted: bool = False
    abort_reason: Optional[str] = None

    def event(self, kind: str, **data) -> None:
        self.trace.append({"seq": len(self.trace), "kind": kind, **data})

    def warn(self, msg: str) -> None:
        self.warnings.append(msg)
        self.event("warning", message=msg)
