"""Step 2: planner prompts, planner output parsing and the action-phrase space."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields
from typing import Optional, Union

from . import _assets
from .perceive import RELATIVE_LABELS, Observation

ACTION_PHRASES = (
    "go downstairs",
    "go upstairs",
    "go forward",
    "go through",
    "go past",
    "turn around",
    "turn left",
    "turn right",
    "turn left at",
    "turn right at",
    "go to",
    "go into",
    "go out of",
    "stop",
)

FINISH_TOKEN = "Finished!"
LABEL_TO_BUCKET = {v: k for k, v in RELATIVE_LABELS.items()}

# verbs that start a movement command; anything they start must be an action phrase
MOVEMENT_VERBS = frozenset(
    "go walk move turn jump climb run head proceed enter exit leave cross step continue "
    "pass take follow descend ascend approach navigate veer walk rotate travel return "
    "stop wait stand face crawl hop".split()
)

PRINCIPLE_SECTIONS = (
    ("role", "Role"),
    ("objective", "Objective"),
    ("input_definitions", "Input Definitions"),
    ("output_requirements", "Output Requirements"),
    ("abilities", "Abilities"),
    ("constraints", "Constraints"),
)


class PrincipleError(ValueError):
    pass


class PlannerParseError(ValueError):
    pass


@dataclass(frozen=True)
class SystemPrinciple:
    role: str
    objective: str
    input_definitions: str
    output_requirements: str
    abilities: str
    constraints: str

    @classmethod
    def default(cls) -> "SystemPrinciple":
        return cls(**{key: _assets.prompt(f"system_principle/{key}.txt") for key, _ in PRINCIPLE_SECTIONS})


def build_system_principle(principle: SystemPrinciple | dict | None = None) -> str:
    if principle is None:
        principle = SystemPrinciple.default()
    data = principle if isinstance(principle, dict) else {f.name: getattr(principle, f.name) for f in fields(principle)}
    blocks = []
    for i, (key, title) in enumerate(PRINCIPLE_SECTIONS, 1):
        text = (data.get(key) or "").strip()
        if not text:
            raise PrincipleError(f"system principle section {title!r} is empty")
        blocks.append(f"## {i}. {title}\n{text}")
    return "\n\n".join(blocks)


@dataclass(frozen=True)
class Guidance:
    thought: str
    direction: int  # agent-frame bucket: 0 front, 90 right, 180 back, 270 left
    text: str


@dataclass(frozen=True)
class Finished:
    pass


PlannerOutput = Union[Finished, Guidance]


@dataclass
class HistoryEntry:
    trajectory_text: str
    guidance_text: Optional[str] = None


@dataclass
class NavHistory:
    entries: list[HistoryEntry] = field(default_factory=list)

    def append(self, trajectory_text: str, guidance_text: Optional[str] = None) -> None:
        self.entries.append(HistoryEntry(trajectory_text, guidance_text))

    def render(self, include_guidance: bool = False) -> str:
        if not self.entries:
            return "none"
        lines = []
        for i, e in enumerate(self.entries, 1):
            if include_guidance and e.guidance_text:
                lines.append(f"Step {i}: Guidance: {e.guidance_text} Trajectory: {e.trajectory_text}")
            else:
                lines.append(f"Step {i}: {e.trajectory_text}")
        return "\n".join(lines)

    def __len__(self) -> int:
        return len(self.entries)


def feedback_block(reason: str) -> str:
    return f"The previous guidance was infeasible because: {reason}"


def build_plan_prompt(principle: str, instruction: str, history: NavHistory,
                      observation: Observation | str, feedback: Optional[str] = None,
                      include_guidance: bool = False) -> list[dict]:
    obs_text = observation if isinstance(observation, str) else observation.formatted_text
    user = _assets.prompt("plan_user.txt").format(
        instruction=instruction.strip(),
        history=history.render(include_guidance),
        observation=obs_text,
    )
    if feedback:
        user += "\n\n" + feedback_block(feedback)
    return [{"role": "system", "content": principle}, {"role": "user", "content": user}]


_FIELD = re.compile(r"(?i)\b(thought|direction|guidance)\s*\**\s*:")


def _clean(value: str) -> str:
    value = value.strip().strip("*").strip()
    return " ".join(value.split())


def parse_direction(value: str) -> int:
    word = re.sub(r"^[^a-z]+|[^a-z]+$", "", value.strip().lower())
    if word not in LABEL_TO_BUCKET:
        raise PlannerParseError(f"unrecognised direction {value!r}")
    return LABEL_TO_BUCKET[word]


def parse_planner_output(raw: str) -> PlannerOutput:
    if FINISH_TOKEN in raw:
        return Finished()
    matches = list(_FIELD.finditer(raw))
    values: dict[str, str] = {}
    for i, m in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(raw)
        values.setdefault(m.group(1).lower(), _clean(raw[m.end():end]))
    if not values.get("guidance"):
        raise PlannerParseError("planner output has no Guidance field")
    if "direction" not in values:
        raise PlannerParseError("planner output has no Direction field")
    return Guidance(values.get("thought", ""), parse_direction(values["direction"]), values["guidance"])


def format_guidance(g: Guidance) -> str:
    return f"Thought: {g.thought}\nDirection: {RELATIVE_LABELS[g.direction]}\nGuidance: {g.text}"


# "the next turn", "a step": nouns, not commands
_DETERMINERS = frozenset("the a an this that next each every first second last your its".split())
_PHRASE_WORDS = sorted((p.split() for p in ACTION_PHRASES), key=len, reverse=True)


def validate_action_phrases(guidance_text: str) -> list[str]:
    """Movement phrases in ``guidance_text`` that fall outside the action space.

    An empty list means the guidance is clean.
    """
    words = re.findall(r"[a-z]+", guidance_text.lower())
    bad = []
    i = 0
    while i < len(words):
        if words[i] not in MOVEMENT_VERBS or (i and words[i - 1] in _DETERMINERS):
            i += 1
            continue
        for phrase in _PHRASE_WORDS:
            if words[i:i + len(phrase)] == phrase:
                i += len(phrase)
                break
        else:
            bad.append(" ".join(words[i:i + 2]))
            i += 1
    return bad
