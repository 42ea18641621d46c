"""Episode orchestration: perceive, plan+verify, execute, repeat; then locate."""

from __future__ import annotations

import logging
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import yaml

from . import _assets
from .envgraph import Episode, NavGraph, neighbors
from .execute import CONTEXT_MODES, execute_guidance
from .locate import LocalizationResult, extract_target, locate
from .metrics import EpisodeResult, MetricsReport, aggregate_records, result_record, write_results, write_summary
from .mocks import derive_seed
from .perceive import PerceptionError, perceive
from .plan import (
    FINISH_TOKEN,
    Finished,
    Guidance,
    PlannerParseError,
    SystemPrinciple,
    build_plan_prompt,
    build_system_principle,
    parse_planner_output,
    validate_action_phrases,
)
from .providers import (
    Provider,
    ProviderBinding,
    ProviderError,
    ProviderSet,
    canonical_json,
    digest,
    prompt_chars,
    request_hash,
)
from .state import EpisodeState
from .textualize import HISTORY_STYLES, describe_trajectory, move_geometry
from .verify import FEASIBLE, plan_verify_loop, select_direction_view, verify

log = logging.getLogger(__name__)


class PlannerOutputError(RuntimeError):
    pass


@dataclass
class RunConfig:
    max_planner_iterations: int = 10
    max_moves_per_guidance: int = 5
    replan_cap: int = 3
    parse_retries: int = 2
    guidance_context_mode: str = "multi"
    retain_memory_map: bool = True
    history_style: str = "landmark"
    history_include_guidance: bool = False
    verify_guidance: bool = True
    violation_policy: str = "warn"  # or "strict": one re-plan on out-of-space phrases
    use_position: bool = True
    label_mode: str = "relative"
    story_height: float = 3.0
    seed: int = 0
    parallelism: int = 1
    n_followers: int = 3
    follower_noise: tuple[float, ...] = (0.0, 0.15, 0.15)
    oracle_hops: int = 3
    bindings: dict[str, ProviderBinding] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("max_planner_iterations", "max_moves_per_guidance", "replan_cap",
                     "parallelism", "n_followers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.parse_retries < 0:
            raise ValueError("parse_retries must be >= 0")
        if self.guidance_context_mode not in CONTEXT_MODES:
            raise ValueError(f"guidance_context_mode must be one of {CONTEXT_MODES}")
        if self.history_style not in HISTORY_STYLES:
            raise ValueError(f"history_style must be one of {HISTORY_STYLES}")
        if self.violation_policy not in ("warn", "strict"):
            raise ValueError("violation_policy must be 'warn' or 'strict'")
        self.follower_noise = tuple(self.follower_noise)
        self.bindings = {k: v if isinstance(v, ProviderBinding) else ProviderBinding(**v)
                         for k, v in self.bindings.items()}

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> "RunConfig":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(yaml.safe_load(fh))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["follower_noise"] = list(self.follower_noise)
        return d


class RoleLimiter:
    """Shared per-role semaphores honouring ``max_concurrency`` declarations."""

    def __init__(self, bindings: Mapping[str, ProviderBinding]):
        self._sems = {role: threading.BoundedSemaphore(b.max_concurrency)
                      for role, b in bindings.items() if b.max_concurrency}

    def slot(self, role: str):
        base = "follower" if role.startswith("follower") else role
        sem = self._sems.get(role) or self._sems.get(base)
        return sem if sem is not None else nullcontext()


def bind(state: EpisodeState, role: str, provider: Provider,
         limiter: Optional[RoleLimiter] = None) -> Provider:
    """Wrap ``provider`` so every call lands in the ledger and the trace."""

    def call(request: dict) -> str:
        h = request_hash(role, request)
        t0 = time.perf_counter()
        try:
            with (limiter.slot(role) if limiter else nullcontext()):
                resp = provider(request)
            if not isinstance(resp, str):
                raise ProviderError(f"{role} returned {type(resp).__name__}, not text")
        except Exception as exc:
            err = exc if isinstance(exc, ProviderError) else ProviderError(f"{type(exc).__name__}: {exc}")
            state.ledger.record(role, prompt_chars(request), 0, time.perf_counter() - t0, error=True)
            state.event("call", role=role, request_hash=h, error=str(err))
            raise err from exc
        state.ledger.record(role, prompt_chars(request), len(resp), time.perf_counter() - t0)
        state.event("call", role=role, request_hash=h, response_hash=digest(resp), response=resp)
        return resp

    return call


def episode_rng(config: RunConfig, episode: Episode) -> random.Random:
    return random.Random(derive_seed(config.seed, episode.id, "episode"))


def _principle_text(principle: Optional[SystemPrinciple]) -> str:
    return build_system_principle(principle)


def _step5(state: EpisodeState, graph: NavGraph, extractor: Provider, scorer: Provider) -> LocalizationResult:
    phrase = ""
    try:
        phrase = extract_target(extractor, state.episode.instruction, state.warnings)
        return locate(scorer, graph, state.node, phrase, state.warnings)
    except Exception as exc:  # localization failure never hides navigation results
        state.warn(f"object localization failed: {exc}")
        return LocalizationResult(phrase, ())


def _finish(state: EpisodeState, graph: NavGraph, loc: LocalizationResult) -> EpisodeResult:
    state.event("end", final_node=state.node, finished=state.finished, aborted=state.aborted,
                chosen=loc.chosen)
    return EpisodeResult(
        episode=state.episode,
        trajectory=list(state.trajectory),
        localization=loc,
        planner_calls=state.planner_calls,
        iterations=state.iterations,
        aborted=state.aborted,
        abort_reason=state.abort_reason,
        warnings=list(state.warnings),
        ledger=state.ledger.to_dict(),
        timings={r: rc.wall_time for r, rc in sorted(state.ledger.roles.items())},
    )


def run_episode(config: RunConfig, graph: NavGraph, episode: Episode, providers: ProviderSet,
                limiter: Optional[RoleLimiter] = None,
                principle: Optional[SystemPrinciple] = None) -> tuple[EpisodeResult, list[dict]]:
    """Run one episode. Returns the result and its trace (list of events)."""
    episode.check_against(graph)
    state = EpisodeState(episode, episode.start_viewpoint, episode.start_heading % 360.0,
                         episode_rng(config, episode))
    state.trajectory.append(state.node)
    state.event("start", episode=episode.id, node=state.node, heading=state.heading)
    roles = {name: bind(state, name, p, limiter) for name, p in providers.roles().items()}
    followers = [roles[f"follower{i}"] for i in range(len(providers.followers))]
    principle_text = _principle_text(principle)

    try:
        while state.planner_calls < config.max_planner_iterations:
            state.iterations += 1
            obs = perceive(roles["perceiver"], graph, state.node, state.heading,
                           config.story_height, config.label_mode, config.use_position)
            state.event("observe", node=state.node, text=obs.formatted_text)

            def plan(feedback: Optional[str]):
                state.planner_calls += 1
                messages = build_plan_prompt(principle_text, episode.instruction, state.history, obs,
                                             feedback, config.history_include_guidance)
                request = {"messages": messages,
                           "meta": {"node": state.node, "heading": round(state.heading, 6),
                                    "iteration": state.iterations}}
                for attempt in range(config.parse_retries + 1):
                    raw = roles["planner"](request)
                    try:
                        return parse_planner_output(raw)
                    except PlannerParseError as exc:
                        state.warn(f"planner output unparseable (attempt {attempt + 1}): {exc}")
                raise PlannerOutputError("planner output unparseable after retries")

            def check(g: Guidance):
                if not config.verify_guidance:
                    return FEASIBLE
                return verify(roles["verifier"], select_direction_view(obs, g.direction), g, state.warnings)

            def precheck(g: Guidance):
                bad = validate_action_phrases(g.text)
                if bad:
                    return "the guidance uses actions outside the action space: " + ", ".join(bad)
                return None

            cap = min(config.replan_cap, config.max_planner_iterations - state.planner_calls)
            outcome = plan_verify_loop(plan, check, cap, state.warnings,
                                       precheck if config.violation_policy == "strict" else None)
            state.event("plan", planner_calls=outcome.planner_calls, verifier_calls=outcome.verifier_calls,
                        verdicts=[v.reason if not v.feasible else "FEASIBLE" for v in outcome.verdicts],
                        finished=isinstance(outcome.output, Finished))
            if isinstance(outcome.output, Finished):
                state.finished = True
                break
            guidance = outcome.output
            bad = validate_action_phrases(guidance.text)
            if bad:
                state.warn(f"guidance outside action space: {bad}")
            if not config.retain_memory_map:
                state.memory = type(state.memory)()
            segment = execute_guidance(graph, state, guidance, followers, roles["tiebreaker"],
                                       config.guidance_context_mode, config.max_moves_per_guidance,
                                       obs.formatted_text)
            trajectory_text = describe_trajectory(segment, config.history_style)
            state.history.append(trajectory_text, guidance.text)
            state.event("segment", guidance=guidance.text, moves=len(segment.moves),
                        stopped=segment.stopped, text=trajectory_text)
        else:
            state.warn("planner budget exhausted, forcing a stop")
    except (ProviderError, PerceptionError, PlannerOutputError) as exc:
        state.aborted = True
        state.abort_reason = f"{type(exc).__name__}: {exc}"
        state.event("abort", reason=state.abort_reason)

    loc = _step5(state, graph, roles["extractor"], roles["scorer"])
    return _finish(state, graph, loc), state.trace


def per_step_baseline(config: RunConfig, graph: NavGraph, episode: Episode, providers: ProviderSet,
                      max_steps: Optional[int] = None) -> tuple[EpisodeResult, list[dict]]:
    """Reference agent that asks the planner for every single move."""
    episode.check_against(graph)
    max_steps = max_steps or config.max_planner_iterations * config.max_moves_per_guidance
    state = EpisodeState(episode, episode.start_viewpoint, episode.start_heading % 360.0,
                         episode_rng(config, episode))
    state.trajectory.append(state.node)
    state.event("start", episode=episode.id, node=state.node, heading=state.heading, mode="per_step")
    roles = {name: bind(state, name, p) for name, p in providers.roles().items()}
    moved = []
    try:
        for step in range(max_steps):
            obs = perceive(roles["perceiver"], graph, state.node, state.heading,
                           config.story_height, config.label_mode, config.use_position)
            cands = neighbors(graph, state.node)
            listing = []
            for n in cands:
                turn, _, _ = move_geometry(graph, state.node, n, state.heading)
                listing.append(f"{n} (turn {round(turn):d} degrees, {graph.weight(state.node, n):.1f} m)")
            content = _assets.prompt("step_planner.txt").format(
                instruction=episode.instruction, history=" ".join(moved) or "none",
                observation=obs.formatted_text, candidates="\n".join(listing) or "none")
            state.planner_calls += 1
            state.iterations += 1
            raw = roles["planner"]({"messages": [{"role": "user", "content": content}],
                                    "meta": {"node": state.node, "heading": round(state.heading, 6),
                                             "step": step}})
            if FINISH_TOKEN in raw:
                state.finished = True
                break
            hits = sorted((raw.find(n), n) for n in cands if n in raw)
            if not hits:
                state.warn(f"step planner reply names no neighbor: {raw[:40]!r}")
                break
            nxt = hits[0][1]
            turn, heading, _ = move_geometry(graph, state.node, nxt, state.heading)
            moved.append(f"Turn {round(turn):d} degrees. Move {graph.weight(state.node, nxt):.1f} meters.")
            state.node, state.heading = nxt, heading
            state.trajectory.append(nxt)
    except (ProviderError, PerceptionError) as exc:
        state.aborted = True
        state.abort_reason = f"{type(exc).__name__}: {exc}"
    loc = _step5(state, graph, roles["extractor"], roles["scorer"])
    return _finish(state, graph, loc), state.trace


ProviderFactory = Callable[[NavGraph, Episode], ProviderSet]


@dataclass
class BatchOutput:
    report: MetricsReport
    records: list[dict]
    traces: dict[str, list[dict]]


def _aborted_result(episode: Episode, exc: Exception) -> EpisodeResult:
    return EpisodeResult(episode, [episode.start_viewpoint], LocalizationResult("", ()),
                         aborted=True, abort_reason=f"{type(exc).__name__}: {exc}")


def run_batch(config: RunConfig, graphs: Mapping[str, NavGraph], episodes: Sequence[Episode],
              factory: ProviderFactory, out_dir: Optional[str | Path] = None) -> BatchOutput:
    """Run episodes with ``config.parallelism`` workers; results keep dataset order."""
    limiter = RoleLimiter(config.bindings)

    def one(ep: Episode):
        graph = graphs[ep.scan]
        try:
            return run_episode(config, graph, ep, factory(graph, ep), limiter)
        except Exception as exc:
            log.exception("episode %s crashed", ep.id)
            return _aborted_result(ep, exc), [{"seq": 0, "kind": "abort", "reason": str(exc)}]

    if config.parallelism == 1:
        outputs = [one(ep) for ep in episodes]
    else:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            outputs = list(pool.map(one, episodes))

    records = [result_record(graphs[r.episode.scan], r) for r, _ in outputs]
    traces = {r.episode.id: t for r, t in outputs}
    report = aggregate_records(records)
    if out_dir is not None:
        write_run(Path(out_dir), records, traces, report,
                  {r.episode.id: r.timings for r, _ in outputs})
    return BatchOutput(report, records, traces)


def write_trace(path: str | Path, trace: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ev in trace:
            fh.write(canonical_json(ev) + "\n")


def write_run(out: Path, records: list[dict], traces: dict[str, list[dict]], report: MetricsReport,
              timings: Optional[dict[str, dict]] = None) -> None:
    """results.jsonl, summary.csv, traces/<episode>.jsonl and (nondeterministic) timings.jsonl."""
    out.mkdir(parents=True, exist_ok=True)
    (out / "traces").mkdir(exist_ok=True)
    write_results(out / "results.jsonl", records)
    write_summary(out / "summary.csv", report)
    if timings:
        with open(out / "timings.jsonl", "w", encoding="utf-8") as fh:
            for eid, t in timings.items():
                fh.write(canonical_json({"episode_id": eid, "wall_time": t}) + "\n")
    for eid, trace in traces.items():
        write_trace(out / "traces" / f"{eid}.jsonl", trace)
