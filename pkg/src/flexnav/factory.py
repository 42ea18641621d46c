"""Provider sets for the ``--providers`` modes: mock, replay:DIR, live."""

from __future__ import annotations

from pathlib import Path

from .envgraph import Episode, NavGraph
from .mocks import LandmarkFollower, mock_providers, token_overlap_scorer
from .providers import ChatAdapter, ProviderBinding, ProviderSet, ReplayBook, replay_providers
from .runner import ProviderFactory, RunConfig

LIVE_ROLES = ("planner", "verifier", "tiebreaker", "perceiver", "extractor")


def make_factory(mode: str, config: RunConfig) -> ProviderFactory:
    if mode == "mock":
        def mock(graph: NavGraph, episode: Episode) -> ProviderSet:
            return mock_providers(graph, episode, config.seed, config.oracle_hops,
                                  config.follower_noise[:config.n_followers])
        return mock

    if mode.startswith("replay:"):
        root = Path(mode.split(":", 1)[1])

        def replay(graph: NavGraph, episode: Episode) -> ProviderSet:
            path = root / f"{episode.id}.jsonl"
            if not path.exists():
                raise FileNotFoundError(f"no recorded trace for episode {episode.id} in {root}")
            return replay_providers(ReplayBook.from_file(path), config.n_followers)
        return replay

    if mode == "live":
        # one adapter per role, shared across episodes
        adapters = {role: ChatAdapter(config.bindings.get(role, ProviderBinding())) for role in LIVE_ROLES}

        def live(graph: NavGraph, episode: Episode) -> ProviderSet:
            # neural followers are out of scope; landmark followers stand in for them
            return ProviderSet(
                planner=adapters["planner"],
                verifier=adapters["verifier"],
                followers=[LandmarkFollower(graph) for _ in range(config.n_followers)],
                tiebreaker=adapters["tiebreaker"],
                perceiver=adapters["perceiver"],
                extractor=adapters["extractor"],
                scorer=token_overlap_scorer,
            )
        return live

    raise ValueError(f"unknown provider mode {mode!r} (mock, replay:DIR or live)")
