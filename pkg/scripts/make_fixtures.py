"""Regenerate the replay fixture used by the determinism tests.

Writes tests/fixtures/house.json (12 viewpoints, 2 floors), episodes.jsonl and
one recorded trace per episode under tests/fixtures/traces/. The traces double
as replay cassettes.

    python3 scripts/make_fixtures.py
"""

import argparse
from pathlib import Path

from flexnav.dataset import write_episodes
from flexnav.envgraph import save_graph
from flexnav.factory import make_factory
from flexnav.runner import RunConfig, run_batch
from flexnav.synth import generate_environment, generate_episodes

ROOT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(ROOT))
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--episodes", type=int, default=3)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    graph = generate_environment(12, 2, args.seed)
    save_graph(graph, out / "house.json")
    eps = generate_episodes(graph, args.episodes, args.seed, scan="house")
    write_episodes(out / "episodes.jsonl", eps)

    config = RunConfig(seed=args.seed)
    batch = run_batch(config, {"house": graph}, eps, make_factory("mock", config), out / "recorded")
    # wall times differ run to run and are not part of the fixture
    (out / "recorded" / "timings.jsonl").unlink()
    for rec in batch.records:
        splits = sum(1 for e in batch.traces[rec["episode_id"]] if e["kind"] == "vote" and not e["unanimous"])
        print(f"{rec['episode_id']}: {len(rec['trajectory']) - 1} moves, "
              f"{rec['planner_calls']} planner calls, {splits} split steps, SR {rec['metrics']['SR']}")


if __name__ == "__main__":
    main()
