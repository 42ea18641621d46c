"""Planner-call and token cost: hierarchical agent vs. a per-step planner.

Runs both agents on seeded synthetic houses with offline mock providers and
prints one row per agent.

    python3 scripts/cost_comparison.py --houses 4 --episodes 5
"""

import argparse
import time

from flexnav.metrics import aggregate
from flexnav.mocks import (
    FirstNeighborFollower,
    OracleStepPlanner,
    ScriptedResponder,
    always_feasible,
    echo_perceiver,
    lexicon_extractor,
    mock_providers,
    token_overlap_scorer,
)
from flexnav.providers import ProviderSet
from flexnav.runner import RunConfig, per_step_baseline, run_episode
from flexnav.synth import generate_environment, generate_episodes


def step_providers(graph, ep):
    return ProviderSet(OracleStepPlanner(graph, ep), always_feasible, [FirstNeighborFollower()],
                       ScriptedResponder(["A"]), echo_perceiver, lexicon_extractor, token_overlap_scorer)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--houses", type=int, default=4)
    ap.add_argument("--episodes", type=int, default=5)
    ap.add_argument("--nodes", type=int, default=20)
    ap.add_argument("--floors", type=int, default=2)
    ap.add_argument("--hops", type=int, default=3, help="viewpoints per guidance for the oracle planner")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = RunConfig(seed=args.seed, oracle_hops=args.hops)
    rows = {"hierarchical": [], "per-step": []}
    t0 = time.perf_counter()
    for h in range(args.houses):
        g = generate_environment(args.nodes, args.floors, args.seed + h)
        for ep in generate_episodes(g, args.episodes, args.seed + h, scan=f"h{h}"):
            rows["hierarchical"].append(
                (g, run_episode(cfg, g, ep, mock_providers(g, ep, cfg.seed, args.hops, cfg.follower_noise))[0]))
            rows["per-step"].append((g, per_step_baseline(cfg, g, ep, step_providers(g, ep))[0]))

    print(f"{'agent':<14}{'planner calls':>14}{'all calls':>11}{'est tokens':>12}{'SR':>8}{'SPL':>8}")
    for name, pairs in rows.items():
        planner = sum(r.ledger.get("planner", {}).get("calls", 0) for _, r in pairs)
        calls = sum(v["calls"] for _, r in pairs for v in r.ledger.values())
        tokens = sum(v["est_tokens"] for _, r in pairs for v in r.ledger.values())
        rep = aggregate({r.episode.scan: g for g, r in pairs}, [r for _, r in pairs])
        print(f"{name:<14}{planner:>14}{calls:>11}{tokens:>12}"
              f"{100 * rep.means['SR']:>8.1f}{100 * rep.means['SPL']:>8.1f}")
    hp = sum(r.ledger["planner"]["calls"] for _, r in rows["hierarchical"])
    bp = sum(r.ledger["planner"]["calls"] for _, r in rows["per-step"])
    print(f"\nplanner call ratio {hp / bp:.2f} over {len(rows['per-step'])} episodes "
          f"({time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
