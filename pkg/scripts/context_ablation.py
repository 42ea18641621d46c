"""Ablation over follower context, history style and memory-map retention.

Every variant runs the same episodes; with ``--providers mock`` the numbers only
show that the switches are wired, with ``live`` or ``replay:DIR`` they measure
something.

    python3 scripts/context_ablation.py --graphs DIR --episodes FILE [--providers live]
"""

import argparse
import itertools
import tempfile
from pathlib import Path

from flexnav.dataset import load_dataset, write_episodes
from flexnav.envgraph import save_graph
from flexnav.factory import make_factory
from flexnav.runner import RunConfig, run_batch
from flexnav.synth import generate_environment, generate_episodes

VARIANTS = {
    "guidance_context_mode": ("single", "multi"),
    "history_style": ("landmark", "symbolic"),
    "retain_memory_map": (True, False),
}


def _synthetic(tmp: Path):
    g = generate_environment(20, 2, 0)
    save_graph(g, tmp / "house.json")
    write_episodes(tmp / "eps.jsonl", generate_episodes(g, 10, 0, scan="house"))
    return tmp, tmp / "eps.jsonl"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--graphs")
    ap.add_argument("--episodes")
    ap.add_argument("--providers", default="mock")
    ap.add_argument("--parallelism", type=int, default=4)
    ap.add_argument("--out", help="keep per-variant run directories here")
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        graph_dir, eps_file = (args.graphs, args.episodes) if args.graphs else _synthetic(Path(tmp))
        graphs, episodes = load_dataset(graph_dir, eps_file)
        keys = list(VARIANTS)
        print(" | ".join(f"{k:>21}" for k in keys) + " |   SR |  SPL |  RGS | planner calls")
        for combo in itertools.product(*VARIANTS.values()):
            cfg = RunConfig(parallelism=args.parallelism, **dict(zip(keys, combo)))
            out = Path(args.out) / "_".join(map(str, combo)) if args.out else None
            batch = run_batch(cfg, graphs, episodes, make_factory(args.providers, cfg), out)
            m = batch.report.means
            calls = sum(r["ledger"].get("planner", {}).get("calls", 0) for r in batch.records)
            print(" | ".join(f"{str(v):>21}" for v in combo)
                  + f" | {100 * m['SR']:4.0f} | {100 * m['SPL']:4.0f} | {100 * m['RGS']:4.0f} | {calls}")


if __name__ == "__main__":
    main()
