"""Command line entry point: ``flexnav run|eval|gen|trace``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .dataset import DatasetError, load_dataset, write_episodes
from .dot import trajectory_dot
from .envgraph import load_graph, save_graph
from .factory import make_factory
from .metrics import aggregate_records, format_table, read_results
from .runner import RunConfig, run_batch
from .synth import generate_environment, generate_episodes


def cmd_run(args) -> int:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    if args.parallelism:
        config.parallelism = args.parallelism
    try:
        graphs, episodes = load_dataset(args.graphs, args.episodes)
    except DatasetError as exc:
        print(exc, file=sys.stderr)
        return 2
    out = run_batch(config, graphs, episodes, make_factory(args.providers, config), args.out)
    print(format_table(out.report))
    aborted = sum(r["aborted"] for r in out.records)
    if aborted:
        print(f"{aborted} episode(s) aborted, see {args.out}/results.jsonl", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    report = aggregate_records(read_results(args.results))
    print(format_table(report))
    return 0


def cmd_gen(args) -> int:
    graph = generate_environment(args.nodes, args.floors, args.seed)
    save_graph(graph, args.out)
    print(f"wrote {len(graph)} viewpoints, {len(graph.edges)} edges to {args.out}")
    if args.episodes:
        scan = args.scan or Path(args.out).stem
        eps = generate_episodes(graph, args.episodes, args.seed, scan)
        dest = args.episodes_out or str(Path(args.out).with_suffix(".episodes.jsonl"))
        write_episodes(dest, eps)
        print(f"wrote {len(eps)} episodes to {dest}")
    return 0


def cmd_trace(args) -> int:
    recs = [r for r in read_results(args.results) if r["episode_id"] == args.episode]
    if not recs:
        print(f"episode {args.episode} not in {args.results}", file=sys.stderr)
        return 2
    rec = recs[0]
    graph = load_graph(Path(args.graphs) / f"{rec['scan']}.json")
    goals = args.goals.split(",") if args.goals else rec.get("goals", ())
    Path(args.out).write_text(trajectory_dot(graph, rec["trajectory"], goals, args.episode), encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flexnav", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a batch of episodes")
    r.add_argument("--graphs", required=True, help="directory of <scan>.json environment files")
    r.add_argument("--episodes", required=True, help="episodes file (JSON lines)")
    r.add_argument("--config", help="YAML/JSON run config")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--providers", default="mock", help="mock | replay:DIR | live")
    r.add_argument("--parallelism", type=int)
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("eval", help="summarize a results file")
    e.add_argument("--results", required=True)
    e.set_defaults(func=cmd_eval)

    g = sub.add_parser("gen", help="generate a synthetic house")
    g.add_argument("--nodes", type=int, required=True)
    g.add_argument("--floors", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--episodes", type=int, default=0, help="also sample this many episodes")
    g.add_argument("--episodes-out")
    g.add_argument("--scan", help="scan id for episodes (default: output file stem)")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("trace", help="export a walked trajectory as Graphviz DOT")
    t.add_argument("--episode", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--results", required=True)
    t.add_argument("--graphs", required=True)
    t.add_argument("--goals", help="comma-separated goal viewpoints (default: from the results record)")
    t.set_defaults(func=cmd_trace)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
