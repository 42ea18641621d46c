"""Graph-world simulator and evaluation harness for hierarchical LLM-planned
vision-and-language navigation."""

from .envgraph import (
    Episode,
    NavGraph,
    ObjectAnnotation,
    Pose,
    Viewpoint,
    geodesic,
    heading_between,
    height_delta,
    load_graph,
    neighbors,
    objects_within,
    save_graph,
)
from .metrics import EpisodeResult, MetricsReport, aggregate
from .runner import RunConfig, per_step_baseline, run_batch, run_episode

__version__ = "0.1.0"

__all__ = [
    "Episode", "NavGraph", "ObjectAnnotation", "Pose", "Viewpoint",
    "geodesic", "heading_between", "height_delta", "load_graph", "neighbors", "objects_within", "save_graph",
    "EpisodeResult", "MetricsReport", "aggregate",
    "RunConfig", "per_step_baseline", "run_batch", "run_episode",
]
