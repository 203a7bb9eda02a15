"""Deterministic box-world simulator: scenes, rendering, planning, episodes."""

from .scene import Box, EpisodeSpec, Scene, load_scene, make_procedural_scene, sample_free_position
from .render import render_panorama
from .planner import plan_path
from .episode import AgentConfig, EpisodeResult, run_episode
from .metrics import Metrics, compute_metrics

__all__ = [
    "AgentConfig",
    "Box",
    "EpisodeResult",
    "EpisodeSpec",
    "Metrics",
    "Scene",
    "compute_metrics",
    "load_scene",
    "make_procedural_scene",
    "plan_path",
    "render_panorama",
    "run_episode",
    "sample_free_position",
]
