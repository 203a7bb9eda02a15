"""Batch navigation metrics: success rate, path-length-weighted success, and
final distance to goal."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Metrics:
    sr: float
    spl: float
    dtg: float


def episode_spl(success: bool, path_length: float, shortest_length: float) -> float:
    """Per-episode term: S * l / max(p, l), with p floored at l.

    A zero or unreachable shortest length degenerates to plain success.
    """
    if not success:
        return 0.0
    if shortest_length <= 0 or not math.isfinite(shortest_length):
        return 1.0
    return shortest_length / max(path_length, shortest_length)


def compute_metrics(results) -> Metrics:
    """Means over a batch of episode results."""
    results = list(results)
    if not results:
        raise ValueError("cannot compute metrics over an empty batch")
    sr = sum(1.0 for r in results if r.success) / len(results)
    spl = sum(episode_spl(r.success, r.path_length, r.shortest_length) for r in results) / len(results)
    dtg = sum(r.dtg for r in results) / len(results)
    return Metrics(sr=sr, spl=spl, dtg=dtg)
