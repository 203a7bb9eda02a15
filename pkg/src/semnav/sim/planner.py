"""Grid path planning with obstacle inflation.

Paths run 8-connected over free cells of the occupancy grid; diagonal moves
cost sqrt(2) and are disallowed when either adjacent orthogonal cell is
blocked (no corner cutting). Obstacle cells are inflated by the requested
clearance plus one cell diagonal, which guarantees that every point of every
traversable cell keeps at least the requested metric clearance from every
projected obstacle point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from ..semantic_map import FREE, OBSTACLE, OccupancyGrid
from .scene import Scene

_ORTHO = ((1, 0), (-1, 0), (0, 1), (0, -1))
_DIAG = ((1, 1), (1, -1), (-1, 1), (-1, -1))
_SQRT2 = math.sqrt(2.0)


@dataclass(eq=False)
class PlanResult:
    waypoints: list      # world (x, y) tuples from start to goal
    length: float        # metric arc length of the polyline


def inflated_blocked(grid: OccupancyGrid, inflation: float) -> np.ndarray:
    """Boolean (nx, ny) mask of cells blocked after inflating obstacles.

    A cell is blocked when its center lies within inflation + one cell
    diagonal of any obstacle cell center; the extra margin covers the
    worst-case offset between points and their cell centers.
    """
    blocked = grid.cells == OBSTACLE
    if inflation <= 0 or not blocked.any():
        return blocked.copy()
    radius_cells = (inflation + grid.resolution * _SQRT2) / grid.resolution
    r = int(math.ceil(radius_cells))
    out = blocked.copy()
    for di in range(-r, r + 1):
        for dj in range(-r, r + 1):
            if di == 0 and dj == 0:
                continue
            if math.hypot(di, dj) > radius_cells:
                continue
            src_i = slice(max(0, -di), grid.nx - max(0, di))
            dst_i = slice(max(0, di), grid.nx - max(0, -di))
            src_j = slice(max(0, -dj), grid.ny - max(0, dj))
            dst_j = slice(max(0, dj), grid.ny - max(0, -dj))
            out[dst_i, dst_j] |= blocked[src_i, src_j]
    return out


def _traversable(grid: OccupancyGrid, inflation: float) -> np.ndarray:
    return (grid.cells == FREE) & ~inflated_blocked(grid, inflation)


def _grid_costs(free: np.ndarray, start: tuple[int, int]):
    """Single-source shortest-path costs (in cell units) over a free mask."""
    nx, ny = free.shape
    idx = np.arange(nx * ny).reshape(nx, ny)
    rows, cols, data = [], [], []
    for di, dj in _ORTHO:
        src_i = slice(max(0, -di), nx - max(0, di))
        dst_i = slice(max(0, di), nx - max(0, -di))
        src_j = slice(max(0, -dj), ny - max(0, dj))
        dst_j = slice(max(0, dj), ny - max(0, -dj))
        ok = free[src_i, src_j] & free[dst_i, dst_j]
        rows.append(idx[src_i, src_j][ok])
        cols.append(idx[dst_i, dst_j][ok])
        data.append(np.ones(ok.sum()))
    for di, dj in _DIAG:
        src_i = slice(max(0, -di), nx - max(0, di))
        dst_i = slice(max(0, di), nx - max(0, -di))
        src_j = slice(max(0, -dj), ny - max(0, dj))
        dst_j = slice(max(0, dj), ny - max(0, -dj))
        # corner rule: both orthogonal companions must be free
        ortho_a = free[src_i, dst_j]
        ortho_b = free[dst_i, src_j]
        ok = free[src_i, src_j] & free[dst_i, dst_j] & ortho_a & ortho_b
        rows.append(idx[src_i, src_j][ok])
        cols.append(idx[dst_i, dst_j][ok])
        data.append(np.full(ok.sum(), _SQRT2))
    graph = csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nx * ny, nx * ny),
    )
    start_idx = start[0] * ny + start[1]
    costs = dijkstra(graph, directed=False, indices=start_idx)
    return costs.reshape(nx, ny)


def _descend(costs: np.ndarray, free: np.ndarray, goal: tuple[int, int]) -> list:
    """Walk from the goal back to the source along strictly decreasing costs.

    Neighbor order is fixed, so the reconstructed path is deterministic.
    """
    nx, ny = costs.shape
    path = [goal]
    i, j = goal
    while costs[i, j] > 0:
        best = None
        for (di, dj), w in [(o, 1.0) for o in _ORTHO] + [(d, _SQRT2) for d in _DIAG]:
            ni, nj = i + di, j + dj
            if not (0 <= ni < nx and 0 <= nj < ny) or not free[ni, nj]:
                continue
            if (di, dj) in _DIAG and not (free[i, nj] and free[ni, j]):
                continue
            if abs(costs[ni, nj] + w - costs[i, j]) < 1e-9:
                best = (ni, nj)
                break
        if best is None:  # numerical dead end; should not happen on finite costs
            return []
        path.append(best)
        i, j = best
    path.reverse()
    return path


def plan_path(
    grid: OccupancyGrid, start_xy, goal_xy, inflation: float
) -> PlanResult | None:
    """Shortest 8-connected path between two world points, or None.

    The start cell is always considered traversable (the agent already
    stands there); the goal must land on a free, un-inflated cell reachable
    from the start.
    """
    start_cell = grid.cell_of(start_xy[0], start_xy[1])
    goal_cell = grid.cell_of(goal_xy[0], goal_xy[1])
    free = _traversable(grid, inflation)
    if not (0 <= start_cell[0] < grid.nx and 0 <= start_cell[1] < grid.ny):
        return None
    free[start_cell] = True
    if not (0 <= goal_cell[0] < grid.nx and 0 <= goal_cell[1] < grid.ny):
        return None
    if not free[goal_cell]:
        return None
    costs = _grid_costs(free, start_cell)
    if not np.isfinite(costs[goal_cell]):
        return None
    cells = _descend(costs, free, goal_cell)
    if not cells:
        return None
    waypoints = [(float(start_xy[0]), float(start_xy[1]))]
    for cell in cells[1:]:
        waypoints.append(grid.cell_center(*cell))
    waypoints.append((float(goal_xy[0]), float(goal_xy[1])))
    length = 0.0
    for a, b in zip(waypoints, waypoints[1:]):
        length += math.hypot(b[0] - a[0], b[1] - a[1])
    return PlanResult(waypoints=waypoints, length=length)


def true_free_mask(scene: Scene, cell: float) -> tuple[np.ndarray, float, float]:
    """Rasterize the ground-truth scene: cells whose centers avoid every wall
    and object footprint. Returns (mask, x_min, y_min)."""
    x0, y0, x1, y1 = scene.bounds
    nx = max(1, int(math.ceil((x1 - x0) / cell)))
    ny = max(1, int(math.ceil((y1 - y0) / cell)))
    xs = x0 + (np.arange(nx) + 0.5) * cell
    ys = y0 + (np.arange(ny) + 0.5) * cell
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    free = np.ones((nx, ny), dtype=bool)
    boxes = list(scene.walls) + [box for _, box in scene.objects]
    for box in boxes:
        inside = (
            (gx >= box.min_corner[0]) & (gx <= box.max_corner[0])
            & (gy >= box.min_corner[1]) & (gy <= box.max_corner[1])
        )
        free &= ~inside
    return free, x0, y0


def ground_truth_shortest_path(
    scene: Scene, start_xy, target: str, success_distance: float, cell: float = 0.05
) -> float:
    """Length of the ideal path from start to the success region around the
    nearest target instance, on a fine grid of the true scene. Returns inf
    when the region is unreachable."""
    boxes = scene.boxes_of_class(target)
    if not boxes:
        return math.inf
    free, x0, y0 = true_free_mask(scene, cell)
    nx, ny = free.shape
    xs = x0 + (np.arange(nx) + 0.5) * cell
    ys = y0 + (np.arange(ny) + 0.5) * cell
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    dist = np.full((nx, ny), np.inf)
    for box in boxes:
        dx = np.maximum(np.maximum(box.min_corner[0] - gx, 0.0), gx - box.max_corner[0])
        dy = np.maximum(np.maximum(box.min_corner[1] - gy, 0.0), gy - box.max_corner[1])
        dist = np.minimum(dist, np.hypot(dx, dy))
    goal_region = free & (dist <= success_distance)
    si = min(int((start_xy[0] - x0) / cell), nx - 1)
    sj = min(int((start_xy[1] - y0) / cell), ny - 1)
    si, sj = max(si, 0), max(sj, 0)
    if dist[si, sj] <= success_distance:
        return 0.0
    free = free.copy()
    free[si, sj] = True
    costs = _grid_costs(free, (si, sj))
    region_costs = costs[goal_region]
    if region_costs.size == 0 or not np.isfinite(region_costs).any():
        return math.inf
    return float(region_costs.min() * cell)
