"""Hand-rolled SVG rendering of scenes, trajectories, and affordance fields.

SVG is written directly (no plotting library) so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

from .sim.scene import Scene

SCALE = 60.0  # pixels per meter
MARGIN = 0.5  # meters of padding around the scene


def _color_for_score(t: float) -> str:
    """Two-stop blue-to-red ramp over [0, 1]."""
    t = min(max(t, 0.0), 1.0)
    r = int(round(255 * t))
    b = int(round(255 * (1.0 - t)))
    return f"#{r:02x}40{b:02x}"


class SvgCanvas:
    def __init__(self, bounds):
        x0, y0, x1, y1 = bounds
        self.x0, self.y0, self.x1, self.y1 = x0 - MARGIN, y0 - MARGIN, x1 + MARGIN, y1 + MARGIN
        self.width = (self.x1 - self.x0) * SCALE
        self.height = (self.y1 - self.y0) * SCALE
        self.parts = []

    def px(self, x: float, y: float) -> tuple[float, float]:
        """World -> SVG pixels; the y axis flips so north is up."""
        return ((x - self.x0) * SCALE, (self.y1 - y) * SCALE)

    def rect(self, box_min, box_max, fill: str, opacity: float = 1.0):
        x, y = self.px(box_min[0], box_max[1])
        w = (box_max[0] - box_min[0]) * SCALE
        h = (box_max[1] - box_min[1]) * SCALE
        self.parts.append(
            f'<rect x="{x:.1f}" y="{y:.1f}" width="{w:.1f}" height="{h:.1f}" '
            f'fill="{fill}" fill-opacity="{opacity:.2f}" />'
        )

    def circle(self, x: float, y: float, radius_px: float, fill: str, extra: str = ""):
        cx, cy = self.px(x, y)
        self.parts.append(
            f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="{radius_px:.1f}" fill="{fill}"{extra} />'
        )

    def polyline(self, points, stroke: str, width_px: float = 2.0):
        if len(points) < 2:
            return
        coords = " ".join(f"{x:.1f},{y:.1f}" for x, y in (self.px(p[0], p[1]) for p in points))
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{stroke}" stroke-width="{width_px:.1f}" />'
        )

    def text(self, x: float, y: float, content: str, size_px: float = 12.0, fill: str = "#202020"):
        cx, cy = self.px(x, y)
        self.parts.append(
            f'<text x="{cx:.1f}" y="{cy:.1f}" font-size="{size_px:.0f}" '
            f'font-family="monospace" fill="{fill}">{content}</text>'
        )

    def to_svg(self) -> str:
        header = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width:.0f}" '
            f'height="{self.height:.0f}" viewBox="0 0 {self.width:.0f} {self.height:.0f}">'
        )
        body = "\n".join(["<!-- generated deterministically -->", *self.parts])
        return f"{header}\n{body}\n</svg>\n"


def render_run_svg(
    scene: Scene,
    trajectory,
    graph: dict,
    frontier_points,
    heatmap_rows=None,
) -> str:
    """Compose the scene outline, trajectory, graph nodes, frontier points,
    and an optional affordance heatmap into one SVG document.

    `heatmap_rows` is an iterable of (x, y, z, score, masked) tuples as read
    from a field CSV; masked points draw gray.
    """
    canvas = SvgCanvas(scene.bounds)
    x0, y0, x1, y1 = scene.bounds
    canvas.rect((x0, y0), (x1, y1), fill="#f8f8f4")
    for wall in scene.walls:
        canvas.rect(wall.min_corner[:2], wall.max_corner[:2], fill="#404040")
    for name, box in scene.objects:
        canvas.rect(box.min_corner[:2], box.max_corner[:2], fill="#b08040", opacity=0.8)
        canvas.text(box.min_corner[0], box.min_corner[1] - 0.05, name, size_px=10, fill="#804818")
    if heatmap_rows is not None:
        rows = list(heatmap_rows)
        scores = [r[3] for r in rows if not r[4]]
        lo = min(scores) if scores else 0.0
        hi = max(scores) if scores else 1.0
        span = (hi - lo) or 1.0
        for x, y, _z, score, masked in rows:
            fill = "#c0c0c0" if masked else _color_for_score((score - lo) / span)
            canvas.circle(x, y, 2.0, fill, extra=f' data-score="{score:.9f}"')
    if frontier_points is not None:
        for p in frontier_points:
            canvas.circle(p[0], p[1], 1.5, "#30a030")
    if trajectory is not None and len(trajectory) >= 2:
        canvas.polyline(trajectory, stroke="#2040c0")
        canvas.circle(trajectory[0][0], trajectory[0][1], 5.0, "#2040c0")
    for node in graph.get("nodes", []):
        nx, ny = node["position"]
        canvas.circle(nx, ny, 6.0, "#e0a000")
        canvas.text(nx + 0.08, ny + 0.08, str(node["id"]), size_px=11, fill="#604000")
    return canvas.to_svg()
