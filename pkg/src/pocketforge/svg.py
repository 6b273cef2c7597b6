"""SVG artifacts for visual review: zone underlays plus one path element per
move intent. No numeric contract; geometry is flattened for display only."""

from __future__ import annotations

import math

from .geometry import Region
from .toolpath import INTENTS, LINE, Toolpath

INTENT_COLORS = {
    "cut": "#1f77b4",
    "entry": "#2ca02c",
    "link": "#ff7f0e",
    "exit": "#d62728",
}
ZONE_FILLS = ("#e6e6e6", "#cfe3f5", "#dcead2", "#f5e1cf", "#e6d5ea", "#f2f2cf")
_DISPLAY_TOL = 0.1  # mm, arc flattening for display


def _region_d(region: Region) -> str:
    parts = []
    for part in region.parts:
        for loop in [part.outer, *part.holes]:
            parts.append(
                "M " + " L ".join(f"{x:.3f},{y:.3f}" for x, y in loop) + " Z"
            )
    return " ".join(parts)


def _move_points(mv):
    if mv.kind == LINE:
        return [mv.start, mv.end]
    r = mv.radius
    sweep = mv.sweep
    if r < 1e-9:
        return [mv.start, mv.end]
    step = math.pi if _DISPLAY_TOL >= r else 2.0 * math.acos(1.0 - _DISPLAY_TOL / r)
    n = max(2, math.ceil(sweep / step))
    sign = 1.0 if mv.kind == "arc_ccw" else -1.0
    a0 = math.atan2(mv.start[1] - mv.center[1], mv.start[0] - mv.center[0])
    pts = [mv.start]
    for k in range(1, n):
        a = a0 + sign * sweep * k / n
        pts.append((mv.center[0] + r * math.cos(a), mv.center[1] + r * math.sin(a)))
    pts.append(mv.end)
    return pts


def _bounds(regions, paths):
    xs, ys = [], []
    for region in regions:
        for part in region.parts:
            for loop in [part.outer, *part.holes]:
                for x, y in loop:
                    xs.append(x)
                    ys.append(y)
    for path in paths:
        for mv in path.moves:
            for x, y in _move_points(mv):
                xs.append(x)
                ys.append(y)
    if not xs:
        return (0.0, 0.0, 1.0, 1.0)
    return (min(xs), min(ys), max(xs), max(ys))


def render_svg(zones: list[tuple[str, Region]] | None = None,
               paths: list[Toolpath] | None = None,
               width: int = 800) -> str:
    """Zones as filled outlines, every toolpath as one <path> per intent class."""
    zones = zones or []
    paths = paths or []
    x0, y0, x1, y1 = _bounds([z for _, z in zones], paths)
    pad = 0.05 * max(x1 - x0, y1 - y0, 1.0)
    x0, y0, x1, y1 = x0 - pad, y0 - pad, x1 + pad, y1 + pad
    w, h = x1 - x0, y1 - y0
    height = int(round(width * h / w)) if w > 0 else width
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="{x0:.3f} {y0:.3f} {w:.3f} {h:.3f}">',
        # geometry is y-up; flip for screen coordinates
        f'<g transform="translate(0,{(y0 + y1):.3f}) scale(1,-1)">',
    ]
    stroke_w = max(w, h) / 400.0
    for i, (label, region) in enumerate(zones):
        fill = ZONE_FILLS[i % len(ZONE_FILLS)]
        out.append(
            f'<path class="zone" data-label="{label}" d="{_region_d(region)}" '
            f'fill="{fill}" fill-rule="evenodd" stroke="#888888" '
            f'stroke-width="{stroke_w:.3f}"/>'
        )
    for path in paths:
        for intent in INTENTS:
            chunks = []
            for mv in path.moves:
                if mv.intent != intent:
                    continue
                pts = _move_points(mv)
                chunks.append(
                    "M " + " L ".join(f"{x:.3f},{y:.3f}" for x, y in pts)
                )
            if not chunks:
                continue
            out.append(
                f'<path class="{intent}" d="{" ".join(chunks)}" fill="none" '
                f'stroke="{INTENT_COLORS[intent]}" stroke-width="{stroke_w:.3f}"/>'
            )
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out)
