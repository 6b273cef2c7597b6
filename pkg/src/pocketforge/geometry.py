"""Planar polygon arithmetic: signed offsets, morphological opening, inscribed disks.

Coordinates are double-precision millimetres, y-up. ``Region`` (a list of
pairwise-disjoint polygons-with-holes) is the geometric currency every other
module trades in. All operations are pure functions; nothing here holds state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import shapely
from shapely.geometry import LinearRing, MultiPolygon, Polygon
from shapely.geometry.polygon import orient
from shapely.ops import unary_union

from .errors import ValidationError

SNAP_EPS = 1e-6      # mm, vertex dedup and boolean robustness
DEFAULT_TOL = 0.01   # mm, chordal deviation when flattening offset arcs
_AREA_EPS = 1e-9     # mm^2, below this a face is a numerical sliver, not geometry

Point2 = tuple[float, float]
Loop = list[Point2]


@dataclass
class PolygonWithHoles:
    """One connected face: CCW outer loop, CW hole loops, implicitly closed."""

    outer: Loop
    holes: list[Loop] = field(default_factory=list)


@dataclass
class Region:
    """Zero or more pairwise-disjoint faces; empty list means zero area."""

    parts: list[PolygonWithHoles] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not self.parts


@dataclass(frozen=True)
class RegionMetrics:
    area: float
    perimeter: float
    component_count: int


def loop_area(loop: Loop) -> float:
    """Signed shoelace area, positive for counter-clockwise loops."""
    a = 0.0
    n = len(loop)
    for i in range(n):
        x1, y1 = loop[i]
        x2, y2 = loop[(i + 1) % n]
        a += x1 * y2 - x2 * y1
    return 0.5 * a


def dedup_loop(loop: Loop, eps: float = SNAP_EPS) -> Loop:
    """Drop consecutive near-duplicate vertices and a repeated closing vertex."""
    out: Loop = []
    for p in loop:
        if out and abs(p[0] - out[-1][0]) < eps and abs(p[1] - out[-1][1]) < eps:
            continue
        out.append((float(p[0]), float(p[1])))
    while len(out) > 1 and abs(out[0][0] - out[-1][0]) < eps and abs(out[0][1] - out[-1][1]) < eps:
        out.pop()
    return out


def _checked_ring(loop: Loop, label: str) -> Loop:
    clean = dedup_loop(loop)
    if len(clean) < 3:
        raise ValidationError(f"{label}: fewer than 3 distinct vertices")
    ring = LinearRing(clean)
    if not ring.is_simple:
        raise ValidationError(f"{label}: loop self-intersects")
    return clean


def to_shapely(region: Region, validate: bool = True):
    """Region -> shapely geometry (Polygon/MultiPolygon); optionally validates loops."""
    polys = []
    for i, part in enumerate(region.parts):
        if validate:
            outer = _checked_ring(part.outer, f"part {i} outer loop")
            holes = [_checked_ring(h, f"part {i} hole {j}") for j, h in enumerate(part.holes)]
            if abs(loop_area(outer)) <= _AREA_EPS:
                raise ValidationError(f"part {i} outer loop: zero area")
        else:
            outer, holes = part.outer, part.holes
        poly = Polygon(outer, holes)
        if validate and not poly.is_valid:
            raise ValidationError(f"part {i}: invalid polygon (holes outside or overlapping)")
        polys.append(poly)
    if not polys:
        return Polygon()
    if len(polys) == 1:
        return polys[0]
    return unary_union(polys)


def from_shapely(geom) -> Region:
    """Shapely geometry -> normalized Region (CCW outers, CW holes, slivers dropped)."""
    parts: list[PolygonWithHoles] = []
    for poly in _iter_polygons(geom):
        if poly.is_empty or poly.area <= _AREA_EPS:
            continue
        poly = orient(poly)  # exterior CCW, holes CW
        outer = dedup_loop(list(poly.exterior.coords))
        if len(outer) < 3:
            continue
        holes = []
        for ring in poly.interiors:
            h = dedup_loop(list(ring.coords))
            if len(h) >= 3 and abs(loop_area(h)) > _AREA_EPS:
                holes.append(h)
        parts.append(PolygonWithHoles(outer, holes))
    return Region(parts)


def _iter_polygons(geom):
    if geom.is_empty:
        return
    if isinstance(geom, Polygon):
        yield geom
    elif isinstance(geom, MultiPolygon):
        yield from geom.geoms
    else:  # GeometryCollection from degenerate boolean output
        for g in getattr(geom, "geoms", ()):
            yield from _iter_polygons(g)


def _quad_segs(radius: float, tol: float) -> int:
    # chord sagitta r(1 - cos(step/2)) <= tol  =>  step <= 2*acos(1 - tol/r)
    if tol >= radius:
        return 1
    step = 2.0 * math.acos(1.0 - tol / radius)
    return max(1, math.ceil((math.pi / 2.0) / step))


def offset_region(region: Region, delta: float, tol: float = DEFAULT_TOL) -> Region:
    """Minkowski offset by a disk of radius ``|delta|``: outward if positive, inward if negative.

    Offset arcs are flattened to polylines with chordal deviation <= tol.
    """
    if tol <= 0:
        raise ValidationError("offset tolerance must be > 0")
    geom = to_shapely(region)
    if geom.is_empty:
        return Region()
    if delta == 0:
        return from_shapely(geom)
    out = geom.buffer(delta, quad_segs=_quad_segs(abs(delta), tol))
    return from_shapely(out)


def opening(region: Region, diameter: float, tol: float = DEFAULT_TOL) -> Region:
    """Morphological opening: the set of points sweepable by a disk of the given diameter.

    The structuring disk is closed: a corridor exactly as wide as the disk stays
    in the opening (the erosion radius carries a snap-epsilon slack so the exact
    boundary fit survives floating-point buffering).
    """
    if diameter < 0:
        raise ValidationError("opening diameter must be >= 0")
    radius = 0.5 * diameter - SNAP_EPS
    if radius <= 0:
        return from_shapely(to_shapely(region))
    eroded = offset_region(region, -radius, tol)
    return offset_region(eroded, +radius, tol)


def max_inscribed_radius(region: Region, tol: float = 0.01) -> float:
    """Radius of the largest disk contained in the region, absolute error <= tol."""
    geom = to_shapely(region)
    if geom.is_empty:
        raise ValidationError("cannot inscribe a disk in an empty region")
    best = 0.0
    for poly in _iter_polygons(geom):
        probe = shapely.maximum_inscribed_circle(poly, tolerance=0.5 * tol)
        best = max(best, probe.length)
    return best


def region_metrics(region: Region) -> RegionMetrics:
    """Exact polygonal area and perimeter plus the number of disjoint parts."""
    geom = to_shapely(region)
    if geom.is_empty:
        return RegionMetrics(0.0, 0.0, 0)
    count = sum(1 for _ in _iter_polygons(geom))
    return RegionMetrics(geom.area, geom.length, count)


def region_union(a: Region, b: Region) -> Region:
    return from_shapely(unary_union([to_shapely(a, validate=False), to_shapely(b, validate=False)]))


def region_difference(a: Region, b: Region) -> Region:
    return from_shapely(to_shapely(a, validate=False).difference(to_shapely(b, validate=False)))


def region_intersection(a: Region, b: Region) -> Region:
    return from_shapely(to_shapely(a, validate=False).intersection(to_shapely(b, validate=False)))


def region_bounds(region: Region) -> tuple[float, float, float, float]:
    geom = to_shapely(region, validate=False)
    if geom.is_empty:
        raise ValidationError("empty region has no bounds")
    return geom.bounds


def box_region(x0: float, y0: float, x1: float, y1: float) -> Region:
    """Axis-aligned rectangle, a convenience for fixtures and defaults."""
    return Region([PolygonWithHoles([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])])


def region_to_json(region: Region) -> dict:
    return {
        "parts": [
            {
                "outer": [[x, y] for x, y in part.outer],
                "holes": [[[x, y] for x, y in h] for h in part.holes],
            }
            for part in region.parts
        ]
    }


def region_from_json(data: dict) -> Region:
    if not isinstance(data, dict) or "parts" not in data:
        raise ValidationError('region JSON must be an object with a "parts" list')
    parts = []
    for i, entry in enumerate(data["parts"]):
        try:
            outer = [(float(x), float(y)) for x, y in entry["outer"]]
            holes = [[(float(x), float(y)) for x, y in h] for h in entry.get("holes", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"region part {i}: malformed coordinates ({exc})") from exc
        if loop_area(outer) < 0:
            outer = outer[::-1]
        holes = [h[::-1] if loop_area(h) > 0 else h for h in holes]
        parts.append(PolygonWithHoles(outer, holes))
    region = Region(parts)
    to_shapely(region)  # validates loops, raises with part index
    return region
