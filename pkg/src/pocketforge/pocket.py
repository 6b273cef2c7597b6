"""Pocket features: classification, negative-island promotion, specific-entity masking.

A pocket is a prismatic cavity: a boundary contour with optional island holes,
a depth, open edges on unclosed sides, and "specific" aeronautical entities
(thin walls, stiffeners) that reserve unmachined guard zones around themselves.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

from shapely.geometry import LineString, Point, Polygon

from .errors import ValidationError
from .geometry import (
    PolygonWithHoles,
    Region,
    loop_area,
    offset_region,
    region_difference,
    region_from_json,
    region_intersection,
    region_to_json,
    region_union,
    to_shapely,
)

FLOORS = ("flat", "complex")
WALLS = ("perpendicular", "drafted")
ENTITY_KINDS = ("thin_wall", "haut_d_aile", "raidisseur")
CLOSED, OPEN, CORNER = "closed", "open", "corner"


@dataclass
class SpecificEntity:
    kind: str
    footprint: Region
    guard_margin: float | None = None  # None: resolve from the tool catalog at mask time


@dataclass
class Island:
    hole: int                  # index into boundary.holes
    negative: bool = False
    depth: float | None = None  # full depth from the top plane; None inherits the parent's


@dataclass
class Pocket:
    boundary: PolygonWithHoles
    depth: float
    islands: list[Island] = field(default_factory=list)
    open_edges: list[int] = field(default_factory=list)  # outer-loop edge indices
    floor: str = "flat"
    wall: str = "perpendicular"
    entities: list[SpecificEntity] = field(default_factory=list)


@dataclass(frozen=True)
class PocketClass:
    closure: str  # closed | open | corner
    floor: str
    wall: str
    has_islands: bool
    has_specific: bool


def validate_pocket(p: Pocket) -> None:
    to_shapely(Region([p.boundary]))
    if p.depth <= 0:
        raise ValidationError("pocket depth must be > 0")
    if p.floor not in FLOORS:
        raise ValidationError(f"unknown floor kind {p.floor!r}")
    if p.wall not in WALLS:
        raise ValidationError(f"unknown wall kind {p.wall!r}")
    n_edges = len(p.boundary.outer)
    for e in p.open_edges:
        if not 0 <= e < n_edges:
            raise ValidationError(f"open edge index {e} out of range (boundary has {n_edges} edges)")
    for isl in p.islands:
        if not 0 <= isl.hole < len(p.boundary.holes):
            raise ValidationError(f"island refers to missing hole {isl.hole}")
    for ent in p.entities:
        if ent.kind not in ENTITY_KINDS:
            raise ValidationError(f"unknown specific entity kind {ent.kind!r}")
        if ent.guard_margin is not None and ent.guard_margin < 0:
            raise ValidationError("guard margin must be >= 0")


def pocket_area(p: Pocket) -> Region:
    """The top-plane footprint to be emptied: boundary minus all holes."""
    return Region([p.boundary])


def classify_pocket(p: Pocket) -> PocketClass:
    """Deterministic feature class: closure, floor, wall, islands, specific entities."""
    validate_pocket(p)
    if not p.open_edges:
        closure = CLOSED
    elif _is_corner_pocket(p):
        closure = CORNER
    else:
        closure = OPEN
    return PocketClass(
        closure=closure,
        floor=p.floor,
        wall=p.wall,
        has_islands=bool(p.islands),
        has_specific=bool(p.entities),
    )


def _open_edge_runs(open_edges: list[int], n: int) -> list[list[int]]:
    """Group open-edge indices into cyclically-consecutive runs on the outer loop."""
    chosen = sorted(set(open_edges))
    if not chosen:
        return []
    in_set = set(chosen)
    runs = []
    visited = set()
    for e in chosen:
        if e in visited:
            continue
        start = e
        while (start - 1) % n in in_set and (start - 1) % n not in visited and len(visited) < n:
            start = (start - 1) % n
            if start == e:  # every edge open
                break
        run = [start]
        visited.add(start)
        nxt = (start + 1) % n
        while nxt in in_set and nxt not in visited:
            run.append(nxt)
            visited.add(nxt)
            nxt = (nxt + 1) % n
        runs.append(run)
    return runs


def _is_corner_pocket(p: Pocket) -> bool:
    """One connected open run whose edges hug two adjacent sides of the min-area bbox."""
    outer = p.boundary.outer
    n = len(outer)
    runs = _open_edge_runs(p.open_edges, n)
    if len(runs) != 1:
        return False
    rect = Polygon(outer).minimum_rotated_rectangle
    corners = list(rect.exterior.coords)[:4]
    sides = [LineString([corners[k], corners[(k + 1) % 4]]) for k in range(4)]
    touched = set()
    for e in runs[0]:
        a, b = outer[e], outer[(e + 1) % n]
        mid = Point((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)
        dists = [side.distance(mid) for side in sides]
        touched.add(min(range(4), key=lambda k: dists[k]))
    if len(touched) != 2:
        return False
    i, j = sorted(touched)
    return (j - i) in (1, 3)


def promote_negative_islands(p: Pocket) -> tuple[Pocket, list[Pocket]]:
    """Split negative islands off as independent pockets.

    The island loop stays a hole of the parent (its column is machined by the
    promoted pocket, from the top plane down to the island depth). Promoted
    depth defaults to the parent depth; an explicit shallower depth is invalid
    because the depression must reach at least the parent floor.
    """
    validate_pocket(p)
    promoted: list[Pocket] = []
    remaining: list[Island] = []
    for isl in p.islands:
        if not isl.negative:
            remaining.append(isl)
            continue
        depth = p.depth if isl.depth is None else isl.depth
        if depth < p.depth - 1e-9:
            raise ValidationError(
                f"negative island on hole {isl.hole} declares depth {depth} above the parent floor ({p.depth})"
            )
        loop = p.boundary.holes[isl.hole]
        outer = loop[::-1] if loop_area(loop) < 0 else list(loop)
        promoted.append(
            Pocket(
                boundary=PolygonWithHoles(outer),
                depth=depth,
                floor=p.floor,
                wall=p.wall,
            )
        )
    p2 = replace(p, islands=remaining)
    return p2, promoted


def mask_specific_entities(
    p: Pocket, default_margin: float | None = None
) -> tuple[Region, Region]:
    """Split the pocket footprint into (machinable, reserved) around specific entities.

    reserved = union of footprints dilated by their guard margins, clipped to the
    pocket; machinable is the rest. Warns (does not raise) when nothing is left.
    """
    validate_pocket(p)
    area = pocket_area(p)
    if not p.entities:
        return area, Region()
    reserved = Region()
    for ent in p.entities:
        margin = ent.guard_margin if ent.guard_margin is not None else default_margin
        if margin is None:
            raise ValidationError(
                f"{ent.kind} entity has no guard margin and no default was supplied"
            )
        grown = offset_region(ent.footprint, margin) if margin > 0 else ent.footprint
        clipped = region_intersection(grown, area)
        if not clipped.is_empty:
            reserved = region_union(reserved, clipped) if not reserved.is_empty else clipped
    machinable = region_difference(area, reserved)
    if machinable.is_empty:
        warnings.warn("specific-entity guard zones cover the entire pocket", stacklevel=2)
    return machinable, reserved


def pocket_to_json(p: Pocket) -> dict:
    data = {
        "boundary": region_to_json(Region([p.boundary]))["parts"][0],
        "depth": p.depth,
        "islands": [
            {"hole": i.hole, "negative": i.negative, **({"depth": i.depth} if i.depth is not None else {})}
            for i in p.islands
        ],
        "open_edges": list(p.open_edges),
        "floor": p.floor,
        "wall": p.wall,
        "entities": [
            {
                "kind": e.kind,
                "footprint": region_to_json(e.footprint),
                **({"guard_margin": e.guard_margin} if e.guard_margin is not None else {}),
            }
            for e in p.entities
        ],
    }
    return data


def pocket_from_json(data: dict) -> Pocket:
    if not isinstance(data, dict) or "boundary" not in data or "depth" not in data:
        raise ValidationError('pocket JSON needs "boundary" and "depth"')
    boundary_region = region_from_json({"parts": [data["boundary"]]})
    boundary = boundary_region.parts[0]
    islands = []
    for entry in data.get("islands", []):
        if isinstance(entry, int):
            islands.append(Island(hole=entry))
        else:
            depth = entry.get("depth")
            islands.append(
                Island(
                    hole=int(entry["hole"]),
                    negative=bool(entry.get("negative", False)),
                    depth=float(depth) if depth is not None else None,
                )
            )
    entities = []
    for entry in data.get("entities", []):
        margin = entry.get("guard_margin")
        entities.append(
            SpecificEntity(
                kind=entry["kind"],
                footprint=region_from_json(entry["footprint"]),
                guard_margin=float(margin) if margin is not None else None,
            )
        )
    p = Pocket(
        boundary=boundary,
        depth=float(data["depth"]),
        islands=islands,
        open_edges=[int(e) for e in data.get("open_edges", [])],
        floor=data.get("floor", "flat"),
        wall=data.get("wall", "perpendicular"),
        entities=entities,
    )
    validate_pocket(p)
    return p
