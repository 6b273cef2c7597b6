"""Cutter-set selection: capable/insertable diameter bounds and the
dichotomy decomposition driven by the material-removal-rate threshold."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .errors import InfeasibleError, ValidationError
from .geometry import (
    Region,
    max_inscribed_radius,
    offset_region,
    opening,
    region_difference,
    region_metrics,
    region_union,
)

MRR_THRESHOLD = 0.05       # keep a larger-diameter interval only on a >5% MRR gain
BISECTION_STEP = 0.1       # mm, resolution of the capable-diameter search


@dataclass(frozen=True)
class Tool:
    diameter: float
    flutes: int
    vc: float               # capable feed from the tool database, mm/s
    plunge: str = "helical"  # helical | ramp | axial

    def __post_init__(self):
        if self.diameter <= 0:
            raise ValidationError("tool diameter must be > 0")
        if self.vc <= 0:
            raise ValidationError("tool capable feed must be > 0")


@dataclass(frozen=True)
class DiameterBounds:
    d0: float  # capable: largest tool that empties its zone without retracting
    dx: float  # maximal: largest tool that fits in the pocket at all

    def __post_init__(self):
        if not 0 < self.d0 <= self.dx + 1e-9:
            raise ValidationError(f"need 0 < D0 <= Dx, got D0={self.d0}, Dx={self.dx}")


@dataclass
class DecompositionStep:
    diameter: float
    zone: Region
    length: float      # contour-parallel path length on the zone, mm
    time: float        # length / Vc of the backing catalog tool, s
    volume: float      # zone area x depth, mm^3
    mrr: float         # volume / time, mm^3/s
    tool: Tool


@dataclass
class IntervalDecision:
    lower: float
    upper: float
    midpoint: float
    mrr_lower: float
    mrr_mid: float
    ratio: float
    upper_kept: bool


@dataclass
class Decomposition:
    steps: list[DecompositionStep]
    chosen: list[tuple[Tool, Region]]
    decisions: list[IntervalDecision] = field(default_factory=list)
    residual: Region = field(default_factory=Region)


def removal_time(length: float, tool: Tool) -> float:
    """Removal time for a path of the given length at the tool's capable feed."""
    if length < 0:
        raise ValidationError("path length must be >= 0")
    return length / tool.vc


def mrr(volume: float, time: float) -> float:
    """Material removal rate: removed volume over removal time."""
    if time <= 0:
        if volume > 0:
            raise ValidationError("cannot rate a positive volume removed in zero time")
        return 0.0
    return volume / time


def diameter_bounds(machinable: Region, resolution: float = BISECTION_STEP) -> DiameterBounds:
    """D0/Dx for a machinable region.

    Dx = twice the inscribed radius. D0 = largest D <= Dx whose erosion by D/2 is
    non-empty and connected (the tool reaches its whole accessible zone without
    retracting), found by bisection to `resolution`.
    """
    if machinable.is_empty:
        raise ValidationError("cannot bound tool diameters on an empty region")
    dx = 2.0 * max_inscribed_radius(machinable, tol=0.25 * resolution)

    def connected(d: float) -> bool:
        # quarter-resolution slack keeps exact boundary fits (tool = slot width)
        # on the connected side
        eroded = offset_region(machinable, -(0.5 * d - 0.25 * resolution))
        if eroded.is_empty:
            return False
        return region_metrics(eroded).component_count == 1

    if connected(dx) or connected(dx - 0.5 * resolution):
        return DiameterBounds(dx, dx)
    lo = resolution
    if not connected(lo):
        raise InfeasibleError(
            "no capable diameter: the machinable region is disconnected even for the smallest probe"
        )
    hi = dx
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if connected(mid):
            lo = mid
        else:
            hi = mid
    # bracket centre: with the probe slack this lands within resolution of the
    # true boundary and never under-shoots an exact slot-width fit
    return DiameterBounds(0.5 * (lo + hi), dx)


def catalog_tool_at_most(catalog: list[Tool], diameter: float) -> Tool | None:
    best = None
    for tool in catalog:
        if tool.diameter <= diameter + 1e-9 and (best is None or tool.diameter > best.diameter):
            best = tool
    return best


def _default_min_interval(catalog: list[Tool]) -> float:
    diams = sorted({t.diameter for t in catalog})
    gaps = [b - a for a, b in zip(diams, diams[1:])]
    return max(BISECTION_STEP, min(gaps)) if gaps else BISECTION_STEP


def assign_zones(machinable: Region, diameters: list[float]) -> tuple[list[tuple[float, Region]], Region]:
    """Residual differencing, largest tool first: each smaller tool receives its
    opening minus everything already assigned; leftover is the unreachable rest."""
    ordered = sorted(diameters, reverse=True)
    assigned: list[tuple[float, Region]] = []
    covered = Region()
    for d in ordered:
        reachable = opening(machinable, d)
        zone = region_difference(reachable, covered) if not covered.is_empty else reachable
        assigned.append((d, zone))
        covered = region_union(covered, reachable) if not covered.is_empty else reachable
    residual = region_difference(machinable, covered) if not covered.is_empty else machinable
    return assigned, residual


def dichotomy_decompose(
    machinable: Region,
    depth: float,
    bounds: DiameterBounds,
    catalog: list[Tool],
    threshold: float = MRR_THRESHOLD,
    min_interval: float | None = None,
) -> Decomposition:
    """Split the pocket into tool-diameter zones by interval dichotomy.

    Each interval [a, b] is bisected at m = (a+b)/2; the upper half ]m, b] is
    kept only if the MRR of the midpoint candidate exceeds the lower endpoint's
    by strictly more than `threshold` (ties prefer fewer, larger tools). The
    lower half is always refined further, so at most one interval dies per
    split. Recursion stops when an interval is narrower than `min_interval` or
    holds no catalog diameter. Retained candidate diameters snap down to the
    catalog and zones are assigned by residual differencing.
    """
    from .toolpath import StrategyParams, path_length, spiral_path  # deferred: cyclic module pair

    if machinable.is_empty:
        raise ValidationError("cannot decompose an empty region")
    if depth <= 0:
        raise ValidationError("depth must be > 0")
    if not catalog:
        raise ValidationError("tool catalog is empty")
    if catalog_tool_at_most(catalog, bounds.dx) is None:
        raise InfeasibleError(
            f"no insertable tool: smallest catalog diameter exceeds Dx = {bounds.dx:.3f} mm"
        )
    if min_interval is None:
        min_interval = _default_min_interval(catalog)

    # the MRR anchor must be a real tool; re-base if D0 undercuts the catalog
    d_anchor = bounds.d0
    if catalog_tool_at_most(catalog, d_anchor) is None:
        d_anchor = min(t.diameter for t in catalog if t.diameter <= bounds.dx + 1e-9)

    evals: dict[float, DecompositionStep] = {}

    def evaluate(diameter: float) -> DecompositionStep:
        key = round(diameter, 9)
        if key in evals:
            return evals[key]
        backing = catalog_tool_at_most(catalog, diameter)
        zone = opening(machinable, diameter)
        if backing is None or zone.is_empty:
            step = DecompositionStep(diameter, zone, 0.0, 0.0, 0.0, 0.0,
                                     backing or catalog[0])
            evals[key] = step
            return step
        probe = Tool(diameter, backing.flutes, backing.vc, backing.plunge)
        path = spiral_path(zone, probe, StrategyParams(stepover=0.5 * diameter))
        length = path_length(path).total
        time = removal_time(length, backing)
        volume = region_metrics(zone).area * depth
        step = DecompositionStep(diameter, zone, length, time, volume,
                                 mrr(volume, time), backing)
        evals[key] = step
        return step

    decisions: list[IntervalDecision] = []
    retained: list[float] = [d_anchor]
    work: deque[tuple[float, float]] = deque([(d_anchor, bounds.dx)])
    while work:
        a, b = work.popleft()
        if b - a < min_interval:
            continue
        if not any(a + 1e-9 < t.diameter <= b + 1e-9 for t in catalog):
            continue
        m = 0.5 * (a + b)
        lower_step = evaluate(a)
        mid_step = evaluate(m)
        ratio = (mid_step.mrr / lower_step.mrr) if lower_step.mrr > 0 else math.inf
        upper_kept = mid_step.mrr > (1.0 + threshold) * lower_step.mrr
        decisions.append(
            IntervalDecision(a, b, m, lower_step.mrr, mid_step.mrr, ratio, upper_kept)
        )
        work.append((a, m))
        if upper_kept:
            retained.append(m)
            work.append((m, b))

    snapped: list[float] = []
    for d in retained:
        backing = catalog_tool_at_most(catalog, d)
        if backing is not None and backing.diameter not in snapped:
            snapped.append(backing.diameter)
    if not snapped:
        raise InfeasibleError("no insertable tool after snapping to the catalog")

    zones, residual = assign_zones(machinable, snapped)
    by_diameter = {}
    for tool in catalog:
        if tool.diameter not in by_diameter:
            by_diameter[tool.diameter] = tool
    chosen = [(by_diameter[d], zone) for d, zone in zones]
    steps = sorted(evals.values(), key=lambda s: s.diameter)
    return Decomposition(steps=steps, chosen=chosen, decisions=decisions, residual=residual)


def tool_to_json(tool: Tool) -> dict:
    return {
        "diameter": tool.diameter,
        "flutes": tool.flutes,
        "vc_mm_s": tool.vc,
        "plunge": tool.plunge,
    }


def tool_from_json(data: dict) -> Tool:
    try:
        return Tool(
            diameter=float(data["diameter"]),
            flutes=int(data.get("flutes", 2)),
            vc=float(data["vc_mm_s"]),
            plunge=data.get("plunge", "helical"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed tool entry: {exc}") from exc


def catalog_from_json(data) -> list[Tool]:
    if not isinstance(data, list) or not data:
        raise ValidationError("tool catalog JSON must be a non-empty list")
    return [tool_from_json(entry) for entry in data]
