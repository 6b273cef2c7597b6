"""Toolpath generation: contour-parallel spirals, zig-zag sweeps, corner rounding,
HSM pass links, entries, and arc discretization.

Paths are ordered C0 move lists (lines and circular arcs) in the XY plane; every
transform here preserves C0 continuity. Cut passes ride the tool center, offset
one tool radius inside the zone walls.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace

import shapely
from shapely.geometry import LineString, Point, Polygon
from shapely.geometry.polygon import orient
from shapely import affinity

from .errors import InfeasibleError, ValidationError
from .geometry import (
    DEFAULT_TOL,
    SNAP_EPS,
    Region,
    _iter_polygons,
    dedup_loop,
    to_shapely,
)
from .tools import Tool

LINE, ARC_CW, ARC_CCW = "line", "arc_cw", "arc_ccw"
CUT, ENTRY, LINK, EXIT = "cut", "entry", "link", "exit"
INTENTS = (CUT, ENTRY, LINK, EXIT)

SPIRAL, ZIGZAG = "spiral", "zigzag"
CLASSIC, HSM = "classic", "hsm"
TANGENTIAL_FLANK, SPIRAL_PLUNGE = "tangential_flank", "spiral_plunge"

MIN_HELIX_RADIUS = 0.1          # mm, below this there is no room to plunge helically
HSM_LINK_MAX_FACTOR = 1.5       # links longer than this x stepover stay classic

Point2 = tuple[float, float]


def _dist(a: Point2, b: Point2) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])


def _unit(a: Point2, b: Point2) -> Point2 | None:
    d = _dist(a, b)
    if d < SNAP_EPS:
        return None
    return ((b[0] - a[0]) / d, (b[1] - a[1]) / d)


@dataclass
class Move:
    """One C0 path element; arcs carry an explicit center and a winding kind."""

    kind: str
    start: Point2
    end: Point2
    center: Point2 | None = None
    intent: str = CUT

    @property
    def length(self) -> float:
        if self.kind == LINE:
            return _dist(self.start, self.end)
        return self.radius * self.sweep

    @property
    def radius(self) -> float:
        return _dist(self.start, self.center)

    @property
    def sweep(self) -> float:
        """Swept angle in radians; a closed arc (start == end) is a full circle."""
        a0 = math.atan2(self.start[1] - self.center[1], self.start[0] - self.center[0])
        a1 = math.atan2(self.end[1] - self.center[1], self.end[0] - self.center[0])
        if self.kind == ARC_CCW:
            s = (a1 - a0) % (2 * math.pi)
        else:
            s = (a0 - a1) % (2 * math.pi)
        if s < 1e-12 and _dist(self.start, self.end) < SNAP_EPS:
            s = 2 * math.pi
        return s

    def tangent(self, at_end: bool) -> Point2 | None:
        if self.kind == LINE:
            return _unit(self.start, self.end)
        p = self.end if at_end else self.start
        rx, ry = p[0] - self.center[0], p[1] - self.center[1]
        r = math.hypot(rx, ry)
        if r < SNAP_EPS:
            return None
        if self.kind == ARC_CCW:
            return (-ry / r, rx / r)
        return (ry / r, -rx / r)


@dataclass
class Toolpath:
    moves: list[Move]
    tool: Tool
    feed: float | None = None  # programmed feed V_f, mm/s; set when known
    flags: list[str] = field(default_factory=list)


@dataclass
class StrategyParams:
    mode: str = SPIRAL
    stepover: float | None = None        # None: half the tool diameter
    zigzag_direction: float | None = None  # radians; None: zone's longest axis
    links: str = CLASSIC
    corner_radius: float = 0.0
    entry: str = SPIRAL_PLUNGE
    chord_tol: float | None = None       # None: keep native arcs


@dataclass(frozen=True)
class PathLengths:
    total: float
    cut: float


def _resolve_stepover(tool: Tool, params: StrategyParams) -> float:
    step = params.stepover if params.stepover is not None else 0.5 * tool.diameter
    if step <= 0:
        raise ValidationError("stepover must be > 0")
    if step > tool.diameter + SNAP_EPS:
        raise ValidationError(
            f"stepover {step} exceeds tool diameter {tool.diameter} (uncut ridges)"
        )
    return step


def _loop_points(ring) -> list[Point2]:
    return dedup_loop([(x, y) for x, y in ring.coords])


def _nearest_index(pts: list[Point2], target: Point2) -> int:
    return min(range(len(pts)), key=lambda i: _dist(pts[i], target))


def _emit_loop(moves: list[Move], pts: list[Point2], pos: Point2 | None,
               link_intent: str = LINK) -> Point2:
    """Append one closed polygonal pass, starting at the vertex nearest pos."""
    start = _nearest_index(pts, pos) if pos is not None else 0
    ordered = pts[start:] + pts[:start]
    ordered.append(ordered[0])
    if pos is not None and _dist(pos, ordered[0]) > SNAP_EPS:
        moves.append(Move(LINE, pos, ordered[0], intent=link_intent))
    for a, b in zip(ordered, ordered[1:]):
        if _dist(a, b) > SNAP_EPS:
            moves.append(Move(LINE, a, b, intent=CUT))
    return ordered[0]


def _inscribed_center(poly: Polygon) -> Point2:
    probe = shapely.maximum_inscribed_circle(poly, tolerance=0.05)
    x, y = probe.coords[0]
    return (float(x), float(y))


def spiral_path(zone: Region, tool: Tool, params: StrategyParams) -> Toolpath:
    """Contour-parallel roughing: successive inward offsets of the zone boundary.

    Execution runs innermost to outermost per connected ring family, a degenerate
    centre pass at each family's deepest point, and the boundary-offset ring last
    (wall finish). The zone is assumed already tool-accessible
    (opening(zone, tool.diameter) == zone).
    """
    step = _resolve_stepover(tool, params)
    if zone.is_empty:
        return Toolpath([], tool)
    zg = to_shapely(zone, validate=False)
    r_tool = 0.5 * tool.diameter

    levels: list[list[Polygon]] = []
    k = 0
    while True:
        # snap-epsilon slack keeps the medial sliver of a corridor exactly as
        # wide as the tool (closed-fit, matching opening()); the pass along it
        # is the slot's down-and-back midline cut
        inset = r_tool + k * step - SNAP_EPS
        g = zg.buffer(-inset, quad_segs=_buffer_quad_segs(inset))
        # drop numerical dust but keep real slivers: tiny area AND tiny boundary
        polys = [
            p for p in _iter_polygons(g)
            if p.area > DEFAULT_TOL**2 or p.length > 10.0 * DEFAULT_TOL
        ]
        if not polys:
            break
        levels.append(polys)
        k += 1
    if not levels:
        return Toolpath([], tool)

    # ring family forest: a component at level k+1 belongs to the level-k
    # component that contains it
    parents: dict[tuple[int, int], tuple[int, int] | None] = {}
    children: dict[tuple[int, int] | None, list[tuple[int, int]]] = {}
    for lev, polys in enumerate(levels):
        for ci, poly in enumerate(polys):
            node = (lev, ci)
            parent = None
            if lev > 0:
                probe = poly.representative_point()
                cands = levels[lev - 1]
                for pi, cand in enumerate(cands):
                    if cand.covers(probe):
                        parent = (lev - 1, pi)
                        break
                else:
                    # sliver child sitting on its parent's boundary: nearest wins
                    pi = min(range(len(cands)), key=lambda q: cands[q].distance(probe))
                    parent = (lev - 1, pi)
            parents[node] = parent
            children.setdefault(parent, []).append(node)

    moves: list[Move] = []
    pos: Point2 | None = None

    def visit(node: tuple[int, int]) -> None:
        nonlocal pos
        kids = list(children.get(node, []))
        if not kids:
            # deepest erosion of this family: collapse to its inscribed centre
            center = _inscribed_center(levels[node[0]][node[1]])
            if pos is not None and _dist(pos, center) > SNAP_EPS:
                moves.append(Move(LINE, pos, center, intent=LINK))
            moves.append(Move(LINE, center, center, intent=CUT))
            pos = center
        while kids:
            anchor = pos if pos is not None else (0.0, 0.0)
            kids.sort(key=lambda n: levels[n[0]][n[1]].distance(Point(anchor)))
            visit(kids.pop(0))
        poly = orient(levels[node[0]][node[1]])
        pos_local = pos
        pos_local = _emit_loop(moves, _loop_points(poly.exterior), pos_local)
        for ring in poly.interiors:
            pos_local = _emit_loop(moves, _loop_points(ring), pos_local)
        pos = moves[-1].end if moves else pos_local

    roots = sorted(children.get(None, []), key=lambda n: levels[n[0]][n[1]].bounds)
    for root in roots:
        visit(root)
    return Toolpath(moves, tool)


def _buffer_quad_segs(radius: float, tol: float = DEFAULT_TOL) -> int:
    if tol >= radius or radius <= 0:
        return 1
    step = 2.0 * math.acos(1.0 - tol / radius)
    return max(1, math.ceil((math.pi / 2.0) / step))


def _longest_axis_angle(geom) -> float:
    rect = geom.minimum_rotated_rectangle
    coords = list(rect.exterior.coords)[:4]
    best, angle = -1.0, 0.0
    for i in range(2):
        a, b = coords[i], coords[i + 1]
        length = _dist(a, b)
        if length > best:
            best = length
            angle = math.atan2(b[1] - a[1], b[0] - a[0])
    return angle


def _row_segments(poly, y: float, x0: float, x1: float) -> list[tuple[Point2, Point2]]:
    scan = LineString([(x0, y), (x1, y)])
    inter = poly.intersection(scan)
    segs = []
    geoms = getattr(inter, "geoms", [inter])
    for g in geoms:
        if isinstance(g, LineString) and g.length > SNAP_EPS:
            c = list(g.coords)
            a, b = c[0], c[-1]
            if a[0] > b[0]:
                a, b = b, a
            segs.append(((a[0], a[1]), (b[0], b[1])))
    segs.sort(key=lambda s: s[0][0])
    return segs


def zigzag_path(zone: Region, tool: Tool, params: StrategyParams) -> Toolpath:
    """Direction-parallel roughing (aller-retour) plus a closing wall contour pass."""
    step = _resolve_stepover(tool, params)
    if zone.is_empty:
        return Toolpath([], tool)
    zg = to_shapely(zone, validate=False)
    theta = (
        params.zigzag_direction
        if params.zigzag_direction is not None
        else _longest_axis_angle(zg)
    )
    r_tool = 0.5 * tool.diameter
    band = zg.buffer(-r_tool, quad_segs=_buffer_quad_segs(r_tool))

    moves: list[Move] = []
    flags: list[str] = []
    pos: Point2 | None = None

    def back(pt: Point2) -> Point2:
        # rotate from the sweep frame back to world coordinates
        c, s = math.cos(theta), math.sin(theta)
        return (c * pt[0] - s * pt[1], s * pt[0] + c * pt[1])

    if band.is_empty:
        # zone thinner than the tool: single pass on the medial line of each part
        for poly in _iter_polygons(zg):
            rot = affinity.rotate(poly, -theta, origin=(0, 0), use_radians=True)
            minx, miny, maxx, maxy = rot.bounds
            ymid = 0.5 * (miny + maxy)
            for a, b in _row_segments(rot, ymid, minx - 1.0, maxx + 1.0):
                wa, wb = back(a), back(b)
                if pos is not None and _dist(pos, wa) > SNAP_EPS:
                    moves.append(Move(LINE, pos, wa, intent=LINK))
                moves.append(Move(LINE, wa, wb, intent=CUT))
                pos = wb
        return Toolpath(moves, tool, flags=flags)

    for comp in _iter_polygons(band):
        rot = affinity.rotate(comp, -theta, origin=(0, 0), use_radians=True)
        minx, miny, maxx, maxy = rot.bounds
        height = maxy - miny
        count = int(math.floor(height / step + 1e-9)) + 1
        for k in range(count):
            y = min(miny + k * step, maxy)
            segs = _row_segments(rot, y, minx - 1.0, maxx + 1.0)
            forward = k % 2 == 0
            if not forward:
                segs = [(b, a) for a, b in reversed(segs)]
            for a, b in segs:
                wa, wb = back(a), back(b)
                if pos is not None and _dist(pos, wa) > SNAP_EPS:
                    link = Move(LINE, pos, wa, intent=LINK)
                    if not Polygon(comp).buffer(1e-6).covers(LineString([pos, wa])):
                        flags.append("link_exits_band")
                    moves.append(link)
                moves.append(Move(LINE, wa, wb, intent=CUT))
                pos = wb
        # closing contour pass along the eroded boundary (wall finish)
        poly = orient(comp)
        pos = _emit_loop(moves, _loop_points(poly.exterior), pos)
        for ring in poly.interiors:
            pos = _emit_loop(moves, _loop_points(ring), pos)
        if moves:
            pos = moves[-1].end
    return Toolpath(moves, tool, flags=flags)


def cornerize(path: Toolpath, r: float) -> Toolpath:
    """Replace sharp corners between consecutive line cut-moves by tangent arcs.

    The radius is clipped so tangent points stay within each leg's half-length;
    r = 0 is the identity. Never lengthens the path.
    """
    if r < 0:
        raise ValidationError("corner radius must be >= 0")
    moves = path.moves
    if r == 0 or len(moves) < 2:
        return replace(path, moves=list(moves))

    n = len(moves)
    fillets: list[tuple[float, float, bool] | None] = [None] * (n - 1)
    for i in range(n - 1):
        a, b = moves[i], moves[i + 1]
        if not (a.kind == LINE and b.kind == LINE and a.intent == CUT and b.intent == CUT):
            continue
        if _dist(a.end, b.start) > SNAP_EPS:
            continue
        u = _unit(a.start, a.end)
        v = _unit(b.start, b.end)
        if u is None or v is None:
            continue
        dot = max(-1.0, min(1.0, u[0] * v[0] + u[1] * v[1]))
        turn = math.acos(dot)
        if turn < 1e-6 or turn > math.pi - 1e-6:
            continue  # collinear or reversal: nothing to round
        tan_half = math.tan(0.5 * turn)
        rc = min(r, 0.5 * min(a.length, b.length) / tan_half)
        t = rc * tan_half
        if rc < SNAP_EPS or t < SNAP_EPS:
            continue
        ccw = (u[0] * v[1] - u[1] * v[0]) > 0
        fillets[i] = (t, rc, ccw)

    out: list[Move] = []
    for i, mv in enumerate(moves):
        start, end = mv.start, mv.end
        if mv.kind == LINE:
            u = _unit(mv.start, mv.end)
            if i > 0 and fillets[i - 1] is not None and u is not None:
                t_in = fillets[i - 1][0]
                start = (start[0] + u[0] * t_in, start[1] + u[1] * t_in)
            if i < n - 1 and fillets[i] is not None and u is not None:
                t_out = fillets[i][0]
                end = (end[0] - u[0] * t_out, end[1] - u[1] * t_out)
            if _dist(start, end) > SNAP_EPS:
                out.append(replace(mv, start=start, end=end))
        else:
            out.append(mv)
        if i < n - 1 and fillets[i] is not None:
            t, rc, ccw = fillets[i]
            u = _unit(mv.start, mv.end)
            v = _unit(moves[i + 1].start, moves[i + 1].end)
            corner = mv.end
            p_in = (corner[0] - u[0] * t, corner[1] - u[1] * t)
            p_out = (corner[0] + v[0] * t, corner[1] + v[1] * t)
            normal = (-u[1], u[0]) if ccw else (u[1], -u[0])
            center = (p_in[0] + normal[0] * rc, p_in[1] + normal[1] * rc)
            out.append(
                Move(ARC_CCW if ccw else ARC_CW, p_in, p_out, center=center, intent=CUT)
            )
    return replace(path, moves=out)


def hsm_links(path: Toolpath, style: str, stepover: float,
              zone: Region | None = None) -> Toolpath:
    """Shape the step-over transitions between cut passes.

    classic: straight links (sharp turns). hsm: outward semicircular blends of
    diameter = stepover, tangent to both passes; a blend that would leave the
    zone by more than a tool radius falls back to classic and is flagged.
    """
    if style not in (CLASSIC, HSM):
        raise ValidationError(f"unknown link style {style!r}")
    moves = path.moves
    flags = list(path.flags)
    zone_geom = to_shapely(zone, validate=False) if zone is not None else None
    out: list[Move] = []
    n = len(moves)
    for i, mv in enumerate(moves):
        is_pass_link = (
            mv.intent == LINK
            and 0 < i < n - 1
            and moves[i - 1].intent == CUT
            and moves[i + 1].intent == CUT
        )
        if not is_pass_link:
            out.append(mv)
            continue
        if style == CLASSIC:
            if mv.kind != LINE:
                out.append(Move(LINE, mv.start, mv.end, intent=LINK))
            else:
                out.append(mv)
            continue
        length = _dist(mv.start, mv.end)
        if mv.kind != LINE or length < SNAP_EPS or length > HSM_LINK_MAX_FACTOR * stepover:
            out.append(mv)
            continue
        u_in = moves[i - 1].tangent(at_end=True)
        if u_in is None:
            out.append(mv)
            continue
        ab = ((mv.end[0] - mv.start[0]) / length, (mv.end[1] - mv.start[1]) / length)
        cross = u_in[0] * ab[1] - u_in[1] * ab[0]
        if abs(cross) < 1e-9:
            out.append(mv)  # link along the pass direction: no sideways blend
            continue
        ccw = cross > 0
        mid = (0.5 * (mv.start[0] + mv.end[0]), 0.5 * (mv.start[1] + mv.end[1]))
        if zone_geom is not None:
            rx, ry = mv.start[0] - mid[0], mv.start[1] - mid[1]
            apex_off = (-ry, rx) if ccw else (ry, -rx)
            apex = Point(mid[0] + apex_off[0], mid[1] + apex_off[1])
            if apex.distance(zone_geom) > 0.5 * path.tool.diameter:
                flags.append("hsm_link_fallback")
                out.append(mv)
                continue
        out.append(Move(ARC_CCW if ccw else ARC_CW, mv.start, mv.end, center=mid, intent=LINK))
    return replace(path, moves=out, flags=flags)


def entry_path(zone: Region, pocket_class, tool: Tool, params: StrategyParams,
               depth: float | None = None, path: Toolpath | None = None) -> Toolpath:
    """Entry prefix for a zone: tangential flank arc for open/corner pockets,
    helical spiral plunge for closed ones. Moves carry intent=entry."""
    closure = getattr(pocket_class, "closure", pocket_class)
    kind = SPIRAL_PLUNGE if closure == "closed" else TANGENTIAL_FLANK
    return _entry_prefix(zone, kind, tool, params, depth, path)


def _first_cut(path: Toolpath | None) -> Move | None:
    if path is None:
        return None
    for mv in path.moves:
        if mv.intent == CUT and mv.length > SNAP_EPS:
            return mv
    return None


def _entry_prefix(zone: Region, kind: str, tool: Tool, params: StrategyParams,
                  depth: float | None, path: Toolpath | None) -> Toolpath:
    if zone.is_empty:
        return Toolpath([], tool)
    zg = to_shapely(zone, validate=False)
    target_move = _first_cut(path)
    if target_move is None and path is not None and path.moves:
        target_move = path.moves[0]

    if kind == TANGENTIAL_FLANK:
        return _tangential_entry(zg, tool, target_move)
    return _helix_entry(zg, tool, depth, target_move)


def _tangential_entry(zg, tool: Tool, target: Move | None) -> Toolpath:
    r = 0.5 * tool.diameter
    if target is None:
        return Toolpath([], tool)
    p = target.start
    u = target.tangent(at_end=False) or (1.0, 0.0)
    candidates = []
    for side in (+1.0, -1.0):
        normal = (-u[1] * side, u[0] * side)
        center = (p[0] + normal[0] * r, p[1] + normal[1] * r)
        # quarter arc ending at p with tangent u; ccw when the center is on the left
        ccw = side > 0
        rot = -math.pi / 2 if ccw else math.pi / 2
        sx, sy = _rotate((p[0] - center[0], p[1] - center[1]), rot)
        start = (center[0] + sx, center[1] + sy)
        mx, my = _rotate((p[0] - center[0], p[1] - center[1]), 0.5 * rot)
        apex = Point(center[0] + mx, center[1] + my)
        candidates.append((apex.distance(zg), ccw, start, center))
    candidates.sort(key=lambda c: (-c[0], not c[1]))
    _, ccw, start, center = candidates[0]
    mv = Move(ARC_CCW if ccw else ARC_CW, start, p, center=center, intent=ENTRY)
    return Toolpath([mv], tool)


def _helix_entry(zg, tool: Tool, depth: float | None, target: Move | None) -> Toolpath:
    best_poly, best_r = None, -1.0
    for poly in _iter_polygons(zg):
        probe = shapely.maximum_inscribed_circle(poly, tolerance=0.02)
        if probe.length > best_r:
            best_r, best_poly = probe.length, poly
            center = (probe.coords[0][0], probe.coords[0][1])
    clearance = best_r - 0.5 * tool.diameter
    if clearance < MIN_HELIX_RADIUS:
        raise InfeasibleError(
            f"no plunge room: inscribed radius {best_r:.3f} leaves {max(clearance, 0):.3f} mm "
            f"of helix clearance for a {tool.diameter} mm tool"
        )
    r_h = min(clearance, 0.45 * tool.diameter)
    pitch = {"helical": 0.10, "ramp": 0.05}.get(tool.plunge, None)
    if pitch is None:  # axial plunge: straight down in place
        mv = Move(LINE, center, center, intent=ENTRY)
        return Toolpath([mv], tool)
    pitch *= tool.diameter
    turns = max(1, math.ceil((depth or pitch) / pitch))
    # finish the last revolution facing the first cut move
    if target is not None:
        aim = math.atan2(target.start[1] - center[1], target.start[0] - center[0])
    else:
        aim = 0.0
    anchor = (center[0] + r_h * math.cos(aim), center[1] + r_h * math.sin(aim))
    moves = [Move(ARC_CCW, anchor, anchor, center=center, intent=ENTRY) for _ in range(turns)]
    if target is not None and _dist(anchor, target.start) > SNAP_EPS:
        moves.append(Move(LINE, anchor, target.start, intent=ENTRY))
    return Toolpath(moves, tool)


def _rotate(v: Point2, angle: float) -> Point2:
    c, s = math.cos(angle), math.sin(angle)
    return (c * v[0] - s * v[1], s * v[0] + c * v[1])


def discretize_arcs(path: Toolpath, chord_tol: float) -> Toolpath:
    """Replace every arc by the minimal chord chain with sagitta <= chord_tol."""
    if chord_tol <= 0:
        raise ValidationError("chord tolerance must be > 0")
    out: list[Move] = []
    for mv in path.moves:
        if mv.kind == LINE:
            out.append(mv)
            continue
        r = mv.radius
        sweep = mv.sweep
        if r < SNAP_EPS or sweep < 1e-12:
            out.append(Move(LINE, mv.start, mv.end, intent=mv.intent))
            continue
        if chord_tol >= r:
            theta_max = math.pi
        else:
            theta_max = min(math.pi, 2.0 * math.acos(1.0 - chord_tol / r))
        n = max(1, math.ceil(sweep / theta_max))
        sign = 1.0 if mv.kind == ARC_CCW else -1.0
        a0 = math.atan2(mv.start[1] - mv.center[1], mv.start[0] - mv.center[0])
        pts = [mv.start]
        for k in range(1, n):
            a = a0 + sign * sweep * k / n
            pts.append((mv.center[0] + r * math.cos(a), mv.center[1] + r * math.sin(a)))
        pts.append(mv.end)
        for a, b in zip(pts, pts[1:]):
            out.append(Move(LINE, a, b, intent=mv.intent))
    return replace(path, moves=out)


def path_length(path: Toolpath) -> PathLengths:
    """Exact total and cut lengths (arc length = radius x sweep)."""
    total = cut = 0.0
    for mv in path.moves:
        seg = mv.length
        total += seg
        if mv.intent == CUT:
            cut += seg
    return PathLengths(total, cut)


def segment_histogram(path: Toolpath, bin_edges: list[float]) -> list[int]:
    """Counts of linear-move lengths: [<e0, [e0,e1), ..., >=ek]; arcs are ignored."""
    edges = sorted(bin_edges)
    counts = [0] * (len(edges) + 1)
    for mv in path.moves:
        if mv.kind != LINE:
            continue
        seg = mv.length
        if seg <= SNAP_EPS:
            continue
        counts[bisect_right(edges, seg)] += 1
    return counts


def concat_paths(prefix: Toolpath, body: Toolpath) -> Toolpath:
    """Join two paths, bridging any gap with an entry-intent line."""
    if not prefix.moves:
        return replace(body, flags=list(dict.fromkeys(prefix.flags + body.flags)))
    moves = list(prefix.moves)
    if body.moves:
        gap_from = moves[-1].end
        gap_to = body.moves[0].start
        if _dist(gap_from, gap_to) > SNAP_EPS:
            moves.append(Move(LINE, gap_from, gap_to, intent=ENTRY))
        moves.extend(body.moves)
    return Toolpath(moves, body.tool, feed=body.feed,
                    flags=list(dict.fromkeys(prefix.flags + body.flags)))


def build_strategy_path(zone: Region, tool: Tool, params: StrategyParams,
                        depth: float | None = None) -> Toolpath:
    """Full pipeline for one strategy: mode path, corner rounding, link style,
    entry prefix, optional arc discretization."""
    if params.mode == SPIRAL:
        body = spiral_path(zone, tool, params)
    elif params.mode == ZIGZAG:
        body = zigzag_path(zone, tool, params)
    else:
        raise ValidationError(f"unknown mode {params.mode!r}")
    if params.corner_radius > 0:
        body = cornerize(body, params.corner_radius)
    body = hsm_links(body, params.links, _resolve_stepover(tool, params), zone=zone)
    prefix = _entry_prefix(zone, params.entry, tool, params, depth, body)
    full = concat_paths(prefix, body)
    if params.chord_tol is not None and params.chord_tol > 0:
        full = discretize_arcs(full, params.chord_tol)
    return full


def check_c0(path: Toolpath, eps: float = 1e-6) -> bool:
    """Every move starts where the previous one ends (within snap epsilon)."""
    for a, b in zip(path.moves, path.moves[1:]):
        if _dist(a.end, b.start) > eps:
            return False
    return True


def params_to_json(params: StrategyParams) -> dict:
    return {
        "mode": params.mode,
        "stepover": params.stepover,
        "zigzag_direction": params.zigzag_direction,
        "links": params.links,
        "corner_radius": params.corner_radius,
        "entry": params.entry,
        "chord_tol": params.chord_tol,
    }


def params_from_json(data: dict) -> StrategyParams:
    params = StrategyParams(
        mode=data.get("mode", SPIRAL),
        stepover=data.get("stepover"),
        zigzag_direction=data.get("zigzag_direction"),
        links=data.get("links", CLASSIC),
        corner_radius=float(data.get("corner_radius", 0.0)),
        entry=data.get("entry", SPIRAL_PLUNGE),
        chord_tol=data.get("chord_tol"),
    )
    if params.mode not in (SPIRAL, ZIGZAG):
        raise ValidationError(f"unknown mode {params.mode!r}")
    if params.links not in (CLASSIC, HSM):
        raise ValidationError(f"unknown link style {params.links!r}")
    if params.entry not in (TANGENTIAL_FLANK, SPIRAL_PLUNGE):
        raise ValidationError(f"unknown entry {params.entry!r}")
    return params


def toolpath_to_json(path: Toolpath) -> dict:
    from .tools import tool_to_json

    moves = []
    for mv in path.moves:
        entry = {
            "kind": mv.kind,
            "start": [mv.start[0], mv.start[1]],
            "end": [mv.end[0], mv.end[1]],
            "intent": mv.intent,
        }
        if mv.center is not None:
            entry["center"] = [mv.center[0], mv.center[1]]
        moves.append(entry)
    return {
        "schema": "pocketforge/1",
        "tool": tool_to_json(path.tool),
        "feed_mm_s": path.feed,
        "flags": list(path.flags),
        "moves": moves,
    }


def toolpath_from_json(data: dict) -> Toolpath:
    from .tools import tool_from_json

    if "moves" not in data or "tool" not in data:
        raise ValidationError('toolpath JSON needs "tool" and "moves"')
    moves = []
    for i, entry in enumerate(data["moves"]):
        try:
            kind = entry["kind"]
            if kind not in (LINE, ARC_CW, ARC_CCW):
                raise ValidationError(f"move {i}: unknown kind {kind!r}")
            center = entry.get("center")
            mv = Move(
                kind,
                (float(entry["start"][0]), float(entry["start"][1])),
                (float(entry["end"][0]), float(entry["end"][1])),
                center=(float(center[0]), float(center[1])) if center else None,
                intent=entry.get("intent", CUT),
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise ValidationError(f"move {i}: malformed ({exc})") from exc
        if mv.kind != LINE and mv.center is None:
            raise ValidationError(f"move {i}: arc without center")
        if mv.intent not in INTENTS:
            raise ValidationError(f"move {i}: unknown intent {mv.intent!r}")
        moves.append(mv)
    feed = data.get("feed_mm_s")
    return Toolpath(
        moves,
        tool_from_json(data["tool"]),
        feed=float(feed) if feed is not None else None,
        flags=list(data.get("flags", [])),
    )


def to_gcode(path: Toolpath, feed: float | None = None) -> str:
    """Minimal G-code subset: G1 X Y F and G2/G3 X Y I J, fixed 4 decimals, mm.

    F is emitted in mm/s (all pocketforge files use mm and seconds).
    """
    f = feed if feed is not None else path.feed
    lines = ["G21", "G90"]
    if not path.moves:
        return "\n".join(lines) + "\n"
    first = path.moves[0].start
    head = f"G1 X{first[0]:.4f} Y{first[1]:.4f}"
    if f is not None:
        head += f" F{f:.4f}"
    lines.append(head)
    for mv in path.moves:
        if mv.kind == LINE:
            lines.append(f"G1 X{mv.end[0]:.4f} Y{mv.end[1]:.4f}")
        else:
            code = "G2" if mv.kind == ARC_CW else "G3"
            i = mv.center[0] - mv.start[0]
            j = mv.center[1] - mv.start[1]
            lines.append(f"{code} X{mv.end[0]:.4f} Y{mv.end[1]:.4f} I{i:.4f} J{j:.4f}")
    return "\n".join(lines) + "\n"
