import math
import random

import pytest

from pocketforge.errors import InfeasibleError, ValidationError
from pocketforge.geometry import PolygonWithHoles, Region, box_region, opening
from pocketforge.tools import Tool
from pocketforge.toolpath import (
    Move,
    StrategyParams,
    Toolpath,
    build_strategy_path,
    check_c0,
    concat_paths,
    cornerize,
    discretize_arcs,
    entry_path,
    hsm_links,
    path_length,
    segment_histogram,
    spiral_path,
    to_gcode,
    toolpath_from_json,
    toolpath_to_json,
    zigzag_path,
)

import _oracles as oracles

TOOL = Tool(10.0, 2, 166.67)

# frozen from the trigonometric closed form: a right-angle corner rounded at
# r=5 swaps 2*5 of legs for a quarter arc of length (pi/2)*5
CORNER_SAVING = 10.0 - 0.5 * math.pi * 5.0  # 2.1460...


def disk_region(radius=20.0, n=256):
    pts = [
        (radius * math.cos(2 * math.pi * k / n), radius * math.sin(2 * math.pi * k / n))
        for k in range(n)
    ]
    return Region([PolygonWithHoles(pts)])


def cut_runs(path):
    runs = []
    prev = None
    for mv in path.moves:
        if mv.intent == "cut":
            if prev != "cut":
                runs.append([])
            runs[-1].append(mv)
        prev = mv.intent
    return runs


class TestSpiral:
    def test_disk_ring_count_and_radii(self):
        path = spiral_path(disk_region(20.0), TOOL, StrategyParams(stepover=5))
        runs = cut_runs(path)
        assert len(runs) == 4  # ceil((20-5)/5)+1
        radii = sorted(
            sum(math.hypot(*mv.end) for mv in run) / len(run) for run in runs
        )
        assert radii[0] == pytest.approx(0.0, abs=0.5)
        assert radii[1] == pytest.approx(5.0, abs=0.2)
        assert radii[2] == pytest.approx(10.0, abs=0.2)
        assert radii[3] == pytest.approx(15.0, abs=0.2)
        assert check_c0(path)

    def test_boundary_ring_is_last(self):
        path = spiral_path(disk_region(20.0), TOOL, StrategyParams(stepover=5))
        last = cut_runs(path)[-1]
        mean_r = sum(math.hypot(*mv.end) for mv in last) / len(last)
        assert mean_r == pytest.approx(15.0, abs=0.2)

    def test_empty_zone(self):
        path = spiral_path(Region(), TOOL, StrategyParams(stepover=5))
        assert path.moves == []

    def test_square_zone_length_matches_contour_oracle(self):
        zone = opening(box_region(0, 0, 20, 20), 10.0)
        path = spiral_path(zone, TOOL, StrategyParams(stepover=5))
        expected = oracles.contour_length_oracle(zone, insets=[5.0])
        assert path_length(path).cut == pytest.approx(expected, rel=0.05)

    def test_stepover_larger_than_tool_rejected(self):
        with pytest.raises(ValidationError, match="stepover"):
            spiral_path(disk_region(), TOOL, StrategyParams(stepover=11.0))

    def test_coverage_on_opened_square(self):
        zone = opening(box_region(0, 0, 40, 40), 10.0)
        path = spiral_path(zone, TOOL, StrategyParams(stepover=5))
        cuts = [mv for mv in path.moves if mv.intent == "cut"]
        covered, overflow = oracles.sweep_coverage(zone, cuts, 5.0)
        assert covered >= 0.99
        assert overflow == pytest.approx(0.0, abs=1.0)

    def test_tool_width_slot_gets_medial_pass(self):
        # corridor exactly as wide as the tool: covered by a down-and-back
        # midline cut, not silently dropped
        from pocketforge.geometry import region_union

        dumbbell = region_union(
            region_union(box_region(0, 0, 40, 40), box_region(70, 0, 110, 40)),
            box_region(40, 15, 70, 25),
        )
        zone = opening(dumbbell, 10.0)
        path = spiral_path(zone, TOOL, StrategyParams(stepover=5))
        cuts = [mv for mv in path.moves if mv.intent == "cut"]
        covered, _ = oracles.sweep_coverage(zone, cuts, 5.0)
        assert covered >= 0.99

    def test_dumbbell_two_families(self):
        # two 40x40 lobes joined by a 10-wide channel; a phi-16 tool reaches
        # only the lobes, so rings come in two families
        from pocketforge.geometry import region_union

        dumbbell = region_union(
            region_union(box_region(0, 0, 40, 40), box_region(70, 0, 110, 40)),
            box_region(40, 15, 70, 25),
        )
        zone = opening(dumbbell, 16.0)
        tool = Tool(16.0, 2, 100.0)
        path = spiral_path(zone, tool, StrategyParams(stepover=8))
        assert check_c0(path)
        cuts = [mv for mv in path.moves if mv.intent == "cut"]
        covered, _ = oracles.sweep_coverage(zone, cuts, 8.0)
        assert covered >= 0.99


class TestZigzag:
    def test_rectangle_pass_count(self):
        path = zigzag_path(
            box_region(0, 0, 100, 50), TOOL, StrategyParams(mode="zigzag", stepover=5, zigzag_direction=0.0)
        )
        long_rows = {
            round(mv.start[1], 6)
            for mv in path.moves
            if mv.intent == "cut" and abs(mv.start[1] - mv.end[1]) < 1e-9 and mv.length > 10
        }
        assert len(long_rows) == 9  # floor(40/5)+1 within the 90x40 band

    def test_closing_contour_present(self):
        path = zigzag_path(
            box_region(0, 0, 100, 50), TOOL, StrategyParams(mode="zigzag", stepover=5, zigzag_direction=0.0)
        )
        cut = path_length(path).cut
        assert cut > 9 * 90 + 0.9 * 260  # passes + band perimeter

    def test_thin_zone_single_medial_pass(self):
        path = zigzag_path(
            box_region(0, 0, 50, 6), TOOL, StrategyParams(mode="zigzag", stepover=5, zigzag_direction=0.0)
        )
        cuts = [mv for mv in path.moves if mv.intent == "cut"]
        assert len(cuts) == 1
        assert cuts[0].start[1] == pytest.approx(3.0)
        assert cuts[0].length == pytest.approx(50.0, abs=2.01)

    def test_direction_pi_same_cut_length(self):
        a = zigzag_path(box_region(0, 0, 100, 50), TOOL, StrategyParams(mode="zigzag", stepover=5, zigzag_direction=0.0))
        b = zigzag_path(box_region(0, 0, 100, 50), TOOL, StrategyParams(mode="zigzag", stepover=5, zigzag_direction=math.pi))
        assert path_length(a).cut == pytest.approx(path_length(b).cut, rel=1e-6)

    def test_coverage(self):
        zone = opening(box_region(0, 0, 60, 35), 10.0)
        path = zigzag_path(zone, TOOL, StrategyParams(mode="zigzag", stepover=5, zigzag_direction=0.0))
        cuts = [mv for mv in path.moves if mv.intent == "cut"]
        covered, overflow = oracles.sweep_coverage(zone, cuts, 5.0)
        assert covered >= 0.99
        assert overflow == pytest.approx(0.0, abs=1.0)


class TestCornerize:
    def right_angle(self):
        moves = [
            Move("line", (0, 0), (20, 0), intent="cut"),
            Move("line", (20, 0), (20, 20), intent="cut"),
        ]
        return Toolpath(moves, TOOL)

    def test_right_angle_closed_form(self):
        raw = self.right_angle()
        out = cornerize(raw, 5.0)
        assert check_c0(out)
        kinds = [mv.kind for mv in out.moves]
        assert kinds == ["line", "arc_ccw", "line"]
        saved = path_length(raw).total - path_length(out).total
        assert saved == pytest.approx(CORNER_SAVING, abs=1e-9)
        arc = out.moves[1]
        assert arc.radius == pytest.approx(5.0)
        assert arc.sweep == pytest.approx(math.pi / 2)
        # tangent continuity at both junctions
        assert arc.tangent(False) == pytest.approx(out.moves[0].tangent(True))
        assert arc.tangent(True) == pytest.approx(out.moves[2].tangent(False))

    def test_zero_radius_identity(self):
        raw = self.right_angle()
        out = cornerize(raw, 0.0)
        assert [(-m.length + n.length) for m, n in zip(raw.moves, out.moves)] == [0.0, 0.0]

    def test_collinear_untouched(self):
        moves = [
            Move("line", (0, 0), (10, 0), intent="cut"),
            Move("line", (10, 0), (25, 0), intent="cut"),
        ]
        out = cornerize(Toolpath(moves, TOOL), 5.0)
        assert [mv.kind for mv in out.moves] == ["line", "line"]

    def test_radius_clipped_to_short_legs(self):
        moves = [
            Move("line", (0, 0), (4, 0), intent="cut"),
            Move("line", (4, 0), (4, 4), intent="cut"),
        ]
        out = cornerize(Toolpath(moves, TOOL), 50.0)
        arc = [mv for mv in out.moves if mv.kind != "line"][0]
        assert arc.radius == pytest.approx(2.0)  # half the 4-long legs

    def test_never_lengthens(self):
        rng = random.Random(5)
        for _ in range(20):
            pts = [(0.0, 0.0)]
            for _ in range(rng.randint(2, 8)):
                x, y = pts[-1]
                pts.append((x + rng.uniform(-15, 15), y + rng.uniform(-15, 15)))
            moves = [
                Move("line", a, b, intent="cut")
                for a, b in zip(pts, pts[1:])
                if math.hypot(b[0] - a[0], b[1] - a[1]) > 1e-6
            ]
            raw = Toolpath(moves, TOOL)
            out = cornerize(raw, rng.uniform(0.1, 8.0))
            assert check_c0(out)
            assert path_length(out).total <= path_length(raw).total + 1e-9

    def test_links_not_rounded(self):
        moves = [
            Move("line", (0, 0), (20, 0), intent="cut"),
            Move("line", (20, 0), (20, 5), intent="link"),
            Move("line", (20, 5), (0, 5), intent="cut"),
        ]
        out = cornerize(Toolpath(moves, TOOL), 2.0)
        assert [mv.kind for mv in out.moves] == ["line", "line", "line"]


class TestHsmLinks:
    def two_passes(self):
        moves = [
            Move("line", (0, 0), (30, 0), intent="cut"),
            Move("line", (30, 0), (30, 5), intent="link"),
            Move("line", (30, 5), (0, 5), intent="cut"),
        ]
        return Toolpath(moves, TOOL)

    def test_classic_straight(self):
        out = hsm_links(self.two_passes(), "classic", 5.0)
        assert out.moves[1].kind == "line"
        assert out.moves[1].length == pytest.approx(5.0)

    def test_hsm_semicircle_closed_form(self):
        out = hsm_links(self.two_passes(), "hsm", 5.0)
        link = out.moves[1]
        assert link.kind in ("arc_cw", "arc_ccw")
        assert link.length == pytest.approx(math.pi * 2.5, abs=1e-9)
        assert check_c0(out)
        # tangent to the incoming pass
        assert link.tangent(False) == pytest.approx(out.moves[0].tangent(True))

    def test_single_pass_unchanged(self):
        path = Toolpath([Move("line", (0, 0), (30, 0), intent="cut")], TOOL)
        out = hsm_links(path, "hsm", 5.0)
        assert [mv.kind for mv in out.moves] == ["line"]

    def test_never_shortens(self):
        raw = self.two_passes()
        out = hsm_links(raw, "hsm", 5.0)
        assert path_length(out).total >= path_length(raw).total - 1e-9

    def test_blend_escaping_zone_falls_back(self):
        # zone barely wraps the passes: the outward semicircle apex (2.5 mm out)
        # exceeds the tool radius allowance for a 2 mm tool
        zone = box_region(0, -1, 31, 6)
        small_tool = Tool(2.0, 2, 100.0)
        path = Toolpath(
            [
                Move("line", (0, 0), (30, 0), intent="cut"),
                Move("line", (30, 0), (30, 5), intent="link"),
                Move("line", (30, 5), (0, 5), intent="cut"),
            ],
            small_tool,
        )
        out = hsm_links(path, "hsm", 5.0, zone=zone)
        assert out.moves[1].kind == "line"
        assert "hsm_link_fallback" in out.flags

    def test_long_jump_links_stay_classic(self):
        moves = [
            Move("line", (0, 0), (30, 0), intent="cut"),
            Move("line", (30, 0), (30, 40), intent="link"),
            Move("line", (30, 40), (0, 40), intent="cut"),
        ]
        out = hsm_links(Toolpath(moves, TOOL), "hsm", 5.0)
        assert out.moves[1].kind == "line"


class TestEntry:
    def test_open_pocket_tangential_quarter_circle(self):
        zone = opening(box_region(0, 0, 100, 50), 10.0)
        body = spiral_path(zone, TOOL, StrategyParams(stepover=5))
        from pocketforge.pocket import PocketClass

        pclass = PocketClass("open", "flat", "perpendicular", False, False)
        prefix = entry_path(zone, pclass, TOOL, StrategyParams(), path=body)
        assert len(prefix.moves) == 1
        arc = prefix.moves[0]
        assert arc.intent == "entry"
        assert arc.radius == pytest.approx(5.0)  # tool radius
        assert arc.sweep == pytest.approx(math.pi / 2)
        first_cut = next(mv for mv in body.moves if mv.intent == "cut" and mv.length > 0)
        assert arc.end == pytest.approx(first_cut.start)
        assert arc.tangent(True) == pytest.approx(first_cut.tangent(False), abs=1e-9)

    def test_closed_pocket_helix_at_inscribed_point(self):
        zone = opening(box_region(0, 0, 20, 20), 10.0)
        body = spiral_path(zone, TOOL, StrategyParams(stepover=5))
        from pocketforge.pocket import PocketClass

        pclass = PocketClass("closed", "flat", "perpendicular", False, False)
        prefix = entry_path(zone, pclass, TOOL, StrategyParams(), depth=5.0, path=body)
        arcs = [mv for mv in prefix.moves if mv.kind != "line"]
        assert arcs, "helix should contain full-circle arcs"
        cx, cy = arcs[0].center
        assert (cx, cy) == pytest.approx((10.0, 10.0), abs=0.2)
        assert arcs[0].radius <= 5.0 + 1e-9
        assert arcs[0].radius > 0
        turns = len(arcs)
        assert turns == math.ceil(5.0 / (0.1 * TOOL.diameter))

    def test_no_plunge_room(self):
        zone = disk_region(5.0, n=128)  # Dx == tool diameter
        from pocketforge.pocket import PocketClass

        pclass = PocketClass("closed", "flat", "perpendicular", False, False)
        with pytest.raises(InfeasibleError, match="no plunge room"):
            entry_path(zone, pclass, TOOL, StrategyParams(), depth=5.0)


class TestDiscretize:
    def quarter_arc(self, r=5.0):
        return Toolpath(
            [Move("arc_ccw", (r, 0), (0, r), center=(0, 0), intent="cut")], TOOL
        )

    def test_quarter_arc_13_segments(self):
        out = discretize_arcs(self.quarter_arc(5.0), 0.01)
        assert len(out.moves) == 13
        assert all(mv.kind == "line" for mv in out.moves)
        # endpoints exact
        assert out.moves[0].start == (5.0, 0.0)
        assert out.moves[-1].end == (0.0, 5.0)
        # sagitta bound: every chord midpoint within chord_tol of the arc
        for mv in out.moves:
            mx = 0.5 * (mv.start[0] + mv.end[0])
            my = 0.5 * (mv.start[1] + mv.end[1])
            assert 5.0 - math.hypot(mx, my) <= 0.01 + 1e-12
        # total length within n * chord_tol of the true arc
        assert abs(path_length(out).total - 0.5 * math.pi * 5.0) <= 13 * 0.01

    def test_line_only_path_identity(self):
        path = Toolpath([Move("line", (0, 0), (10, 0), intent="cut")], TOOL)
        out = discretize_arcs(path, 0.01)
        assert out.moves[0] == path.moves[0]

    def test_full_circle_min_two_chords(self):
        circle = Toolpath(
            [Move("arc_ccw", (1, 0), (1, 0), center=(0, 0), intent="cut")], TOOL
        )
        out = discretize_arcs(circle, 1.0)
        assert len(out.moves) == 2

    def test_bad_tolerance(self):
        with pytest.raises(ValidationError):
            discretize_arcs(self.quarter_arc(), 0.0)


class TestLengthsAndHistogram:
    def test_three_segments(self):
        path = Toolpath(
            [Move("line", (0, 0), (10, 0), intent="cut") for _ in range(1)]
            + [Move("line", (10, 0), (20, 0), intent="cut"), Move("line", (20, 0), (30, 0), intent="cut")],
            TOOL,
        )
        assert path_length(path).total == pytest.approx(30.0)

    def test_cornerized_right_angle_shorter(self):
        raw = Toolpath(
            [
                Move("line", (0, 0), (20, 0), intent="cut"),
                Move("line", (20, 0), (20, 20), intent="cut"),
            ],
            TOOL,
        )
        out = cornerize(raw, 5.0)
        assert path_length(raw).total - path_length(out).total == pytest.approx(
            CORNER_SAVING, abs=1e-9
        )

    def test_discretized_quarter_arc_in_one_bin(self):
        arc = Toolpath(
            [Move("arc_ccw", (5, 0), (0, 5), center=(0, 0), intent="cut")], TOOL
        )
        out = discretize_arcs(arc, 0.01)
        counts = segment_histogram(out, [0.5, 1.0, 2.0])
        assert counts == [0, 13, 0, 0]


class TestComposition:
    def test_build_strategy_path_c0_all_variants(self):
        zone = opening(box_region(0, 0, 60, 35), 10.0)
        for mode in ("spiral", "zigzag"):
            for links in ("classic", "hsm"):
                for r in (0.0, 3.0):
                    for tol in (None, 0.05):
                        params = StrategyParams(
                            mode=mode, stepover=5, links=links, corner_radius=r,
                            entry="spiral_plunge", chord_tol=tol,
                        )
                        path = build_strategy_path(zone, TOOL, params, depth=5.0)
                        assert check_c0(path), (mode, links, r, tol)
                        assert path.moves[0].intent == "entry"

    def test_concat_bridges_gap(self):
        a = Toolpath([Move("line", (0, 0), (1, 0), intent="entry")], TOOL)
        b = Toolpath([Move("line", (5, 5), (6, 5), intent="cut")], TOOL)
        joined = concat_paths(a, b)
        assert check_c0(joined)
        assert joined.moves[1].intent == "entry"


class TestSerialization:
    def test_json_round_trip(self):
        zone = opening(box_region(0, 0, 30, 30), 10.0)
        path = build_strategy_path(zone, TOOL, StrategyParams(stepover=5), depth=4.0)
        path.feed = 166.67
        data = toolpath_to_json(path)
        back = toolpath_from_json(data)
        assert toolpath_to_json(back) == data

    def test_gcode_format(self):
        path = Toolpath(
            [
                Move("line", (0, 0), (10, 0), intent="cut"),
                Move("arc_cw", (10, 0), (10, 10), center=(10, 5), intent="cut"),
            ],
            TOOL,
            feed=166.67,
        )
        text = to_gcode(path)
        lines = text.strip().splitlines()
        assert lines[0] == "G21" and lines[1] == "G90"
        assert lines[2] == "G1 X0.0000 Y0.0000 F166.6700"
        assert lines[3] == "G1 X10.0000 Y0.0000"
        assert lines[4] == "G2 X10.0000 Y10.0000 I0.0000 J5.0000"

    def test_malformed_rejected(self):
        with pytest.raises(ValidationError):
            toolpath_from_json({"tool": {"diameter": 10, "vc_mm_s": 100}, "moves": [{"kind": "arc_cw", "start": [0, 0], "end": [1, 1]}]})
