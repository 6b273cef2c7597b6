import math
import random

import pytest

from pocketforge.errors import ValidationError
from pocketforge.geometry import (
    PolygonWithHoles,
    Region,
    box_region,
    max_inscribed_radius,
    offset_region,
    opening,
    region_bounds,
    region_difference,
    region_from_json,
    region_metrics,
    region_to_json,
)

import _oracles as oracles

# Closed forms frozen from the stated derivations:
# 10x10 square dilated by 5: 100 + 4*10*5 + pi*25
ROUNDED_SQUARE_AREA = 100.0 + 200.0 + math.pi * 25.0  # 378.5398...
# 20x20 square opened by d=10: 400 - (4 - pi)*25
OPENED_SQUARE_AREA = 400.0 - (4.0 - math.pi) * 25.0  # 378.5398...


def l_shape():
    # 20x20 minus the 10x10 top-right corner
    return Region([PolygonWithHoles([(0, 0), (20, 0), (20, 10), (10, 10), (10, 20), (0, 20)])])


def wide_l_shape():
    # 40x20 minus a 25x10 corner: limbs 15 and 10 wide
    return Region([PolygonWithHoles([(0, 0), (40, 0), (40, 10), (15, 10), (15, 20), (0, 20)])])


class TestOffset:
    def test_erosion_of_square_is_exact(self):
        eroded = offset_region(box_region(0, 0, 20, 20), -5.0)
        m = region_metrics(eroded)
        assert m.component_count == 1
        assert m.area == pytest.approx(100.0, abs=1e-9)

    def test_dilation_of_square_matches_closed_form_and_raster_oracle(self):
        r = box_region(0, 0, 10, 10)
        grown = offset_region(r, +5.0)
        area = region_metrics(grown).area
        assert area == pytest.approx(ROUNDED_SQUARE_AREA, abs=0.5)
        mask, _, _ = oracles.rasterize(grown, cell=0.05, pad=0.5)
        assert oracles.mask_area(mask, 0.05) == pytest.approx(area, abs=0.5)

    def test_erosion_past_inradius_is_empty(self):
        assert offset_region(box_region(0, 0, 20, 20), -11.0).is_empty

    def test_degenerate_loop_reports_part_index(self):
        bad = Region([PolygonWithHoles([(0, 0), (1, 0)])])
        with pytest.raises(ValidationError, match="part 0"):
            offset_region(bad, 1.0)

    def test_self_intersecting_loop_rejected(self):
        bowtie = Region([PolygonWithHoles([(0, 0), (10, 10), (10, 0), (0, 10)])])
        with pytest.raises(ValidationError, match="self-intersects"):
            offset_region(bowtie, 1.0)

    def test_zero_tolerance_rejected(self):
        with pytest.raises(ValidationError):
            offset_region(box_region(0, 0, 1, 1), 1.0, tol=0.0)


class TestOpening:
    def test_zero_diameter_is_identity(self):
        r = l_shape()
        out = opening(r, 0.0)
        assert region_metrics(out).area == pytest.approx(region_metrics(r).area, abs=1e-9)

    def test_square_opened_by_10(self):
        out = opening(box_region(0, 0, 20, 20), 10.0)
        assert region_metrics(out).area == pytest.approx(OPENED_SQUARE_AREA, abs=0.5)

    def test_l_shape_limbs_too_thin_for_disk_12(self):
        # Both limbs of this L are 10 wide and its biggest inscribed disk has
        # diameter ~11.7, so a 12 disk fits nowhere; the grid oracle agrees.
        out = opening(l_shape(), 12.0)
        assert out.is_empty
        grid, _, _ = oracles.grid_opening(l_shape(), 12.0)
        assert oracles.mask_area(grid, 0.05) < 0.5

    def test_wide_l_shape_keeps_only_the_wide_limb(self):
        zone = opening(wide_l_shape(), 12.0)
        m = region_metrics(zone)
        assert m.component_count == 1
        # the long 10-thick limb (x up to 40) is gone, only the 15-wide limb survives
        _, _, maxx, _ = region_bounds(zone)
        assert maxx < 40.0 - 20.0
        assert oracles.symmetric_difference_area(wide_l_shape(), 12.0) < 0.01 * region_metrics(wide_l_shape()).area


class TestInscribedRadius:
    def test_rectangle_half_short_side(self):
        assert max_inscribed_radius(box_region(0, 0, 20, 10)) == pytest.approx(5.0, abs=0.01)

    def test_square(self):
        assert max_inscribed_radius(box_region(0, 0, 20, 20)) == pytest.approx(10.0, abs=0.01)

    def test_64gon_circumscribing_radius_7(self):
        n = 64
        circum = 7.0 / math.cos(math.pi / n)
        pts = [
            (circum * math.cos(2 * math.pi * k / n), circum * math.sin(2 * math.pi * k / n))
            for k in range(n)
        ]
        gon = Region([PolygonWithHoles(pts)])
        got = max_inscribed_radius(gon, tol=0.05)
        assert got == pytest.approx(7.0, abs=0.05)
        assert got == pytest.approx(oracles.erosion_bisection_radius(gon, tol=0.02), abs=0.05)

    def test_empty_region_raises(self):
        with pytest.raises(ValidationError):
            max_inscribed_radius(Region())


class TestMetrics:
    def test_square(self):
        m = region_metrics(box_region(0, 0, 10, 10))
        assert (m.area, m.perimeter, m.component_count) == (100.0, 40.0, 1)

    def test_empty(self):
        m = region_metrics(Region())
        assert (m.area, m.perimeter, m.component_count) == (0.0, 0.0, 0)

    def test_two_disjoint_squares(self):
        r = Region(box_region(0, 0, 5, 5).parts + box_region(10, 0, 15, 5).parts)
        m = region_metrics(r)
        assert (m.area, m.perimeter, m.component_count) == (50.0, 40.0, 2)


class TestProperties:
    def test_offset_monotonicity(self):
        rng = random.Random(11)
        for _ in range(6):
            r = oracles.random_rectilinear_region(rng)
            perim = region_metrics(r).perimeter
            deltas = sorted(rng.uniform(-6.0, 6.0) for _ in range(4))
            regions = [offset_region(r, d) for d in deltas]
            for smaller, larger in zip(regions, regions[1:]):
                if smaller.is_empty:
                    continue
                leak = region_metrics(region_difference(smaller, larger)).area
                assert leak < 0.01 * perim

    def test_opening_anti_extensive_and_idempotent(self):
        rng = random.Random(12)
        for _ in range(6):
            r = oracles.random_rectilinear_region(rng)
            d = rng.uniform(2.0, 12.0)
            once = opening(r, d)
            leak = region_metrics(region_difference(once, r)).area
            assert leak < 0.01 * region_metrics(r).perimeter
            if once.is_empty:
                continue
            twice = opening(once, d)
            gap = region_metrics(region_difference(once, twice)).area
            gap += region_metrics(region_difference(twice, once)).area
            assert gap < 0.02 * region_metrics(once).perimeter

    def test_opening_monotone_in_diameter(self):
        rng = random.Random(13)
        for _ in range(6):
            r = oracles.random_rectilinear_region(rng)
            d1, d2 = sorted((rng.uniform(1.0, 10.0), rng.uniform(1.0, 10.0)))
            big, small = opening(r, d2), opening(r, d1)
            if big.is_empty:
                continue
            leak = region_metrics(region_difference(big, small)).area
            assert leak < 0.01 * region_metrics(r).perimeter

    def test_opening_matches_grid_morphology(self):
        rng = random.Random(14)
        for _ in range(6):
            r = oracles.random_rectilinear_region(rng)
            d = rng.uniform(3.0, 14.0)
            diff = oracles.symmetric_difference_area(r, d)
            assert diff < 0.01 * region_metrics(r).area


class TestJson:
    def test_round_trip(self):
        r = Region(
            [
                PolygonWithHoles(
                    [(0, 0), (30, 0), (30, 30), (0, 30)],
                    [[(10, 10), (10, 20), (20, 20), (20, 10)]],
                )
            ]
        )
        data = region_to_json(r)
        back = region_from_json(data)
        assert region_to_json(back) == data
        assert region_metrics(back).area == pytest.approx(800.0)

    def test_orientation_normalized(self):
        data = {"parts": [{"outer": [[0, 0], [0, 10], [10, 10], [10, 0]], "holes": []}]}
        back = region_from_json(data)
        assert region_metrics(back).area == pytest.approx(100.0)

    def test_malformed_rejected(self):
        with pytest.raises(ValidationError):
            region_from_json({"parts": [{"outer": [[0, 0], [1, "x"]]}]})
        with pytest.raises(ValidationError):
            region_from_json({})
