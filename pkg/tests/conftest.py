import random

import pytest

from pocketforge.geometry import Region, box_region, region_union
from pocketforge.tools import Tool


@pytest.fixture
def dumbbell() -> Region:
    """Two 40x40 lobes joined by a 10-wide, 30-long channel (Dx=40, D0=10)."""
    return region_union(
        region_union(box_region(0, 0, 40, 40), box_region(70, 0, 110, 40)),
        box_region(40, 15, 70, 25),
    )


@pytest.fixture
def catalog() -> list[Tool]:
    return [
        Tool(6.0, 2, 200.0),
        Tool(10.0, 2, 166.67),
        Tool(16.0, 3, 140.0),
        Tool(25.0, 3, 110.0),
        Tool(40.0, 4, 80.0),
    ]


def random_polyline_path(rng: random.Random, tool: Tool):
    """Seeded random line-move path for kinematic property corpora."""
    from pocketforge.toolpath import Move, Toolpath

    pts = [(0.0, 0.0)]
    for _ in range(rng.randint(5, 25)):
        x, y = pts[-1]
        pts.append((x + rng.uniform(-40, 40), y + rng.uniform(-40, 40)))
    moves = []
    for a, b in zip(pts, pts[1:]):
        if abs(b[0] - a[0]) + abs(b[1] - a[1]) > 1e-6:
            moves.append(Move("line", a, b, intent="cut"))
    return Toolpath(moves, tool)
