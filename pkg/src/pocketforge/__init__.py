"""pocketforge: 2.5D pocket-machining decision support.

Classify pocket features, split them into tool-diameter zones by the
MRR-threshold dichotomy, generate contour-parallel and zig-zag HSM toolpaths,
and rank strategies by simulated machining time under a look-ahead NC model.
"""

from .advisor import (
    RankedStrategy,
    StrategyReport,
    enumerate_strategies,
    rank,
    recommended_corner_radius,
)
from .errors import InfeasibleError, PocketForgeError, ValidationError
from .geometry import (
    PolygonWithHoles,
    Region,
    RegionMetrics,
    max_inscribed_radius,
    offset_region,
    opening,
    region_from_json,
    region_metrics,
    region_to_json,
)
from .pocket import (
    Island,
    Pocket,
    PocketClass,
    SpecificEntity,
    classify_pocket,
    mask_specific_entities,
    pocket_from_json,
    pocket_to_json,
    promote_negative_islands,
)
from .simulate import (
    MachineParams,
    SimResult,
    arc_feed_limit,
    corner_speed_limit,
    machine_from_json,
    plan_profile,
    simulate,
)
from .toolpath import (
    Move,
    StrategyParams,
    Toolpath,
    build_strategy_path,
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
from .tools import (
    Decomposition,
    DiameterBounds,
    Tool,
    assign_zones,
    catalog_from_json,
    diameter_bounds,
    dichotomy_decompose,
    mrr,
    removal_time,
)

__version__ = "0.1.0"
