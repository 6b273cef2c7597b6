"""Strategy knowledge base: enumerate admissible strategies for a pocket class,
simulate each candidate, rank by machining time.

Time is the sole primary criterion; the short-segment ratio (share of linear
moves under the report cutoff) is attached as a secondary flag and tie-breaker.
Rules live in a JSON file so shop-floor overrides stay data, not code.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources

from .errors import InfeasibleError, PocketForgeError
from .geometry import Region, max_inscribed_radius
from .simulate import MachineParams, SimResult, result_to_json, simulate
from .tools import Tool
from .toolpath import (
    CLASSIC,
    HSM,
    LINE,
    SPIRAL,
    ZIGZAG,
    StrategyParams,
    build_strategy_path,
    params_to_json,
)

R_MIN_DEFAULT = 0.5  # mm, smallest rounding worth programming


@dataclass
class RankedStrategy:
    params: StrategyParams
    result: SimResult
    short_segment_ratio: float
    flags: list[str] = field(default_factory=list)


@dataclass
class StrategyReport:
    ranked: list[RankedStrategy]
    recommended: StrategyParams
    rationale: list[str]


def load_rules(path: str | None = None) -> dict:
    """Default packaged rules, optionally overlaid by a user rule file."""
    with resources.files("pocketforge").joinpath("advisor_rules.json").open() as fh:
        rules = json.load(fh)
    if path is not None:
        with open(path) as fh:
            rules.update(json.load(fh))
    return rules


def recommended_corner_radius(
    v_f: float,
    machine: MachineParams,
    local_clearance: float = math.inf,
    r_min: float = R_MIN_DEFAULT,
) -> float:
    """Largest useful rounding radius: the feed-sustaining V_f^2/a_max, floored at
    r_min, clipped to what fits locally."""
    if v_f <= 0 or r_min < 0:
        raise PocketForgeError("need positive feed and non-negative r_min")
    r_star = max(v_f * v_f / machine.a_max, r_min)
    return min(r_star, local_clearance)


def enumerate_strategies(
    pocket_class,
    tool: Tool,
    machine: MachineParams,
    v_f: float,
    chord_tol: float | None = None,
    rules: dict | None = None,
) -> list[StrategyParams]:
    """Cartesian product mode x links x corner radius {0, r*}; entry fixed by the
    pocket class (tangential flank for open/corner, spiral plunge for closed)."""
    rules = rules or load_rules()
    closure = getattr(pocket_class, "closure", pocket_class)
    entry = rules["entry_by_closure"].get(closure)
    if entry is None:
        raise PocketForgeError(f"no entry rule for closure {closure!r}")
    r_star = recommended_corner_radius(v_f, machine, r_min=rules.get("corner_radius_min_mm", R_MIN_DEFAULT))
    out = []
    for mode in (SPIRAL, ZIGZAG):
        for links in (CLASSIC, HSM):
            for radius in (0.0, r_star):
                out.append(
                    StrategyParams(
                        mode=mode,
                        stepover=0.5 * tool.diameter,
                        links=links,
                        corner_radius=radius,
                        entry=entry,
                        chord_tol=chord_tol,
                    )
                )
    return out


def short_segment_ratio(path, cutoff: float = 2.0) -> float:
    """Share of linear moves shorter than the cutoff."""
    lengths = [mv.length for mv in path.moves if mv.kind == LINE and mv.length > 1e-9]
    if not lengths:
        return 0.0
    return sum(1 for seg in lengths if seg < cutoff) / len(lengths)


def rank(
    zone: Region,
    candidates: list[StrategyParams],
    tool: Tool,
    machine: MachineParams,
    v_f: float,
    depth: float | None = None,
    rules: dict | None = None,
    workers: int | None = None,
) -> StrategyReport:
    """Generate and simulate every candidate on the zone, sort by time.

    Ties break on short-segment ratio, then enumeration order. A corner radius
    that does not fit the zone is clipped and flagged. Raises only if every
    candidate fails, with per-candidate causes.
    """
    if not candidates:
        raise PocketForgeError("no strategy candidates to rank")
    rules = rules or load_rules()
    cutoff = rules.get("short_segment_cutoff_mm", 2.0)
    clearance = max(max_inscribed_radius(zone) - 0.5 * tool.diameter, 0.0)
    feed_radius = v_f * v_f / machine.a_max

    def evaluate(indexed):
        idx, params = indexed
        flags = []
        if params.corner_radius > clearance:
            params = replace(params, corner_radius=clearance)
            if clearance < feed_radius:
                flags.append("feed not sustainable in corner")
        try:
            path = build_strategy_path(zone, tool, params, depth=depth)
            result = simulate(path, machine, v_f)
        except PocketForgeError as exc:
            return idx, None, f"{params.mode}/{params.links}/r={params.corner_radius:g}: {exc}"
        flags.extend(path.flags)
        ratio = short_segment_ratio(path, cutoff)
        return idx, RankedStrategy(params, result, ratio, flags), None

    if workers is None:
        workers = int(os.environ.get("POCKETFORGE_THREADS", "1"))
    items = list(enumerate(candidates))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(evaluate, items))
    else:
        outcomes = [evaluate(item) for item in items]

    entries = []
    failures = []
    for idx, ranked, failure in outcomes:
        if ranked is None:
            failures.append(failure)
        else:
            entries.append((idx, ranked))
    if not entries:
        raise InfeasibleError("every strategy candidate failed: " + "; ".join(failures))

    entries.sort(key=lambda item: (item[1].result.time, item[1].short_segment_ratio, item[0]))
    ranked = [r for _, r in entries]

    rationale = [
        "primary criterion: minimum simulated machining time",
        f"tie-break: short-segment ratio (< {cutoff:g} mm), then enumeration order",
        f"entry rule: {ranked[0].params.entry} (entry_by_closure)",
    ]
    rationale.extend(f"candidate failed: {f}" for f in failures)

    recommended = ranked[0].params
    for override in rules.get("hard_overrides", []):
        require = override.get("require", {})
        match = next(
            (
                r
                for r in ranked
                if all(getattr(r.params, k, None) == v for k, v in require.items())
            ),
            None,
        )
        if match is not None and match.params is not recommended:
            recommended = match.params
            rationale.append(f"hard override applied: {override.get('reason', require)}")
        elif match is None:
            rationale.append(f"hard override unsatisfiable, ignored: {override.get('reason', require)}")
    return StrategyReport(ranked, recommended, rationale)


def report_to_json(report: StrategyReport) -> dict:
    return {
        "schema": "pocketforge/1",
        "ranked": [
            {
                "params": params_to_json(r.params),
                "result": result_to_json(r.result),
                "short_segment_ratio": r.short_segment_ratio,
                "flags": list(r.flags),
            }
            for r in report.ranked
        ],
        "recommended": params_to_json(report.recommended),
        "rationale": list(report.rationale),
    }


def report_to_markdown(report: StrategyReport, title: str = "Strategy report") -> str:
    """Human-readable summary with a mode x link-style time matrix."""
    lines = [f"# {title}", ""]
    cells: dict[tuple[str, str], float] = {}
    for r in report.ranked:
        key = (r.params.mode, r.params.links)
        cells[key] = min(cells.get(key, math.inf), r.result.time)
    lines.append("| mode | classic links | hsm links |")
    lines.append("| --- | --- | --- |")
    for mode in (SPIRAL, ZIGZAG):
        row = [mode]
        for links in (CLASSIC, HSM):
            t = cells.get((mode, links))
            row.append(f"{t:.2f} s" if t is not None else "-")
        lines.append("| " + " | ".join(row) + " |")
    lines.append("")
    lines.append("## Ranking")
    lines.append("")
    lines.append("| # | mode | links | corner r (mm) | time (s) | cam time (s) | short-seg ratio | flags |")
    lines.append("| --- | --- | --- | --- | --- | --- | --- | --- |")
    for i, r in enumerate(report.ranked, 1):
        lines.append(
            f"| {i} | {r.params.mode} | {r.params.links} | {r.params.corner_radius:.2f} "
            f"| {r.result.time:.2f} | {r.result.cam_time:.2f} "
            f"| {r.short_segment_ratio:.2f} | {', '.join(r.flags) or '-'} |"
        )
    best = report.recommended
    lines.append("")
    lines.append(
        f"**Recommended:** {best.mode} with {best.links} links, "
        f"corner radius {best.corner_radius:.2f} mm, entry {best.entry}."
    )
    lines.append("")
    lines.append("## Rationale")
    lines.append("")
    lines.extend(f"- {r}" for r in report.rationale)
    lines.append("")
    return "\n".join(lines)
