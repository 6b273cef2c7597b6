"""Command-line surface: classify, decompose, pathgen, simulate, advise.

Each command reads JSON inputs, writes schema-versioned JSON (plus SVG/CSV/
markdown artifacts) into the output directory as <input-stem>.<command>.<ext>,
and prints the main JSON to stdout. Errors leave a machine-readable JSON object
on stderr: exit 1 validation, 2 infeasibility, 3 I/O.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
from pathlib import Path

from .advisor import enumerate_strategies, load_rules, rank, report_to_json, report_to_markdown
from .errors import InfeasibleError, PocketForgeError, ValidationError
from .geometry import Region, opening, region_metrics, region_to_json
from .pocket import (
    PocketClass,
    classify_pocket,
    mask_specific_entities,
    pocket_from_json,
    promote_negative_islands,
)
from .simulate import machine_from_json, result_to_json, simulate
from .svg import render_svg
from .toolpath import (
    build_strategy_path,
    params_from_json,
    to_gcode,
    toolpath_from_json,
    toolpath_to_json,
)
from .tools import (
    catalog_from_json,
    catalog_tool_at_most,
    diameter_bounds,
    dichotomy_decompose,
    tool_to_json,
)

SCHEMA = "pocketforge/1"
DEFAULT_FEED = "10 m/min"  # common HSM aluminium roughing feed

_FEED_RE = re.compile(r"^\s*([0-9.eE+-]+)\s*(mm/s|mm/min|m/min)\s*$")


def parse_feed(text: str) -> float:
    """Feed with an explicit unit (mm/s, mm/min, m/min) -> mm/s."""
    m = _FEED_RE.match(text)
    if not m:
        raise ValidationError(
            f"feed {text!r} needs an explicit unit: e.g. '166.67 mm/s', '600 mm/min', '10 m/min'"
        )
    value = float(m.group(1))
    unit = m.group(2)
    if unit == "mm/s":
        return value
    if unit == "mm/min":
        return value / 60.0
    return value * 1000.0 / 60.0


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise OSError(f"{path}: not valid JSON ({exc})") from exc


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / name
    target.write_text(text)
    return target


def _write_json(out_dir: Path, name: str, data) -> Path:
    return _write(out_dir, name, json.dumps(data, indent=2, sort_keys=True) + "\n")


def _machinable(pocket, catalog):
    """Shared preparation: promote negative islands, mask specific entities."""
    parent, promoted = promote_negative_islands(pocket)
    default_margin = min(t.diameter for t in catalog) / 2.0 if catalog else None
    machinable, reserved = mask_specific_entities(parent, default_margin=default_margin)
    return parent, promoted, machinable, reserved


def cmd_classify(args) -> int:
    pocket = pocket_from_json(_load_json(args.pocket))
    pclass = classify_pocket(pocket)
    data = {
        "schema": SCHEMA,
        "closure": pclass.closure,
        "floor": pclass.floor,
        "wall": pclass.wall,
        "has_islands": pclass.has_islands,
        "has_specific": pclass.has_specific,
    }
    stem = Path(args.pocket).stem
    _write_json(Path(args.out), f"{stem}.classify.json", data)
    print(json.dumps(data, indent=2, sort_keys=True))
    return 0


def cmd_decompose(args) -> int:
    pocket = pocket_from_json(_load_json(args.pocket))
    catalog = catalog_from_json(_load_json(args.tools))
    parent, promoted, machinable, reserved = _machinable(pocket, catalog)
    bounds = diameter_bounds(machinable)
    dec = dichotomy_decompose(
        machinable, parent.depth, bounds, catalog, threshold=args.threshold
    )
    data = {
        "schema": SCHEMA,
        "bounds": {"d0": bounds.d0, "dx": bounds.dx},
        "promoted_pockets": len(promoted),
        "reserved_area": region_metrics(reserved).area,
        "chosen": [
            {
                "tool": tool_to_json(tool),
                "zone": region_to_json(zone),
                "zone_area": region_metrics(zone).area,
            }
            for tool, zone in dec.chosen
        ],
        "steps": [
            {
                "diameter": s.diameter,
                "length": s.length,
                "time": s.time,
                "volume": s.volume,
                "mrr": s.mrr,
                "tool_diameter": s.tool.diameter,
            }
            for s in dec.steps
        ],
        "decisions": [
            {
                "interval": [d.lower, d.upper],
                "midpoint": d.midpoint,
                "mrr_lower": d.mrr_lower,
                "mrr_mid": d.mrr_mid,
                "ratio": d.ratio,
                "upper_kept": d.upper_kept,
            }
            for d in dec.decisions
        ],
        "residual_area": region_metrics(dec.residual).area,
    }
    stem = Path(args.pocket).stem
    out = Path(args.out)
    _write_json(out, f"{stem}.decompose.json", data)
    zones = [("pocket", Region([parent.boundary]))]
    zones += [
        (f"d{tool.diameter:g}", zone) for tool, zone in dec.chosen if not zone.is_empty
    ]
    _write(out, f"{stem}.decompose.svg", render_svg(zones=zones))
    print(json.dumps(data, indent=2, sort_keys=True))
    return 0


def _resolve_feed(args, fallback: float | None = None) -> float:
    if getattr(args, "feed", None):
        return parse_feed(args.feed)
    if fallback is not None:
        return fallback
    return parse_feed(DEFAULT_FEED)


def cmd_pathgen(args) -> int:
    pocket = pocket_from_json(_load_json(args.pocket))
    catalog = catalog_from_json(_load_json(args.tools))
    parent, _, machinable, _ = _machinable(pocket, catalog)
    pclass = classify_pocket(parent)

    strategy_data = _load_json(args.strategy) if args.strategy else {}
    rules = load_rules()
    if "entry" not in strategy_data:
        strategy_data["entry"] = rules["entry_by_closure"][pclass.closure]
    params = params_from_json(strategy_data)
    feed_text = strategy_data.get("feed")
    feed = _resolve_feed(args, parse_feed(feed_text) if feed_text else None)

    bounds = diameter_bounds(machinable)
    tool = catalog_tool_at_most(catalog, bounds.d0) or catalog_tool_at_most(
        catalog, bounds.dx
    )
    if tool is None:
        raise InfeasibleError(
            f"no insertable tool: smallest catalog diameter exceeds Dx = {bounds.dx:.3f} mm"
        )
    zone = opening(machinable, tool.diameter)
    path = build_strategy_path(zone, tool, params, depth=parent.depth)
    path.feed = feed

    data = toolpath_to_json(path)
    stem = Path(args.pocket).stem
    out = Path(args.out)
    _write_json(out, f"{stem}.pathgen.json", data)
    _write(out, f"{stem}.pathgen.svg", render_svg(zones=[("zone", zone)], paths=[path]))
    if args.gcode:
        _write(out, f"{stem}.pathgen.nc", to_gcode(path))
    print(json.dumps(data, indent=2, sort_keys=True))
    return 0


def cmd_simulate(args) -> int:
    path = toolpath_from_json(_load_json(args.toolpath))
    machine = machine_from_json(_load_json(args.machine))
    feed = _resolve_feed(args, path.feed)
    result = simulate(path, machine, feed)
    data = result_to_json(result)
    stem = Path(args.toolpath).stem
    out = Path(args.out)
    _write_json(out, f"{stem}.simulate.json", data)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{stem}.simulate.profile.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s_mm", "v_mm_s"])
        for s, v in result.profile:
            writer.writerow([f"{s:.4f}", f"{v:.4f}"])
    with open(out / f"{stem}.simulate.histogram.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin", "count"])
        edges = result.bin_edges
        labels = [f"<{edges[0]:g}"]
        labels += [f"{a:g}-{b:g}" for a, b in zip(edges, edges[1:])]
        labels += [f">={edges[-1]:g}"]
        for label, count in zip(labels, result.histogram):
            writer.writerow([label, count])
    print(json.dumps(data, indent=2, sort_keys=True))
    return 0


def cmd_advise(args) -> int:
    pocket = pocket_from_json(_load_json(args.pocket))
    catalog = catalog_from_json(_load_json(args.tools))
    machine = machine_from_json(_load_json(args.machine))
    feed = _resolve_feed(args)
    rules = load_rules(args.rules) if args.rules else load_rules()

    parent, promoted, machinable, _ = _machinable(pocket, catalog)
    pclass = classify_pocket(parent)
    bounds = diameter_bounds(machinable)
    dec = dichotomy_decompose(machinable, parent.depth, bounds, catalog)

    chord_tol = args.chord_tol
    sections = []
    reports = []
    for i, (tool, zone) in enumerate(dec.chosen):
        if zone.is_empty:
            continue
        # tools after the first enter through the zone the larger tool already
        # cleared, so their entries are tangential regardless of pocket closure
        zone_class = pclass if i == 0 else PocketClass(
            "open", pclass.floor, pclass.wall, pclass.has_islands, pclass.has_specific
        )
        candidates = enumerate_strategies(zone_class, tool, machine, feed,
                                          chord_tol=chord_tol, rules=rules)
        report = rank(zone, candidates, tool, machine, feed,
                      depth=parent.depth, rules=rules)
        reports.append(
            {
                "tool": tool_to_json(tool),
                "zone_area": region_metrics(zone).area,
                "report": report_to_json(report),
            }
        )
        sections.append(
            report_to_markdown(report, title=f"Tool {tool.diameter:g} mm")
        )
    data = {
        "schema": SCHEMA,
        "closure": pclass.closure,
        "feed_mm_s": feed,
        "promoted_pockets": len(promoted),
        "tools": reports,
    }
    stem = Path(args.pocket).stem
    out = Path(args.out)
    _write_json(out, f"{stem}.advise.json", data)
    _write(out, f"{stem}.advise.md", "\n".join(sections) if sections else "no machinable zones\n")
    print(json.dumps(data, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pocketforge",
        description="2.5D pocket machining decision support",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, tools=False, machine=False, feed=False):
        p.add_argument("--pocket", required=True, help="pocket JSON file")
        if tools:
            p.add_argument("--tools", required=True, help="tool catalog JSON file")
        if machine:
            p.add_argument("--machine", required=True, help="machine JSON file")
        if feed:
            p.add_argument("--feed", help="programmed feed with unit, e.g. '10 m/min'")
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("classify", help="classify a pocket feature")
    common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("decompose", help="tool-diameter zone decomposition")
    common(p, tools=True)
    p.add_argument("--threshold", type=float, default=0.05,
                   help="MRR gain ratio needed to keep a larger-diameter interval")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("pathgen", help="generate a toolpath for the capable tool")
    common(p, tools=True, feed=True)
    p.add_argument("--strategy", help="strategy JSON file")
    p.add_argument("--gcode", action="store_true", help="also write a G-code subset file")
    p.set_defaults(func=cmd_pathgen)

    p = sub.add_parser("simulate", help="simulate machining time for a toolpath")
    p.add_argument("--toolpath", required=True, help="toolpath JSON file")
    p.add_argument("--machine", required=True, help="machine JSON file")
    p.add_argument("--feed", help="programmed feed with unit (overrides the file)")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("advise", help="rank strategies per chosen tool")
    common(p, tools=True, machine=True, feed=True)
    p.add_argument("--chord-tol", type=float, default=None, dest="chord_tol",
                   help="discretize arcs at this chordal tolerance before simulating")
    p.add_argument("--rules", help="rule JSON overriding the packaged knowledge base")
    p.set_defaults(func=cmd_advise)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PocketForgeError as exc:
        kind = "infeasible" if exc.exit_code == 2 else "validation"
        print(
            json.dumps({"error": {"code": exc.exit_code, "kind": kind, "message": str(exc)}}),
            file=sys.stderr,
        )
        return exc.exit_code
    except OSError as exc:
        print(
            json.dumps({"error": {"code": 3, "kind": "io", "message": str(exc)}}),
            file=sys.stderr,
        )
        return 3


if __name__ == "__main__":
    sys.exit(main())
