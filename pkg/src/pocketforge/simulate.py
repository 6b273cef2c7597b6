"""Kinematically realistic machining-time estimation.

A three-phase look-ahead planner over the C0 path: per-move feed caps (programmed
feed, centripetal arc limit), junction caps (per-axis velocity-jump allowance plus
a stopping-distance window of `lookahead` blocks), then acceleration-limited
forward/backward passes. brisk = trapezoidal, soft = jerk-limited S-curve. The gap
between the resulting time and the naive cam_time = cut length / V_f is the whole
point: programmed feed is only reached on long blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ValidationError
from .toolpath import CUT, LINE, Move, Toolpath, segment_histogram

BRISK, SOFT = "brisk", "soft"
DEFAULT_BIN_EDGES = (0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0)
_MIN_BLOCK = 1e-9   # mm, shorter moves are markers, not motion
_V_EPS = 1e-12


@dataclass(frozen=True)
class MachineParams:
    a_max: float                  # mm/s^2, per-axis maximum acceleration
    jerk: float = 1e5             # mm/s^3, used in soft mode
    accel_mode: str = BRISK       # brisk | soft
    lookahead: int = 50           # blocks of forward visibility
    anticipation: bool = True     # False: exact stop at every junction
    corner_dv: float = 20.0       # mm/s, per-axis junction velocity jump allowance

    def __post_init__(self):
        if self.a_max <= 0:
            raise ValidationError("a_max must be > 0")
        if self.accel_mode not in (BRISK, SOFT):
            raise ValidationError(f"unknown accel mode {self.accel_mode!r}")
        if self.accel_mode == SOFT and self.jerk <= 0:
            raise ValidationError("soft mode needs jerk > 0")
        if self.lookahead < 1:
            raise ValidationError("lookahead must be >= 1")
        if self.corner_dv <= 0:
            raise ValidationError("corner_dv must be > 0")


@dataclass
class SimResult:
    time: float
    cam_time: float
    profile: list[tuple[float, float]]   # (arc length mm, speed mm/s)
    min_speed: float                     # slowest interior junction speed
    histogram: list[int] = field(default_factory=list)
    bin_edges: list[float] = field(default_factory=lambda: list(DEFAULT_BIN_EDGES))


def arc_feed_limit(r: float, v_f: float, a_max: float) -> float:
    """Centripetal feed cap on a circular block: min(V_f, sqrt(r * a_max))."""
    if r <= 0:
        raise ValidationError("arc radius must be > 0")
    return min(v_f, math.sqrt(r * a_max))


def corner_speed_limit(dir_in, dir_out, v: float, machine: MachineParams) -> float:
    """Largest junction speed keeping every axis' velocity jump within corner_dv."""
    jump = max(abs(dir_out[0] - dir_in[0]), abs(dir_out[1] - dir_in[1]))
    if jump < 1e-12:
        return v
    return min(v, machine.corner_dv / jump)


# ---------------------------------------------------------------------------
# ramp kinematics: one code path, brisk is jerk = infinity

def _ramp_time(dv: float, a: float, j: float) -> float:
    if dv <= 0:
        return 0.0
    if math.isinf(j) or dv >= a * a / j:
        return dv / a + (0.0 if math.isinf(j) else a / j)
    return 2.0 * math.sqrt(dv / j)


def _ramp_dist(v0: float, v1: float, a: float, j: float) -> float:
    # S-curve speed ramps are antisymmetric: mean speed is the endpoint average
    return 0.5 * (v0 + v1) * _ramp_time(abs(v1 - v0), a, j)


def _reach(v0: float, length: float, a: float, j: float) -> float:
    """Max speed reachable from v0 over `length`."""
    bound = math.sqrt(v0 * v0 + 2.0 * a * length)
    if math.isinf(j):
        return bound
    lo, hi = v0, bound
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _ramp_dist(v0, mid, a, j) <= length:
            lo = mid
        else:
            hi = mid
    return lo


def _stop_reach(window: float, a: float, j: float) -> float:
    """Max speed from which a full stop fits inside `window`."""
    return _reach(0.0, window, a, j)


def _peak(vs: float, ve: float, cap: float, length: float, a: float, j: float) -> float:
    base = max(vs, ve)
    if cap <= base:
        return base
    if math.isinf(j):
        vp = math.sqrt(max(base * base, (2.0 * a * length + vs * vs + ve * ve) / 2.0))
        return min(cap, vp)
    lo, hi = base, cap
    if _ramp_dist(vs, hi, a, j) + _ramp_dist(hi, ve, a, j) <= length:
        return hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _ramp_dist(vs, mid, a, j) + _ramp_dist(mid, ve, a, j) <= length:
            lo = mid
        else:
            hi = mid
    return lo


def _sample_ramp(v0: float, v1: float, a: float, j: float, n: int):
    """n+1 (distance, speed) samples along a speed ramp between v0 and v1."""
    dv = abs(v1 - v0)
    total_t = _ramp_time(dv, a, j)
    total_d = _ramp_dist(v0, v1, a, j)
    if dv <= 0 or total_t <= 0:
        return [(0.0, v0), (total_d, v1)]
    lo = min(v0, v1)

    def accel_state(t):
        # accelerating ramp from lo: jerk-up, constant-a, jerk-down
        if math.isinf(j):
            return lo + a * t, lo * t + 0.5 * a * t * t
        a_pk = min(a, math.sqrt(dv * j))
        t1 = a_pk / j
        t2 = max(0.0, dv / a_pk - a_pk / j)
        if t <= t1:
            return lo + 0.5 * j * t * t, lo * t + j * t**3 / 6.0
        v_a = lo + 0.5 * j * t1 * t1
        s_a = lo * t1 + j * t1**3 / 6.0
        if t <= t1 + t2:
            u = t - t1
            return v_a + a_pk * u, s_a + v_a * u + 0.5 * a_pk * u * u
        v_b = v_a + a_pk * t2
        s_b = s_a + v_a * t2 + 0.5 * a_pk * t2 * t2
        u = min(t - t1 - t2, t1)
        return (
            v_b + a_pk * u - 0.5 * j * u * u,
            s_b + v_b * u + 0.5 * a_pk * u * u - j * u**3 / 6.0,
        )

    hi = max(v0, v1)
    pts = []
    for k in range(n + 1):
        t = total_t * k / n
        v, s = accel_state(t)
        pts.append((min(s, total_d), min(v, hi)))
    if v1 >= v0:
        return pts
    # deceleration: time-reverse the accelerating ramp
    return [(total_d - s, v) for s, v in reversed(pts)]


# ---------------------------------------------------------------------------

def plan_profile(path: Toolpath, machine: MachineParams, v_f: float) -> SimResult:
    """Plan the look-ahead velocity profile and integrate machining time.

    Rest-to-rest: speed starts and ends at zero. Junction speeds respect the
    per-axis jump allowance and, with anticipation, the stopping-distance window
    of `lookahead` blocks; without anticipation every junction is an exact stop.
    """
    if v_f <= 0:
        raise ValidationError("programmed feed must be > 0")
    for a, b in zip(path.moves, path.moves[1:]):
        if math.hypot(b.start[0] - a.end[0], b.start[1] - a.end[1]) > 1e-6:
            raise ValidationError("non-contiguous path: move does not start at previous end")

    a_lim = machine.a_max
    jerk = math.inf if machine.accel_mode == BRISK else machine.jerk

    blocks = []
    for mv in path.moves:
        length = mv.length
        if length <= _MIN_BLOCK:
            continue
        cap = v_f if mv.kind == LINE else arc_feed_limit(mv.radius, v_f, a_lim)
        blocks.append((length, cap, mv.tangent(False), mv.tangent(True)))
    n = len(blocks)
    if n == 0:
        return SimResult(0.0, 0.0, [(0.0, 0.0)], 0.0)

    lengths = [b[0] for b in blocks]
    caps = [b[1] for b in blocks]
    suffix = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] + lengths[i]

    v = [0.0] * (n + 1)
    for i in range(1, n):
        base = min(caps[i - 1], caps[i])
        if not machine.anticipation:
            v[i] = 0.0
            continue
        limit = corner_speed_limit(blocks[i - 1][3], blocks[i][2], base, machine)
        window = suffix[i] - suffix[min(n, i + machine.lookahead)]
        limit = min(limit, _stop_reach(window, a_lim, jerk))
        v[i] = limit

    for i in range(n):  # forward: acceleration-limited entry speeds
        v[i + 1] = min(v[i + 1], _reach(v[i], lengths[i], a_lim, jerk))
    for i in range(n - 1, -1, -1):  # backward: deceleration feasibility
        v[i] = min(v[i], _reach(v[i + 1], lengths[i], a_lim, jerk))

    total_len = suffix[0]
    ds = max(1e-3, min(1.0, total_len / 200.0))
    time = 0.0
    profile: list[tuple[float, float]] = [(0.0, v[0])]
    s_base = 0.0
    for i in range(n):
        vs, ve, cap, length = v[i], v[i + 1], caps[i], lengths[i]
        vp = _peak(vs, ve, cap, length, a_lim, jerk)
        d_acc = _ramp_dist(vs, vp, a_lim, jerk)
        d_dec = _ramp_dist(vp, ve, a_lim, jerk)
        d_cruise = max(0.0, length - d_acc - d_dec)
        t_acc = _ramp_time(vp - vs, a_lim, jerk)
        t_dec = _ramp_time(vp - ve, a_lim, jerk)
        t_cruise = d_cruise / vp if vp > _V_EPS else 0.0
        time += t_acc + t_cruise + t_dec

        if d_acc > 0:
            k = max(2, math.ceil(d_acc / ds))
            for s, vv in _sample_ramp(vs, vp, a_lim, jerk, k)[1:]:
                profile.append((s_base + s, vv))
        if d_cruise > 0:
            k = max(1, math.ceil(d_cruise / ds))
            for m in range(1, k + 1):
                profile.append((s_base + d_acc + d_cruise * m / k, vp))
        if d_dec > 0:
            k = max(2, math.ceil(d_dec / ds))
            for s, vv in _sample_ramp(vp, ve, a_lim, jerk, k)[1:]:
                profile.append((s_base + d_acc + d_cruise + s, vv))
        s_base += length
        if not profile or profile[-1][0] < s_base - 1e-9:
            profile.append((s_base, ve))

    interior = v[1:n]
    min_speed = min(interior) if interior else _peak(
        v[0], v[1], caps[0], lengths[0], a_lim, jerk
    )
    return SimResult(time, 0.0, profile, min_speed)


def simulate(path: Toolpath, machine: MachineParams, v_f: float,
             bin_edges=DEFAULT_BIN_EDGES) -> SimResult:
    """plan_profile plus the CAM reference time and the segment-length histogram."""
    result = plan_profile(path, machine, v_f)
    cut = sum(mv.length for mv in path.moves if mv.intent == CUT)
    result.cam_time = cut / v_f
    result.bin_edges = list(bin_edges)
    result.histogram = segment_histogram(path, list(bin_edges))
    return result


def machine_to_json(machine: MachineParams) -> dict:
    return {
        "a_max": machine.a_max,
        "jerk": machine.jerk,
        "mode": machine.accel_mode,
        "lookahead": machine.lookahead,
        "anticipation": machine.anticipation,
        "corner_dv": machine.corner_dv,
    }


def machine_from_json(data: dict) -> MachineParams:
    if not isinstance(data, dict) or "a_max" not in data:
        raise ValidationError('machine JSON needs at least "a_max"')
    try:
        return MachineParams(
            a_max=float(data["a_max"]),
            jerk=float(data.get("jerk", 1e5)),
            accel_mode=data.get("mode", BRISK),
            lookahead=int(data.get("lookahead", 50)),
            anticipation=bool(data.get("anticipation", True)),
            corner_dv=float(data.get("corner_dv", 20.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed machine JSON: {exc}") from exc


def result_to_json(result: SimResult) -> dict:
    return {
        "schema": "pocketforge/1",
        "time_s": result.time,
        "cam_time_s": result.cam_time,
        "min_speed_mm_s": result.min_speed,
        "histogram": {
            "bin_edges_mm": result.bin_edges,
            "counts": result.histogram,
        },
        "profile_samples": len(result.profile),
    }
