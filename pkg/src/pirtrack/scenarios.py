"""
Synthetic walks and the PIR signals they produce.

Trajectories are built from exact line and arc segments walked at constant
speed.  A walker is a disc of radius ``BodyModel.radius``; seen from a
sensor it covers an angular interval, and the DHF is the inverse-square
emission times the signed fraction of that interval falling in positive
minus negative zones.  Outputs are the DHF pushed through the sensor
dynamics plus white noise.

Two coordinate set-ups are used:

* desk scale (``arcs``, ``parallel``, ``turns``, ``rotating`` and the
  helper walks): one sensor at the origin looking along +x;
* room scale (``lines``, ``square``, ``zshape``, ``mshape``, ``hsnake``,
  ``vsnake``): a 7 m x 7 m area with sensors in the corners.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .lens_optics import ZoneLayout
from .sensor_dynamics import SensorParams, SignalTrace, simulate_output
from .tracker import DegenerateGeometry, SensorPose

DEFAULT_DT = 0.01
DEFAULT_REPEATS = 5
AREA = 7.0
DESK_POSE = SensorPose("desk", 0.0, 0.0, 0.0, math.radians(4.9))

DESK_SCENARIOS = ("arcs", "parallel", "turns", "rotating")
ROOM_SCENARIOS = ("lines", "square", "zshape", "mshape", "hsnake", "vsnake")
HELPER_SCENARIOS = ("vturn", "stop", "fastwalk", "refwalk")
SCENARIOS = DESK_SCENARIOS + ROOM_SCENARIOS + HELPER_SCENARIOS

ARC_RADII = (1.5, 2.5, 3.5)
ROTATION_RATE = math.radians(15.0)
ROTATION_RADIUS = 0.5


class UnknownScenario(KeyError):
    pass


@dataclass(frozen=True)
class BodyModel:
    radius: float = 0.2
    emission: float = 1.0

    def __post_init__(self):
        if not (self.radius > 0 and self.emission > 0):
            raise ValueError("radius and emission must be positive")


POINT_SOURCE = BodyModel(radius=0.005, emission=1.0)
# small hand-held heat source used on the rotation plate
ROTATING_SOURCE = BodyModel(radius=0.01, emission=1.0)


@dataclass(frozen=True)
class NoiseModel:
    output_noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.output_noise_std < 0:
            raise ValueError("output_noise_std must be >= 0")


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    scenario_tag: str = ""

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else DEFAULT_DT

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def position_at(self, times):
        return np.interp(times, self.t, self.x), np.interp(times, self.t, self.y)

    def __len__(self):
        return self.t.size


# --- path segments ---------------------------------------------------------

@dataclass(frozen=True)
class _Line:
    p0: tuple
    p1: tuple

    @property
    def length(self):
        return math.dist(self.p0, self.p1)

    def at(self, s):
        f = s / self.length if self.length > 0 else 0.0
        return (self.p0[0] + f * (self.p1[0] - self.p0[0]),
                self.p0[1] + f * (self.p1[1] - self.p0[1]))

    def reversed(self):
        return _Line(self.p1, self.p0)


@dataclass(frozen=True)
class _Arc:
    center: tuple
    radius: float
    a0: float
    a1: float

    @property
    def length(self):
        return abs(self.a1 - self.a0) * self.radius

    def at(self, s):
        a = self.a0 + np.sign(self.a1 - self.a0) * np.asarray(s) / self.radius
        return (self.center[0] + self.radius * np.cos(a),
                self.center[1] + self.radius * np.sin(a))

    def reversed(self):
        return _Arc(self.center, self.radius, self.a1, self.a0)


@dataclass(frozen=True)
class _Pause:
    point: tuple
    seconds: float


def _polar(r, deg):
    a = math.radians(deg)
    return (r * math.cos(a), r * math.sin(a))


def _polyline(points):
    return [_Line(tuple(p), tuple(q)) for p, q in zip(points[:-1], points[1:])]


def _walk(segments, speed, dt, tag):
    """Sample a chain of segments (and pauses) at constant speed."""
    pieces = []
    for seg in segments:
        if isinstance(seg, _Pause):
            pieces.append((seg.seconds, seg))
        else:
            pieces.append((seg.length / speed, seg))
    total = sum(d for d, _ in pieces)
    n = int(math.floor(total / dt + 1e-9)) + 1
    t = np.arange(n) * dt
    x = np.empty(n)
    y = np.empty(n)
    start = 0.0
    for i, (d, seg) in enumerate(pieces):
        last = i == len(pieces) - 1
        mask = (t >= start - 1e-12) & ((t < start + d - 1e-12) | last)
        local = np.clip(t[mask] - start, 0.0, d)
        if isinstance(seg, _Pause):
            x[mask], y[mask] = seg.point
        else:
            px, py = seg.at(local * speed)
            x[mask], y[mask] = px, py
        start += d
    return Trajectory(t, x, y, tag)


def waypoint_trajectory(points, speed: float = 1.0, dt: float = DEFAULT_DT,
                        tag: str = "waypoints") -> Trajectory:
    """Constant-speed walk along the straight legs joining ``points``."""
    if not speed > 0:
        raise ValueError("speed must be positive")
    if len(points) < 2:
        raise ValueError("need at least two waypoints")
    return _walk(_polyline(points), speed, dt, tag)


def arc_trajectory(center, radius: float, start: float, end: float, speed: float = 1.0,
                   dt: float = DEFAULT_DT, tag: str = "arc") -> Trajectory:
    """Constant-speed walk on a circle from angle ``start`` to ``end`` (radians)."""
    if not (speed > 0 and radius > 0):
        raise ValueError("speed and radius must be positive")
    return _walk([_Arc(tuple(center), radius, start, end)], speed, dt, tag)


def _round_trips(segments, repeats):
    back = [s.reversed() for s in reversed(segments)]
    return (list(segments) + back) * repeats


def _snake(horizontal: bool, n=400):
    u = np.linspace(1.0, 6.0, n)
    v = 3.5 + 1.5 * np.sin(2 * np.pi * (u - 1.0) / 2.5)
    pts = np.column_stack([u, v] if horizontal else [v, u])
    return _polyline([tuple(p) for p in pts])


ROOM_PATHS = {
    "lines": lambda: _polyline([(1.0, 2.0), (6.0, 2.0), (6.0, 5.0)]),
    "square": lambda: _polyline([(1.5, 1.5), (5.5, 1.5), (5.5, 5.5), (1.5, 5.5), (1.5, 1.5)]),
    "zshape": lambda: _polyline([(1.5, 5.5), (5.5, 5.5), (1.5, 1.5), (5.5, 1.5)]),
    "mshape": lambda: _polyline([(1.5, 1.5), (1.5, 5.5), (3.5, 3.0), (5.5, 5.5), (5.5, 1.5)]),
    "hsnake": lambda: _snake(True),
    "vsnake": lambda: _snake(False),
}


def _desk_segments(name, trace):
    if name == "arcs":
        r = ARC_RADII[trace]
        return [_Arc((0.0, 0.0), r, math.radians(-40.0), math.radians(40.0))]
    if name == "parallel":
        ends = [((1.5, -30.0), (5.0, -16.0)),
                ((1.5, 21.0), (5.0, 22.5)),
                ((1.5, 28.0), (5.0, 40.0))][trace]
        return _polyline([_polar(*ends[0]), _polar(*ends[1])])
    if name == "turns":
        a, b = (3.0, -2.0), (3.0, 0.5)
        c = [(4.0, -1.5), (5.0, 0.5), (2.5, 2.0)][trace]
        return _polyline([a, b, c])
    raise UnknownScenario(name)


def vturn_segments(radius=2.0, turn_deg=None, n_axes=4, layout: ZoneLayout | None = None):
    """Arc out and back along the same circle, turning mid-gap.

    With ``layout`` given, the walk starts just before an axis and turns in
    the middle of the gap after the ``n_axes``-th axis crossed, so both legs
    cross the same ``n_axes`` axes.
    """
    if layout is None:
        a0, a1 = math.radians(-25.0), math.radians(turn_deg if turn_deg is not None else 0.0)
    else:
        axes = [a for a, _ in layout.axes]
        zones = layout.zones
        first = len(axes) // 2 - n_axes // 2
        a0 = 0.5 * (zones[first - 1].end + zones[first].start)
        a1 = 0.5 * (zones[first + n_axes - 1].end + zones[first + n_axes].start)
    arc = _Arc((0.0, 0.0), radius, a0, a1)
    return [arc, arc.reversed()]


def make_trajectory(scenario: str, speed: float = 1.0, dt: float = DEFAULT_DT,
                    trace: int = 0, repeats: int = DEFAULT_REPEATS,
                    layout: ZoneLayout | None = None) -> Trajectory:
    """Ground-truth walk for a named scenario.

    ``trace`` selects one of the three walks of the desk families
    (``arcs``, ``parallel``, ``turns``); ``repeats`` is the number of round
    trips of the room scenarios.  ``rotating`` ignores ``speed`` and moves
    a source at 15 deg/s on a 0.5 m circle around the sensor.

    Raises
    ------
    UnknownScenario
        For names outside :data:`SCENARIOS`.
    """
    if not speed > 0:
        raise ValueError("speed must be positive")
    if not 0 < dt <= 0.02:
        raise ValueError("dt must be in (0, 0.02] s")
    tag = scenario if scenario not in DESK_SCENARIOS[:3] else f"{scenario}{trace + 1}"
    if scenario in ROOM_PATHS:
        segs = _round_trips(ROOM_PATHS[scenario](), repeats)
    elif scenario in ("arcs", "parallel", "turns"):
        if trace not in (0, 1, 2):
            raise ValueError("trace must be 0, 1 or 2")
        segs = _desk_segments(scenario, trace)
    elif scenario == "rotating":
        segs = [_Arc((0.0, 0.0), ROTATION_RADIUS, math.radians(-55.0), math.radians(55.0))]
        speed = ROTATION_RADIUS * ROTATION_RATE
    elif scenario == "vturn":
        segs = vturn_segments(layout=layout)
    elif scenario == "stop":
        # cross two zones, halt for four seconds inside a zone
        a = _Arc((0.0, 0.0), 3.0, math.radians(-20.0), math.radians(-3.4))
        segs = [a, _Pause(a.at(a.length), 4.0)]
    elif scenario == "fastwalk":
        segs = _polyline([(5.0, -2.5), (5.0, 2.5)])
    elif scenario == "refwalk":
        segs = _polyline([(3.0, -3.0), (3.0, 3.0)])
    else:
        raise UnknownScenario(scenario)
    return _walk(segs, speed, dt, tag)


# --- signal synthesis ------------------------------------------------------

def synth_dhf(traj: Trajectory, pose: SensorPose, layout: ZoneLayout,
              body: BodyModel = BodyModel()) -> SignalTrace:
    """Differential heat flux seen by one sensor along a trajectory."""
    dx = traj.x - pose.a
    dy = traj.y - pose.b
    d = np.maximum(np.hypot(dx, dy), body.radius)
    alpha = pose.local_azimuth(traj.x, traj.y)
    half = np.arctan(body.radius / d)
    lo = (alpha - half)[:, None]
    hi = (alpha + half)[:, None]
    start, end, sign = layout.sector_arrays()
    overlap = np.clip(np.minimum(hi, end[None, :]) - np.maximum(lo, start[None, :]), 0.0, None)
    frac = (overlap * sign[None, :]).sum(axis=1) / (2.0 * half)
    dhf = body.emission / d ** 2 * frac
    return SignalTrace(dhf, 1.0 / traj.dt, float(traj.t[0]))


def synth_outputs(traj: Trajectory, sensors: Sequence, body: BodyModel = BodyModel(),
                  noise: NoiseModel = NoiseModel()):
    """Noisy PIR output of every ``(pose, layout, params)`` in ``sensors``."""
    streams = np.random.SeedSequence(noise.seed).spawn(len(sensors))
    out = []
    for (pose, layout, params), ss in zip(sensors, streams):
        v = simulate_output(synth_dhf(traj, pose, layout, body), params)
        if noise.output_noise_std > 0:
            rng = np.random.default_rng(ss)
            v = v.with_samples(v.samples + rng.normal(0.0, noise.output_noise_std, len(v)))
        out.append(v)
    return out


def default_noise_std(layout: ZoneLayout, params: SensorParams,
                      body: BodyModel = BodyModel(), fraction: float = 0.02) -> float:
    """``fraction`` of the median |output| of a 1 m/s walk passing 3 m from a sensor."""
    return fraction * _reference_level(layout, params, body)


@lru_cache(maxsize=8)
def _reference_level(layout, params, body):
    traj = make_trajectory("refwalk", speed=1.0)
    v = simulate_output(synth_dhf(traj, DESK_POSE, layout, body), params)
    return float(np.median(np.abs(v.samples)))


def window_count(n_samples: int, sample_rate: float, period: float) -> int:
    """Number of whole windows of length ``period`` inside a sampled span."""
    span = (n_samples - 1) / sample_rate
    return int(math.floor(span / period + 1e-9))


def true_azimuth_series(traj: Trajectory, pose: SensorPose, period: float):
    """Ground-truth azimuth change per window as ``(start, end, theta)`` tuples.

    Raises
    ------
    DegenerateGeometry
        If a window endpoint coincides with the sensor.
    """
    if not period > 0:
        raise ValueError("period must be positive")
    k = window_count(len(traj), 1.0 / traj.dt, period)
    edges = traj.t[0] + period * np.arange(k + 1)
    px, py = traj.position_at(edges)
    vx, vy = px - pose.a, py - pose.b
    r = np.hypot(vx, vy)
    if np.any(r < 1e-9):
        raise DegenerateGeometry("window endpoint on the sensor")
    cosang = (vx[:-1] * vx[1:] + vy[:-1] * vy[1:]) / (r[:-1] * r[1:])
    theta = np.arccos(np.clip(cosang, -1.0, 1.0))
    return [(float(edges[i]), float(edges[i + 1]), float(theta[i])) for i in range(k)]


def corner_poses(theta_c: float, area: float = AREA):
    """Four sensors in the corners of a square room, each looking at its centre."""
    corners = [("s1", 0.0, 0.0), ("s2", area, 0.0), ("s3", area, area), ("s4", 0.0, area)]
    c = area / 2.0
    return [SensorPose(sid, a, b, math.atan2(c - b, c - a), theta_c) for sid, a, b in corners]
