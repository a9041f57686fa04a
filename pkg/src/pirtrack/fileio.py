"""
Configuration loading and CSV tables.

Every time series is a CSV file with a header row, comma separators and
LF line endings.  Floats are written with 17 significant digits so that a
write/read cycle returns the same doubles.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import jsonschema
import numpy as np
import yaml

from . import schemas
from .azimuth import AzimuthObservation
from .lens_optics import DEFAULT_FOV, LensElement, SensingGeometry
from .scenarios import Trajectory
from .sensor_dynamics import SensorParams, SignalTrace
from .tracker import SensorPose, TrackerConfig

DATA_DIR = Path(__file__).resolve().parent / "data"
FLOAT_FMT = "{:.17g}"


class ConfigError(ValueError):
    """A configuration file is missing, unreadable or violates its schema."""


class DataError(ValueError):
    """A data file is missing or malformed."""


def _fmt(v) -> str:
    return FLOAT_FMT.format(float(v))


def load_yaml(path, schema: dict | None = None) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from exc
    if doc is None:
        doc = {}
    if schema is not None:
        try:
            jsonschema.validate(doc, schema)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"{path}: {where}: {exc.message}") from exc
    return doc


@dataclass(frozen=True)
class LensConfig:
    lenses: tuple
    geometry: SensingGeometry
    fov: tuple
    angular_resolution: float | None = None


def load_lens(path) -> LensConfig:
    doc = load_yaml(path, schemas.LENS_SCHEMA)
    g = doc["geometry"]
    try:
        geom = SensingGeometry(g["element_width_m"], g["element_gap_m"], g["positive_side"])
        lenses = tuple(LensElement(math.radians(e["axis_angle_deg"]), e["aperture_width_m"],
                                   e["focal_length_m"]) for e in doc["lenses"])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    fov = tuple(math.radians(a) for a in doc.get("field_of_view_deg", map(math.degrees, DEFAULT_FOV)))
    res = doc.get("angular_resolution_deg")
    return LensConfig(lenses, geom, fov, math.radians(res) if res else None)


def load_sensor(path):
    """Return ``(SensorParams, sample_rate)``."""
    doc = load_yaml(path, schemas.SENSOR_SCHEMA)
    params = SensorParams(doc["a_gain"], doc["b_coef"], doc["c_coef"])
    try:
        params.check()
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return params, float(doc.get("sample_rate_hz", 100.0))


def load_poses(path) -> list:
    doc = load_yaml(path, schemas.POSES_SCHEMA)
    ids = [s["sensor_id"] for s in doc["sensors"]]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"{path}: duplicate sensor_id")
    return [SensorPose(s["sensor_id"], s["a_m"], s["b_m"], math.radians(s["orientation_deg"]),
                       math.radians(s["theta_c_deg"])) for s in doc["sensors"]]


_TRACKER_KEYS = {
    "n_particles": "n_particles",
    "period_s": "period",
    "sigma_pos_m": "sigma_pos",
    "sigma_vel_mps": "sigma_vel",
    "sigma_obs": "sigma_obs",
    "residual": "residual",
    "init_speed_std_mps": "init_speed_std",
    "jump_prob": "jump_prob",
    "jump_std_mps": "jump_std",
    "reseed_fraction": "reseed_fraction",
    "confine": "confine",
    "resample_ess_fraction": "resample_ess_fraction",
}


def tracker_config_from_dict(doc: dict, source="tracker config") -> TrackerConfig:
    try:
        jsonschema.validate(doc, schemas.TRACKER_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"{source}: {exc.message}") from exc
    kw = {}
    for key, name in _TRACKER_KEYS.items():
        if key in doc:
            kw[name] = doc[key]
    if "sigma_angle_deg" in doc:
        kw["sigma_angle"] = math.radians(doc["sigma_angle_deg"])
    if "area_bounds_m" in doc:
        kw["area_bounds"] = tuple(float(v) for v in doc["area_bounds_m"])
    try:
        return TrackerConfig(**kw)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_tracker(path) -> TrackerConfig:
    return tracker_config_from_dict(load_yaml(path), str(path))


# --- CSV ---------------------------------------------------------------------

def _writer(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fh = path.open("w", encoding="utf-8", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def _read_rows(path, header: Sequence[str]):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"data file not found: {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != list(header):
        raise DataError(f"{path}: expected header {','.join(header)}")
    body = [r for r in rows[1:] if r]
    if any(len(r) != len(header) for r in body):
        raise DataError(f"{path}: ragged rows")
    return body


def _floats(path, rows, cols):
    try:
        return np.array([[float(r[c]) for c in cols] for r in rows], dtype=float).reshape(-1, len(cols))
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_trace(path, trace: SignalTrace):
    fh, w = _writer(path)
    with fh:
        w.writerow(["t_s", "v"])
        for t, v in zip(trace.times, trace.samples):
            w.writerow([_fmt(t), _fmt(v)])


def read_trace(path, sample_rate: float | None = None) -> SignalTrace:
    """Read a ``t_s,v`` CSV; the sample rate is inferred from the time column."""
    rows = _read_rows(path, ["t_s", "v"])
    if not rows:
        raise DataError(f"{path}: no samples")
    a = _floats(path, rows, [0, 1])
    t, v = a[:, 0], a[:, 1]
    if sample_rate is None:
        if t.size < 2:
            raise DataError(f"{path}: cannot infer the sample rate from one sample")
        dt = np.diff(t)
        if np.any(dt <= 0):
            raise DataError(f"{path}: time column not strictly increasing")
        sample_rate = round((t.size - 1) / (t[-1] - t[0]), 6)
        if np.max(np.abs(dt * sample_rate - 1.0)) > 1e-6:
            raise DataError(f"{path}: samples are not uniformly spaced")
    return SignalTrace(v, float(sample_rate), float(t[0]))


# theta_rad repeats theta_deg at full precision so a write/read cycle is exact
AZIMUTH_HEADER = ["sensor_id", "t_start", "t_end", "theta_deg", "n_extrema", "turning", "theta_rad"]


def write_azimuth(path, observations: Iterable[AzimuthObservation]):
    fh, w = _writer(path)
    with fh:
        w.writerow(AZIMUTH_HEADER)
        for o in observations:
            w.writerow([o.sensor_id, _fmt(o.window_start), _fmt(o.window_end),
                        _fmt(math.degrees(o.theta)), o.n_extrema, int(o.turning_detected),
                        _fmt(o.theta)])


def read_azimuth(path) -> list:
    out = []
    for r in _read_rows(path, AZIMUTH_HEADER):
        try:
            out.append(AzimuthObservation(r[0], float(r[1]), float(r[2]), float(r[6]),
                                          int(r[4]), bool(int(r[5]))))
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from exc
    return out


def group_windows(observations: Sequence[AzimuthObservation], tol: float = 1e-9) -> list:
    """Group observations into per-window lists ordered by window start."""
    groups: dict = {}
    for o in observations:
        key = round(o.window_start / tol) * tol
        groups.setdefault(key, []).append(o)
    return [groups[k] for k in sorted(groups)]


def write_truth(path, traj: Trajectory):
    fh, w = _writer(path)
    with fh:
        w.writerow(["t", "x", "y"])
        for row in zip(traj.t, traj.x, traj.y):
            w.writerow([_fmt(v) for v in row])


def read_truth(path) -> Trajectory:
    rows = _read_rows(path, ["t", "x", "y"])
    if len(rows) < 2:
        raise DataError(f"{path}: need at least two truth samples")
    a = _floats(path, rows, [0, 1, 2])
    if np.any(np.diff(a[:, 0]) <= 0):
        raise DataError(f"{path}: time column not strictly increasing")
    return Trajectory(a[:, 0], a[:, 1], a[:, 2], Path(path).stem)


def write_estimates(path, estimates):
    """``estimates`` is a list of ``(t, MotionState)`` as returned by the tracker."""
    fh, w = _writer(path)
    with fh:
        w.writerow(["t", "x", "y", "vx", "vy"])
        for t, s in estimates:
            w.writerow([_fmt(t), _fmt(s.x), _fmt(s.y), _fmt(s.vx), _fmt(s.vy)])


def read_estimates(path):
    """Return an ``(n, 3)`` array of ``t, x, y``."""
    rows = _read_rows(path, ["t", "x", "y", "vx", "vy"])
    return _floats(path, rows, [0, 1, 2])


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]):
    fh, w = _writer(path)
    with fh:
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
