"""
End-to-end pipeline, error statistics and parameter sweeps.

``run_pipeline`` chains every stage for one scenario: synthetic outputs,
DHF recovery, windowed azimuth estimation, particle filtering and the
comparison against ground truth.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import fileio
from .azimuth import DEFAULT_LOWPASS, ProminencePolicy, windowed_azimuth
from .dhf_recovery import DEFAULT_LAMBDA, InverseFilterSpec, recover_dhf
from .lens_optics import sweep_zones
from .scenarios import (BodyModel, NoiseModel, Trajectory, default_noise_std, make_trajectory,
                        synth_outputs)
from .tracker import TrackerConfig, track

log = logging.getLogger(__name__)

CDF_STEP = 0.05
DEFAULT_BURN_IN = 2.0


class EmptyAfterBurnIn(ValueError):
    pass


class PipelineError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the error."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class EvalReport:
    """Error statistics of one run.

    ``cdf`` holds ``(radius_m, P(error <= radius))`` on a 0.05 m grid, plus
    the largest error when it falls between grid points.  ``accuracy_rate``
    is the share of estimates in the same 1 m x 1 m cell as the truth.
    """

    mean_error: float
    std_error: float
    cdf: tuple
    accuracy_rate: float
    n: int

    @classmethod
    def from_errors(cls, errors, same_cell=None) -> "EvalReport":
        e = np.asarray(errors, dtype=float)
        if e.size == 0:
            raise EmptyAfterBurnIn("no estimates to evaluate")
        top = math.ceil(e.max() / CDF_STEP - 1e-9) * CDF_STEP
        grid = np.round(np.arange(0.0, top + CDF_STEP / 2, CDF_STEP), 10)
        prob = np.searchsorted(np.sort(e), grid + 1e-12, side="right") / e.size
        prob[-1] = 1.0
        cdf = list(zip(grid.tolist(), prob.tolist()))
        # the largest error itself, so that the CDF reads 1.0 there even off the grid
        if grid[-1] - e.max() > 1e-12:
            cdf.insert(len(cdf) - 1, (float(e.max()), 1.0))
        rate = float(np.mean(same_cell)) if same_cell is not None else float("nan")
        return cls(float(e.mean()), float(e.std()), tuple(cdf), rate, int(e.size))

    def prob_within(self, radius: float) -> float:
        """Empirical P(error <= radius) read off the CDF grid."""
        best = 0.0
        for r, p in self.cdf:
            if r <= radius + 1e-12:
                best = p
        return best


def _as_txy(estimates):
    rows = []
    for item in estimates:
        if len(item) == 2:
            t, s = item
            rows.append((t, s.x, s.y))
        else:
            rows.append(tuple(item[:3]))
    return np.asarray(rows, dtype=float).reshape(-1, 3)


def position_errors(estimates, truth: Trajectory, burn_in: float = DEFAULT_BURN_IN):
    """Per-estimate Euclidean error and same-grid-cell flag after burn-in."""
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    a = _as_txy(estimates)
    t0, t1 = truth.t[0], truth.t[-1]
    if a.size and (a[:, 0].min() < t0 - 1e-9 or a[:, 0].max() > t1 + 1e-9):
        raise ValueError("estimate timestamps outside the truth time range")
    a = a[a[:, 0] >= t0 + burn_in - 1e-12]
    if a.shape[0] == 0:
        raise EmptyAfterBurnIn(f"no estimates after {burn_in} s burn-in")
    tx, ty = truth.position_at(a[:, 0])
    err = np.hypot(a[:, 1] - tx, a[:, 2] - ty)
    same = (np.floor(a[:, 1]) == np.floor(tx)) & (np.floor(a[:, 2]) == np.floor(ty))
    return err, same


def evaluate(estimates, truth: Trajectory, burn_in: float = DEFAULT_BURN_IN) -> EvalReport:
    """Error statistics of ``(t, x, y)`` or ``(t, MotionState)`` estimates.

    Raises
    ------
    EmptyAfterBurnIn
        When no estimate is left after dropping the first ``burn_in`` seconds.
    """
    err, same = position_errors(estimates, truth, burn_in)
    return EvalReport.from_errors(err, same)


def pooled(reports_errors) -> EvalReport:
    """Report over the concatenation of several ``(errors, same_cell)`` pairs."""
    err = np.concatenate([e for e, _ in reports_errors])
    same = np.concatenate([s for _, s in reports_errors])
    return EvalReport.from_errors(err, same)


# --- pipeline ----------------------------------------------------------------

@dataclass(frozen=True)
class PipelineConfig:
    lens_path: Path = fileio.DATA_DIR / "reference_lens.cfg"
    sensor_path: Path = fileio.DATA_DIR / "reference_sensor.cfg"
    poses_path: Path = fileio.DATA_DIR / "corner_sensors.cfg"
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    period: float = 0.5
    reg_lambda: float = DEFAULT_LAMBDA
    prominence: ProminencePolicy = field(default_factory=ProminencePolicy)
    smooth: float | None = DEFAULT_LOWPASS
    noise_std: float | None = None  # None: the default level of the scenario module
    body: BodyModel = field(default_factory=BodyModel)
    speed: float = 1.0
    burn_in: float = DEFAULT_BURN_IN
    seed: int = 0

    def __post_init__(self):
        if not self.period > 0:
            raise fileio.ConfigError("period must be positive")

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        """Load a pipeline YAML file; relative paths resolve against its folder."""
        from .schemas import PIPELINE_SCHEMA

        path = Path(path)
        doc = fileio.load_yaml(path, PIPELINE_SCHEMA)
        base = path.parent

        def resolve(p):
            p = Path(p)
            return p if p.is_absolute() else base / p

        kw = dict(lens_path=resolve(doc["lens"]), sensor_path=resolve(doc["sensor"]),
                  poses_path=resolve(doc["poses"]))
        tr = doc.get("tracker")
        if isinstance(tr, str):
            kw["tracker"] = fileio.load_tracker(resolve(tr))
        elif isinstance(tr, dict):
            kw["tracker"] = fileio.tracker_config_from_dict(tr, str(path))
        for key, name in (("period_s", "period"), ("reg_lambda", "reg_lambda"),
                          ("smooth_fraction", "smooth"), ("noise_std", "noise_std"),
                          ("speed_mps", "speed"), ("burn_in_s", "burn_in"), ("seed", "seed")):
            if key in doc:
                kw[name] = doc[key]
        if "prominence" in doc:
            kw["prominence"] = ProminencePolicy(**doc["prominence"])
        if "body_radius_m" in doc:
            kw["body"] = BodyModel(radius=doc["body_radius_m"])
        cfg = cls(**kw)
        cfg.check_files()
        return cfg

    def check_files(self):
        for p in (self.lens_path, self.sensor_path, self.poses_path):
            if not Path(p).is_file():
                raise fileio.ConfigError(f"config file not found: {p}")


@dataclass
class PipelineResult:
    scenario: str
    truth: Trajectory
    estimates: list
    report: EvalReport
    errors: np.ndarray
    same_cell: np.ndarray
    observations: list = field(repr=False, default_factory=list)
    outputs: list = field(repr=False, default_factory=list)
    dhf: list = field(repr=False, default_factory=list)


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except PipelineError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage name
        raise PipelineError(name, exc) from exc


def load_setup(config: PipelineConfig):
    """Parse the lens, sensor and pose files and sweep the zone layout."""
    config.check_files()
    lens = fileio.load_lens(config.lens_path)
    params, fs = fileio.load_sensor(config.sensor_path)
    poses = fileio.load_poses(config.poses_path)
    kw = {"fov": lens.fov}
    if lens.angular_resolution:
        kw["angular_resolution"] = lens.angular_resolution
    layout = sweep_zones(lens.lenses, lens.geometry, **kw)
    return layout, params, fs, poses


def run_pipeline(config: PipelineConfig, scenario: str, n_sensors: int | None = None,
                 persist_dir=None) -> PipelineResult:
    """Synthesize, recover, estimate, track and evaluate one scenario.

    ``n_sensors`` keeps only the first sensors of the pose file.  With
    ``persist_dir`` every intermediate is written there as CSV.

    Raises
    ------
    PipelineError
        Wrapping the first failure, with the stage name attached.
    """
    layout, params, fs, poses = _stage("config", load_setup, config)
    if n_sensors is not None:
        if not 1 <= n_sensors <= len(poses):
            raise PipelineError("config", fileio.ConfigError(
                f"n_sensors must be in 1..{len(poses)}"))
        poses = poses[:n_sensors]
    dt = 1.0 / fs
    truth = _stage("synth", make_trajectory, scenario, speed=config.speed, dt=dt)
    noise = config.noise_std
    if noise is None:
        noise = _stage("synth", default_noise_std, layout, params, config.body)
    outputs = _stage("synth", synth_outputs, truth, [(p, layout, params) for p in poses],
                     config.body, NoiseModel(noise, config.seed))
    spec = InverseFilterSpec(params, config.reg_lambda, fs)
    dhf = [_stage("dhf", recover_dhf, o, spec) for o in outputs]
    obs = [_stage("azimuth", windowed_azimuth, d, config.period, p.theta_c, config.prominence,
                  p.sensor_id, smooth=config.smooth) for d, p in zip(dhf, poses)]
    stream = [list(w) for w in zip(*obs)]
    tcfg = replace(config.tracker, period=config.period)
    estimates = _stage("track", track, stream, poses, tcfg, config.seed)
    err, same = _stage("evaluate", position_errors, estimates, truth, config.burn_in)
    report = EvalReport.from_errors(err, same)
    log.info("%s: mean error %.3f m over %d estimates", scenario, report.mean_error, report.n)
    if persist_dir is not None:
        persist(Path(persist_dir), truth, outputs, dhf, obs, estimates, poses)
    return PipelineResult(scenario, truth, estimates, report, err, same, obs, outputs, dhf)


def persist(out: Path, truth, outputs, dhf, obs, estimates, poses):
    out.mkdir(parents=True, exist_ok=True)
    fileio.write_truth(out / "truth.csv", truth)
    for p, o, d in zip(poses, outputs, dhf):
        fileio.write_trace(out / f"output_{p.sensor_id}.csv", o)
        fileio.write_trace(out / f"dhf_{p.sensor_id}.csv", d)
    fileio.write_azimuth(out / "azimuth.csv", [o for per in obs for o in per])
    fileio.write_estimates(out / "estimates.csv", estimates)


SWEEP_PARAMETERS = ("period", "n_sensors")


def sweep(config: PipelineConfig, scenarios: str | Sequence[str], parameter: str,
          values: Sequence) -> list:
    """Re-run the pipeline for each value, pooling errors over ``scenarios``.

    Every run uses ``config.seed``.  Returns ``[(value, EvalReport), ...]``.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"parameter must be one of {SWEEP_PARAMETERS}")
    if not values:
        raise ValueError("values must be non-empty")
    if isinstance(scenarios, str):
        scenarios = [scenarios]
    out = []
    for v in values:
        parts = []
        for sc in scenarios:
            if parameter == "period":
                res = run_pipeline(replace(config, period=float(v)), sc)
            else:
                res = run_pipeline(config, sc, n_sensors=int(v))
            parts.append((res.errors, res.same_cell))
        out.append((v, pooled(parts)))
        log.info("%s=%s: mean error %.3f m", parameter, v, out[-1][1].mean_error)
    return out
