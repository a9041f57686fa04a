"""
Particle filter that localises a walker from per-sensor azimuth changes.

State per particle is ``[x, y, vx, vy]``.  The motion model is constant
velocity with additive Gaussian noise; the observation of one sensor is
the cosine of the angle the last step subtends at that sensor, with
Gaussian noise on the cosine itself.

Azimuth observations are coarse (whole multiples of theta_c), so a few
safeguards keep the filter from locking onto a wrong hypothesis: a small
share of particles receives a large velocity kick each step (walkers turn
sharply), a small share is re-drawn from the prior, and particles outside
the monitored area are given the floor likelihood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

LIKELIHOOD_FLOOR = 1e-12
MIN_RANGE = 1e-6


class DegenerateGeometry(ValueError):
    """A position coincides with a sensor, so the subtended angle is undefined."""


class AllWeightsZero(FloatingPointError):
    pass


@dataclass(frozen=True)
class MotionState:
    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0

    def as_array(self):
        return np.array([self.x, self.y, self.vx, self.vy], dtype=float)

    @classmethod
    def from_array(cls, v) -> "MotionState":
        return cls(*(float(c) for c in v))


@dataclass(frozen=True)
class SensorPose:
    sensor_id: str
    a: float
    b: float
    orientation: float
    theta_c: float

    def __post_init__(self):
        if not self.theta_c > 0:
            raise ValueError("theta_c must be positive")

    @property
    def position(self):
        return (self.a, self.b)

    def local_azimuth(self, x, y):
        """Azimuth of world points relative to the boresight, in (-pi, pi]."""
        az = np.arctan2(np.asarray(y) - self.b, np.asarray(x) - self.a) - self.orientation
        return np.angle(np.exp(1j * az))


@dataclass(frozen=True)
class TrackerConfig:
    """Filter settings.

    ``sigma_obs`` is the standard deviation of the cosine residual; with
    ``residual="angle"`` the residual is taken on the angle itself and
    ``sigma_angle`` (radians) is used instead.  ``jump_prob`` and
    ``jump_std`` describe the occasional velocity kick, ``reseed_fraction``
    the share of particles re-drawn from the prior every step and
    ``confine`` whether particles outside ``area_bounds`` get the floor
    likelihood.
    """

    n_particles: int = 10000
    period: float = 0.5
    sigma_pos: float = 0.05
    sigma_vel: float = 0.1
    sigma_obs: float = 0.004
    resample_ess_fraction: float = 0.5
    area_bounds: tuple = (0.0, 7.0, 0.0, 7.0)
    residual: str = "cos"
    sigma_angle: float = math.radians(2.5)
    init_speed_std: float = 1.0
    jump_prob: float = 0.2
    jump_std: float = 1.0
    reseed_fraction: float = 0.01
    confine: bool = True

    def __post_init__(self):
        if self.n_particles < 100:
            raise ValueError("n_particles must be >= 100")
        if not (self.sigma_obs > 0 and self.sigma_angle > 0):
            raise ValueError("sigma_obs and sigma_angle must be positive")
        if self.residual not in ("cos", "angle"):
            raise ValueError("residual must be 'cos' or 'angle'")
        if min(self.sigma_pos, self.sigma_vel, self.jump_std) < 0 or not self.init_speed_std > 0:
            raise ValueError("noise levels must be non-negative")
        if not (0 <= self.jump_prob <= 1 and 0 <= self.reseed_fraction < 1):
            raise ValueError("jump_prob must be in [0, 1] and reseed_fraction in [0, 1)")
        if not 0 < self.resample_ess_fraction <= 1:
            raise ValueError("resample_ess_fraction must be in (0, 1]")
        if not self.period > 0:
            raise ValueError("period must be positive")
        x0, x1, y0, y1 = self.area_bounds
        if not (x1 > x0 and y1 > y0):
            raise ValueError("area_bounds must be (x_min, x_max, y_min, y_max)")


@dataclass
class ParticleSet:
    states: np.ndarray
    weights: np.ndarray
    rng: np.random.Generator = field(repr=False)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float).reshape(-1, 4)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.states.shape[0] != self.weights.size or self.weights.size < 1:
            raise ValueError("states and weights must have the same non-zero length")

    def __len__(self):
        return self.weights.size

    def ess(self) -> float:
        return 1.0 / float(np.sum(self.weights ** 2))


def _prior_states(config: TrackerConfig, rng, n):
    x0, x1, y0, y1 = config.area_bounds
    states = np.empty((n, 4))
    states[:, 0] = rng.uniform(x0, x1, n)
    states[:, 1] = rng.uniform(y0, y1, n)
    states[:, 2:] = rng.normal(0.0, config.init_speed_std, (n, 2))
    return states


def init_particles(config: TrackerConfig, seed: int) -> ParticleSet:
    """Uniform positions over the area, zero-mean Gaussian velocities.

    The velocity spread is ``init_speed_std`` (walking pace), not the
    per-step process noise.
    """
    rng = np.random.default_rng(seed)
    n = config.n_particles
    return ParticleSet(_prior_states(config, rng, n), np.full(n, 1.0 / n), rng)


def propagate(particles: ParticleSet, period: float, sigma_pos: float, sigma_vel: float,
              jump_prob: float = 0.0, jump_std: float = 0.0) -> ParticleSet:
    """One constant-velocity step plus Gaussian process noise.

    With ``jump_prob > 0`` each particle independently has that chance of an
    extra zero-mean velocity kick of std ``jump_std`` per axis.
    """
    if not period > 0:
        raise ValueError("period must be positive")
    s = particles.states
    out = s.copy()
    out[:, 0] += period * s[:, 2]
    out[:, 1] += period * s[:, 3]
    n = len(particles)
    noise = particles.rng.normal(0.0, 1.0, (n, 4))
    noise[:, :2] *= sigma_pos
    noise[:, 2:] *= sigma_vel
    out += noise
    if jump_prob > 0 and jump_std > 0:
        hit = particles.rng.random(n) < jump_prob
        out[hit, 2:] += particles.rng.normal(0.0, jump_std, (int(hit.sum()), 2))
    return ParticleSet(out, particles.weights.copy(), particles.rng)


def reseed(particles: ParticleSet, config: TrackerConfig) -> ParticleSet:
    """Replace a ``reseed_fraction`` share of the states by fresh prior draws."""
    if config.reseed_fraction <= 0:
        return particles
    rng = particles.rng
    hit = np.nonzero(rng.random(len(particles)) < config.reseed_fraction)[0]
    states = particles.states.copy()
    states[hit] = _prior_states(config, rng, hit.size)
    return ParticleSet(states, particles.weights.copy(), rng)


def _cos_subtended(states, a, b, period):
    x, y, vx, vy = states[..., 0], states[..., 1], states[..., 2], states[..., 3]
    ap = np.hypot(x - period * vx - a, y - period * vy - b)
    bp = np.hypot(x - a, y - b)
    ab = period * np.hypot(vx, vy)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (ap ** 2 + bp ** 2 - ab ** 2) / (2.0 * ap * bp)
    degenerate = (ap < MIN_RANGE) | (bp < MIN_RANGE)
    return np.clip(c, -1.0, 1.0), degenerate


def expected_cos_theta(state: MotionState, pose: SensorPose, period: float) -> float:
    """Cosine of the angle at the sensor between the previous and current position.

    The previous position is ``(x - T*vx, y - T*vy)``; the three triangle
    sides go through the law of cosines and the result is clamped to
    [-1, 1].

    Raises
    ------
    DegenerateGeometry
        If either position is within 1e-6 m of the sensor.
    """
    c, bad = _cos_subtended(state.as_array(), pose.a, pose.b, period)
    if bool(bad):
        raise DegenerateGeometry("position coincides with the sensor")
    return float(c)


def log_factor(theta_obs: float, cos_expected, sigma: float, residual: str = "cos"):
    """Log of one sensor's likelihood factor, floored at log(1e-12)."""
    if residual == "cos":
        r = math.cos(theta_obs) - cos_expected
    else:
        r = theta_obs - np.arccos(cos_expected)
    return np.maximum(-0.5 * (r / sigma) ** 2, math.log(LIKELIHOOD_FLOOR))


def weight_update(particles: ParticleSet, observations: Iterable, poses: Sequence[SensorPose],
                  sigma_obs: float, period: float, residual: str = "cos",
                  area_bounds: tuple | None = None) -> ParticleSet:
    """Multiply weights by the Gaussian likelihood of every observation.

    ``observations`` holds objects with ``sensor_id`` and ``theta``; sensors
    without an observation are skipped.  Each per-sensor factor is floored
    at 1e-12, which also covers particles sitting on a sensor.  With
    ``area_bounds`` particles outside the rectangle get one more floor
    factor.
    """
    by_id = {p.sensor_id: p for p in poses}
    log_w = np.log(np.maximum(particles.weights, 1e-300))
    used = False
    for obs in observations:
        pose = by_id.get(obs.sensor_id)
        if pose is None:
            continue
        used = True
        c, bad = _cos_subtended(particles.states, pose.a, pose.b, period)
        log_f = log_factor(obs.theta, c, sigma_obs, residual)
        log_f[bad] = math.log(LIKELIHOOD_FLOOR)
        log_w += log_f
    if not used:
        return ParticleSet(particles.states, particles.weights.copy(), particles.rng)
    if area_bounds is not None:
        x0, x1, y0, y1 = area_bounds
        x, y = particles.states[:, 0], particles.states[:, 1]
        log_w[(x < x0) | (x > x1) | (y < y0) | (y > y1)] += math.log(LIKELIHOOD_FLOOR)
    log_w -= log_w.max()
    w = np.exp(log_w)
    total = w.sum()
    if not total > 0 or not np.isfinite(total):
        raise AllWeightsZero("weights vanished after normalisation")
    return ParticleSet(particles.states, w / total, particles.rng)


def systematic_indices(weights, u: float):
    """Indices chosen by systematic resampling with a single offset ``u`` in [0, 1)."""
    n = weights.size
    positions = (np.arange(n) + u) / n
    cum = np.cumsum(weights)
    cum[-1] = 1.0
    return np.searchsorted(cum, positions, side="right")


def resample_if_needed(particles: ParticleSet, ess_fraction: float) -> ParticleSet:
    n = len(particles)
    if particles.ess() >= ess_fraction * n:
        return particles
    idx = systematic_indices(particles.weights, particles.rng.random())
    return ParticleSet(particles.states[idx].copy(), np.full(n, 1.0 / n), particles.rng)


def estimate(particles: ParticleSet) -> MotionState:
    return MotionState.from_array(particles.weights @ particles.states)


def track(observation_stream: Sequence[Sequence], poses: Sequence[SensorPose],
          config: TrackerConfig, seed: int):
    """Run the filter over windows of observations.

    Each window runs propagate, reseed, weight_update, resample_if_needed
    and estimate.  Returns a list of ``(time, MotionState)``, one per
    window, where time is the end of the window (taken from the
    observations, or ``(k + 1) * T`` when a window is empty).
    """
    out = []
    if not observation_stream:
        return out
    particles = init_particles(config, seed)
    sigma = config.sigma_obs if config.residual == "cos" else config.sigma_angle
    bounds = config.area_bounds if config.confine else None
    for k, window in enumerate(observation_stream):
        window = list(window)
        particles = propagate(particles, config.period, config.sigma_pos, config.sigma_vel,
                              config.jump_prob, config.jump_std)
        particles = reseed(particles, config)
        particles = weight_update(particles, window, poses, sigma, config.period,
                                  config.residual, bounds)
        particles = resample_if_needed(particles, config.resample_ess_fraction)
        est = estimate(particles)
        t = window[0].window_end if window else (k + 1) * config.period
        out.append((t, est))
    return out


def with_period(config: TrackerConfig, period: float) -> TrackerConfig:
    return replace(config, period=period)
