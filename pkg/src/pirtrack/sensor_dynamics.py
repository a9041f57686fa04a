"""
Second-order model of the PIR sensing element.

The element maps the differential heat flux (DHF) to the output voltage
through ``G(s) = A s / (B s^2 + C s + 1)``.  The output voltage is itself
the difference of the two element voltages, so a sample of an output trace
already means ``V+ - V-``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy import optimize, signal

MIN_SAMPLE_RATE = 20.0


class UnstableParams(ValueError):
    """Continuous-time poles are not strictly in the left half plane."""


class NoConvergence(RuntimeError):
    pass


@dataclass(frozen=True)
class SensorParams:
    a_gain: float
    b_coef: float
    c_coef: float

    def check(self):
        if self.a_gain == 0:
            raise UnstableParams("a_gain must be non-zero")
        if not (self.b_coef > 0 and self.c_coef > 0):
            raise UnstableParams(
                f"B={self.b_coef}, C={self.c_coef}: poles not in the left half plane")
        return self

    def poles(self):
        return np.roots([self.b_coef, self.c_coef, 1.0])

    def response(self, omega):
        """Continuous frequency response G(j*omega)."""
        s = 1j * np.asarray(omega, dtype=float)
        return self.a_gain * s / (self.b_coef * s ** 2 + self.c_coef * s + 1.0)


@dataclass(frozen=True)
class SignalTrace:
    samples: np.ndarray
    sample_rate: float
    t0: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    @property
    def times(self):
        return self.t0 + np.arange(self.samples.size) / self.sample_rate

    @property
    def duration(self):
        return self.samples.size / self.sample_rate

    def with_samples(self, samples) -> "SignalTrace":
        return replace(self, samples=np.asarray(samples, dtype=float))


@dataclass(frozen=True)
class DigitalFilter:
    feedforward: tuple
    feedback: tuple

    def apply(self, x):
        return signal.lfilter(self.feedforward, self.feedback, x)

    def response(self, n_fft: int):
        """Frequency response on the ``rfft`` grid of length ``n_fft``."""
        w = 2 * np.pi * np.fft.rfftfreq(n_fft)
        z1 = np.exp(-1j * w)
        b0, b1, b2 = self.feedforward
        a0, a1, a2 = self.feedback
        return (b0 + b1 * z1 + b2 * z1 ** 2) / (a0 + a1 * z1 + a2 * z1 ** 2)


def discretize(params: SensorParams, sample_rate: float = 100.0,
               prewarp: bool = False) -> DigitalFilter:
    """Bilinear-transform discretisation of ``A s / (B s^2 + C s + 1)``.

    With ``prewarp`` the transform constant is matched at the undamped
    natural frequency ``1/sqrt(B)`` instead of using ``2*fs``.
    """
    params.check()
    if sample_rate < MIN_SAMPLE_RATE:
        raise ValueError(f"sample_rate must be >= {MIN_SAMPLE_RATE} Hz")
    A, B, C = params.a_gain, params.b_coef, params.c_coef
    k = 2.0 * sample_rate
    if prewarp:
        w0 = 1.0 / math.sqrt(B)
        k = w0 / math.tan(w0 / (2.0 * sample_rate))
    # s -> k (1 - z^-1) / (1 + z^-1); the s-zero lands on z = 1
    b = np.array([A * k, 0.0, -A * k])
    a = np.array([B * k * k + C * k + 1.0,
                  2.0 - 2.0 * B * k * k,
                  B * k * k - C * k + 1.0])
    return DigitalFilter(tuple(b / a[0]), tuple(a / a[0]))


def simulate_output(dhf: SignalTrace, params: SensorParams, prewarp: bool = False) -> SignalTrace:
    """Zero-state response of the sensor to a DHF trace."""
    filt = discretize(params, dhf.sample_rate, prewarp=prewarp)
    return dhf.with_samples(filt.apply(dhf.samples))


def step_response(params: SensorParams, duration: float, sample_rate: float = 100.0) -> SignalTrace:
    if not duration > 0:
        raise ValueError("duration must be positive")
    n = max(1, int(round(duration * sample_rate)))
    return simulate_output(SignalTrace(np.ones(n), sample_rate), params)


class Fit(NamedTuple):
    params: SensorParams
    residual_rms: float
    iterations: int


def _pack(p: SensorParams):
    return np.array([p.a_gain, math.log(p.b_coef), math.log(p.c_coef)])


def _unpack(v) -> SensorParams:
    return SensorParams(float(v[0]), float(math.exp(v[1])), float(math.exp(v[2])))


def identify_params(step_traces: Sequence[SignalTrace], initial_guess: SensorParams,
                    max_iter: int = 2000, rel_tol: float = 1e-10) -> Fit:
    """Fit (A, B, C) to measured step responses with a Nelder-Mead simplex.

    B and C are optimised in log space so they stay positive.  Every trace
    must start at the step onset and all traces must share a sample rate.

    Raises
    ------
    NoConvergence
        If the simplex has not settled within ``max_iter`` iterations.
    UnstableParams
        If the fitted parameters are not physical.
    """
    if not step_traces:
        raise ValueError("need at least one step trace")
    fs = step_traces[0].sample_rate
    if any(tr.sample_rate != fs for tr in step_traces):
        raise ValueError("all traces must share one sample rate")
    initial_guess.check()
    n_max = max(len(tr) for tr in step_traces)
    step = np.ones(n_max)
    measured = [tr.samples for tr in step_traces]
    n_total = sum(m.size for m in measured)

    def sse(v):
        try:
            filt = discretize(_unpack(v), fs)
        except UnstableParams:
            return math.inf
        model = filt.apply(step)
        return float(sum(np.sum((model[:m.size] - m) ** 2) for m in measured))

    x0 = _pack(initial_guess)
    # the objective is relative to the energy of the data
    scale = max(sum(float(np.sum(m ** 2)) for m in measured), 1e-300)
    f0 = sse(x0)
    if f0 <= 1e-24 * scale:
        return Fit(initial_guess, math.sqrt(f0 / n_total), 0)
    # deterministic initial simplex: 20 % steps in A and in each log-parameter
    simplex = np.vstack([x0, x0 + [0.2 * (abs(x0[0]) or 1.0), 0, 0],
                         x0 + [0, 0.2, 0], x0 + [0, 0, 0.2]])
    res = optimize.minimize(
        lambda v: sse(v) / scale, x0, method="Nelder-Mead",
        options={"maxiter": max_iter, "xatol": 1e-10, "fatol": rel_tol,
                 "initial_simplex": simplex})
    if not res.success:
        raise NoConvergence(f"Nelder-Mead did not settle in {max_iter} iterations")
    best, fbest, iterations = res.x, res.fun * scale, int(res.nit)
    params = _unpack(best).check()
    return Fit(params, math.sqrt(fbest / n_total), iterations)


def detect_onset(samples, noise_factor: float = 5.0, baseline: int = 50) -> int:
    """Index of the first sample exceeding ``noise_factor`` x pre-onset noise std.

    The first ``baseline`` samples are assumed to precede the step.
    """
    x = np.asarray(samples, dtype=float)
    base = x[:baseline]
    sigma = base.std()
    dev = np.abs(x - base.mean())
    if sigma == 0:
        hits = np.nonzero(dev > 0)[0]
    else:
        hits = np.nonzero(dev > noise_factor * sigma)[0]
    hits = hits[hits >= baseline] if sigma > 0 else hits
    if hits.size == 0:
        raise ValueError("no step onset found")
    return int(hits[0])
