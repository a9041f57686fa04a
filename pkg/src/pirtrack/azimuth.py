"""
Azimuth change from a DHF trace.

Every symmetric axis the walker crosses leaves one extremum in the DHF, so
the angle swept in a window is the number of extrema times theta_c.  When
the walker reverses angular direction inside a window, the reversal shows
up as an extremum that is much weaker than its predecessor; the window is
then split at those turning points and the counts of the two directions
are subtracted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import butter, find_peaks, peak_prominences, sosfiltfilt

from .scenarios import window_count
from .sensor_dynamics import SignalTrace

DEFAULT_PERIOD = 0.5
DEFAULT_RATIO = 0.5
MAD_TO_STD = 1.4826
# walking produces DHF content well below a tenth of the sample rate
DEFAULT_LOWPASS = 0.1
# samples within this fraction of the trace's peak magnitude count as one flat top
PLATEAU_RTOL = 1e-9


@dataclass(frozen=True)
class Extremum:
    time: float
    value: float
    prominence: float
    kind: str  # "peak" or "trough"
    index: int = -1


@dataclass(frozen=True)
class AzimuthObservation:
    sensor_id: str
    window_start: float
    window_end: float
    theta: float
    n_extrema: int
    turning_detected: bool


@dataclass(frozen=True)
class ProminencePolicy:
    """Minimum prominence rule.

    ``fixed`` wins when set.  Otherwise the threshold is ``factor`` robust
    noise standard deviations, where the noise level is the smallest
    1.4826 * MAD of the first difference (scaled by 1/sqrt(2)) over
    consecutive ``window_s`` second windows, i.e. the quietest background
    stretch of the trace.
    """

    factor: float = 4.0
    window_s: float = 5.0
    fixed: float | None = None

    def threshold(self, dhf: SignalTrace) -> float:
        if self.fixed is not None:
            return self.fixed
        sigma = background_noise(dhf, self.window_s)
        return self.factor * sigma if sigma > 0 else 1e-12


def background_noise(dhf: SignalTrace, window_s: float = 5.0) -> float:
    d = np.diff(dhf.samples)
    if d.size == 0:
        return 0.0
    w = max(int(round(window_s * dhf.sample_rate)), 8)
    levels = []
    for i in range(0, max(d.size - w // 2, 1), w):
        seg = d[i:i + w]
        if seg.size < 8:
            continue
        levels.append(MAD_TO_STD * np.median(np.abs(seg - np.median(seg))) / math.sqrt(2.0))
    if not levels:
        levels = [MAD_TO_STD * np.median(np.abs(d - np.median(d))) / math.sqrt(2.0)]
    return float(min(levels))


def detect_extrema(dhf: SignalTrace, min_prominence: float) -> list:
    """Peaks and troughs with prominence >= ``min_prominence``, alternating.

    Prominence is the topographic one (troughs use the negated signal).
    Runs of same-kind extrema left after thresholding collapse to the most
    extreme member.  An extremum on a flat top (equal up to rounding) is
    placed at the centre of the top.
    """
    if not min_prominence > 0:
        raise ValueError("min_prominence must be positive")
    x = dhf.samples
    found = []
    for kind, sig in (("peak", x), ("trough", -x)):
        idx, _ = find_peaks(sig)
        if idx.size == 0:
            continue
        prom = peak_prominences(sig, idx)[0]
        keep = prom >= min_prominence
        found.extend((int(i), float(p), kind) for i, p in zip(idx[keep], prom[keep]))
    found.sort()

    merged = []
    for i, p, kind in found:
        if merged and merged[-1][2] == kind:
            j = merged[-1][0]
            better = x[i] > x[j] if kind == "peak" else x[i] < x[j]
            if better:
                merged[-1] = (i, p, kind)
            continue
        merged.append((i, p, kind))
    t0, fs = dhf.t0, dhf.sample_rate
    tol = PLATEAU_RTOL * float(np.max(np.abs(x))) if x.size else 0.0
    merged = [(_plateau_centre(x, i, tol), p, kind) for i, p, kind in merged]
    return [Extremum(t0 + i / fs, float(x[i]), p, kind, i) for i, p, kind in merged]


def _plateau_centre(x, i, tol):
    lo = hi = i
    while lo > 0 and abs(x[lo - 1] - x[i]) <= tol:
        lo -= 1
    while hi < x.size - 1 and abs(x[hi + 1] - x[i]) <= tol:
        hi += 1
    return (lo + hi) // 2


def detect_turning_points(extrema: Sequence[Extremum], ratio: float = DEFAULT_RATIO) -> list:
    """Indices whose prominence drops below ``ratio`` times the previous one."""
    if not 0 < ratio < 1:
        raise ValueError("ratio must be in (0, 1)")
    return [i for i in range(1, len(extrema))
            if extrema[i].prominence < ratio * extrema[i - 1].prominence]


def azimuth_change(extrema: Sequence, turning: Sequence[int], theta_c: float) -> float:
    """Swept angle from extrema counts.

    Without turning points this is ``N * theta_c``.  Turning points split
    the sequence into sections that alternate between the two walking
    directions; the turning extrema themselves are not counted, and the
    result is ``|N1 - N2| * theta_c``.
    """
    if not theta_c > 0:
        raise ValueError("theta_c must be positive")
    n = len(extrema)
    cuts = sorted(set(turning))
    if any(not 0 <= c < n for c in cuts):
        raise IndexError("turning index out of range")
    counts = [0, 0]
    section = 0
    prev = -1
    for c in cuts + [n]:
        counts[section % 2] += c - prev - 1
        section += 1
        prev = c
    return abs(counts[0] - counts[1]) * theta_c


def lowpass(dhf: SignalTrace, fraction: float = DEFAULT_LOWPASS) -> SignalTrace:
    """Zero-phase 4th-order Butterworth low-pass at ``fraction * sample_rate``."""
    if not 0 < fraction < 0.5:
        raise ValueError("cut-off fraction must be in (0, 0.5)")
    if len(dhf) < 28:  # sosfiltfilt needs a few filter lengths of data
        return dhf
    sos = butter(4, fraction * 2.0, output="sos")
    return dhf.with_samples(sosfiltfilt(sos, dhf.samples))


def windowed_azimuth(dhf: SignalTrace, period: float, theta_c: float,
                     min_prominence: float | ProminencePolicy | None = None,
                     sensor_id: str = "s1", ratio: float = DEFAULT_RATIO,
                     smooth: float | None = DEFAULT_LOWPASS) -> list:
    """One :class:`AzimuthObservation` per whole window of ``period`` seconds.

    The threshold comes from the trace as given; extrema are then searched
    on a copy low-passed at ``smooth * sample_rate`` (``None`` skips the
    smoothing), which removes noise wiggles the inverse filter amplifies.
    Extrema and turning points are found on the whole trace, then binned by
    time; an extremum exactly on a boundary belongs to the earlier window.
    """
    if period < 2.0 / dhf.sample_rate:
        raise ValueError("period must cover at least two samples")
    if min_prominence is None:
        min_prominence = ProminencePolicy()
    if isinstance(min_prominence, ProminencePolicy):
        min_prominence = min_prominence.threshold(dhf)
    if smooth is not None:
        dhf = lowpass(dhf, smooth)
    ext = detect_extrema(dhf, min_prominence)
    turning = set(detect_turning_points(ext, ratio))
    k = window_count(len(dhf), dhf.sample_rate, period)
    # sample-index boundaries avoid float drift in t0 + j * period
    times = np.array([e.index for e in ext], dtype=float) / dhf.sample_rate
    bins = np.ceil(times / period - 1e-9).astype(int) - 1
    bins = np.maximum(bins, 0)
    out = []
    for w in range(k):
        members = [i for i in range(len(ext)) if bins[i] == w]
        sub = [ext[i] for i in members]
        sub_turn = [j for j, i in enumerate(members) if i in turning]
        theta = azimuth_change(sub, sub_turn, theta_c)
        out.append(AzimuthObservation(sensor_id, dhf.t0 + w * period, dhf.t0 + (w + 1) * period,
                                      theta, len(sub), bool(sub_turn)))
    return out
