"""
Regularised inverse filtering of PIR output back to the differential heat flux.

The inverse is built in the frequency domain from the *digital* sensor
filter ``G`` used by :func:`pirtrack.sensor_dynamics.simulate_output`::

    H = conj(G) / (|G|^2 + lam * max|G|^2),   H(0) = 0

The DC bin is forced to zero because the sensor has a zero at s = 0, so
the mean of the flux can never be recovered.  ``H`` is turned into a
centred FIR kernel and applied to long streams block by block with Hann
windows at 50 % overlap; each windowed block is linearly convolved with the
kernel and the results are added, which by linearity equals one long
convolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft as sfft
from scipy.signal.windows import tukey

from .sensor_dynamics import SensorParams, SignalTrace, discretize

DEFAULT_LAMBDA = 1e-3
DEFAULT_BLOCK_S = 4.0
MIN_SAMPLES = 16
KERNEL_LEN = 1 << 15


class TraceTooShort(ValueError):
    pass


@dataclass(frozen=True)
class InverseFilterSpec:
    params: SensorParams
    reg_lambda: float = DEFAULT_LAMBDA
    sample_rate: float = 100.0

    def __post_init__(self):
        if not self.reg_lambda > 0:
            raise ValueError("reg_lambda must be positive")
        self.params.check()


def inverse_response(spec: InverseFilterSpec, n_fft: int):
    """Regularised inverse on the rfft grid of length ``n_fft``."""
    g = discretize(spec.params, spec.sample_rate).response(n_fft)
    mag2 = np.abs(g) ** 2
    h = np.conj(g) / (mag2 + spec.reg_lambda * mag2.max())
    h[0] = 0.0
    return h


def noise_gain(spec: InverseFilterSpec, n_fft: int = KERNEL_LEN) -> float:
    """max |H|: worst-case amplification of white output noise."""
    return float(np.abs(inverse_response(spec, n_fft)).max())


@lru_cache(maxsize=16)
def _kernel(params: SensorParams, reg_lambda: float, sample_rate: float, n: int):
    h = inverse_response(InverseFilterSpec(params, reg_lambda, sample_rate), n)
    k = np.fft.fftshift(np.fft.irfft(h, n))
    # taper the outer tenth so truncation does not ring
    k *= tukey(n, 0.1)
    k.setflags(write=False)
    return k


def inverse_kernel(spec: InverseFilterSpec, n: int = KERNEL_LEN):
    """Centred FIR kernel (sample ``n // 2`` is lag zero)."""
    return _kernel(spec.params, float(spec.reg_lambda), float(spec.sample_rate), n)


def recover_dhf(output: SignalTrace, spec: InverseFilterSpec,
                block_s: float = DEFAULT_BLOCK_S, kernel_len: int = KERNEL_LEN) -> SignalTrace:
    """Estimate the DHF that produced ``output``.

    The trace is padded with its mean by one block on each side, filtered
    in overlapping Hann blocks and trimmed back.  The result has the same
    length and timing as the input and zero mean.

    Raises
    ------
    TraceTooShort
        For traces under 16 samples.
    """
    if output.sample_rate != spec.sample_rate:
        raise ValueError("trace and inverse filter sample rates differ")
    n = len(output)
    if n < MIN_SAMPLES:
        raise TraceTooShort(f"need at least {MIN_SAMPLES} samples, got {n}")

    kernel = inverse_kernel(spec, kernel_len)
    block = max(2 * int(round(block_s * output.sample_rate / 2)), 16)
    hop = block // 2
    x = output.samples
    mean = x.mean()
    left = right = np.full(block, mean)
    xp = np.concatenate([left, x, right])
    # frames start half a block early so every padded sample is covered twice
    xp = np.concatenate([np.zeros(hop), xp, np.zeros(block)])
    n_frames = (xp.size - block) // hop + 1

    win = np.hanning(block + 1)[:-1]  # periodic Hann: overlaps sum to one
    n_conv = sfft.next_fast_len(block + kernel.size - 1, real=True)
    kspec = sfft.rfft(kernel, n_conv)
    acc = np.zeros(xp.size + kernel.size)
    for i in range(n_frames):
        seg = xp[i * hop:i * hop + block] * win
        if not seg.any():
            continue
        y = sfft.irfft(sfft.rfft(seg, n_conv) * kspec, n_conv)[:block + kernel.size - 1]
        acc[i * hop:i * hop + y.size] += y

    first = hop + block + kernel.size // 2
    dhf = acc[first:first + n]
    return output.with_samples(dhf - dhf.mean())


def kernel_support(spec: InverseFilterSpec, rel: float = 1e-6, n: int = KERNEL_LEN) -> float:
    """Half-width (s) beyond which the kernel stays below ``rel`` of its peak."""
    k = np.abs(inverse_kernel(spec, n))
    big = np.nonzero(k > rel * k.max())[0]
    half = max(n // 2 - big[0], big[-1] - n // 2)
    return half / spec.sample_rate

