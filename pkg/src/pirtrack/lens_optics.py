"""
Zone layout of a dual-element PIR sensor behind a Fresnel lens array.

Each lens is treated as an ideal 2-D thin lens and only the chief ray is
traced: a far-field source at azimuth ``az`` seen through a lens whose axis
points at ``axis_angle`` lands at offset ``f * tan(az - axis_angle)`` in the
focal plane.  Whether that offset hits the positive element, the negative
element or neither decides the polarity of the azimuth.  Because this only
depends on the azimuth, the zones are fan shaped and a 1-D angular sweep is
enough to extract them.

classify_angle(): polarity of a single azimuth.
sweep_zones(): sector table, symmetric axes and theta_c of a lens array.
neighbor_angles(): included angles between consecutive symmetric axes.
render_layout(): 2-D labelled point cloud for figures.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_FOV = (-math.radians(60.0), math.radians(60.0))
DEFAULT_RESOLUTION = 2e-4
MAX_RESOLUTION = 5e-4


class DegenerateLayout(ValueError):
    """Fewer than two non-gap sectors, so theta_c is undefined."""


class Polarity(enum.Enum):
    POSITIVE = 1
    NEGATIVE = -1
    GAP = 0

    @property
    def sign(self) -> int:
        return self.value

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, text: str) -> "Polarity":
        return cls[text.strip().upper()]


@dataclass(frozen=True)
class LensElement:
    """One facet of the lens array (angles in radians, lengths in metres)."""

    axis_angle: float
    aperture_width: float
    focal_length: float

    def __post_init__(self):
        if not self.focal_length > 0:
            raise ValueError("focal_length must be positive")
        if not self.aperture_width > 0:
            raise ValueError("aperture_width must be positive")
        if not -math.pi / 2 < self.axis_angle < math.pi / 2:
            raise ValueError("axis_angle must lie in (-pi/2, pi/2)")

    @property
    def half_acceptance(self) -> float:
        return math.atan(self.aperture_width / (2.0 * self.focal_length))


@dataclass(frozen=True)
class SensingGeometry:
    """Two sensing elements in the focal plane.

    ``element_gap`` is the distance between the element centres; the
    positive element sits at ``+element_gap/2`` when ``positive_side`` is
    ``"right"`` and at ``-element_gap/2`` otherwise.
    """

    element_width: float
    element_gap: float
    positive_side: str = "right"

    def __post_init__(self):
        if not self.element_width > 0:
            raise ValueError("element_width must be positive")
        if self.element_gap < self.element_width:
            raise ValueError("element_gap must be >= element_width")
        if self.positive_side not in ("left", "right"):
            raise ValueError("positive_side must be 'left' or 'right'")

    def element_spans(self):
        """Return ((lo, hi) positive, (lo, hi) negative) focal-plane offsets."""
        c = self.element_gap / 2.0
        h = self.element_width / 2.0
        right = (c - h, c + h)
        left = (-c - h, -c + h)
        if self.positive_side == "right":
            return right, left
        return left, right


@dataclass(frozen=True)
class Sector:
    start: float
    end: float
    polarity: Polarity

    @property
    def mid(self) -> float:
        return 0.5 * (self.start + self.end)

    @property
    def width(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class ZoneLayout:
    sectors: tuple
    axes: tuple
    theta_c: float
    fov: tuple = DEFAULT_FOV
    _edges: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        edges = np.array([s.start for s in self.sectors] + [self.sectors[-1].end])
        object.__setattr__(self, "_edges", edges)

    @classmethod
    def from_sectors(cls, sectors: Sequence[Sector], fov=None) -> "ZoneLayout":
        sectors = tuple(sectors)
        axes = tuple((s.mid, s.polarity) for s in sectors
                     if s.polarity is not Polarity.GAP)
        if len(axes) < 2:
            raise DegenerateLayout(f"only {len(axes)} non-gap sector(s) found")
        theta_c = float(np.mean(np.diff([a for a, _ in axes])))
        if fov is None:
            fov = (sectors[0].start, sectors[-1].end)
        return cls(sectors, axes, theta_c, tuple(fov))

    @property
    def zones(self):
        return [s for s in self.sectors if s.polarity is not Polarity.GAP]

    def sector_arrays(self):
        """Start, end and sign (+1/-1/0) of every sector as numpy arrays."""
        start = np.array([s.start for s in self.sectors])
        end = np.array([s.end for s in self.sectors])
        sign = np.array([s.polarity.sign for s in self.sectors], dtype=float)
        return start, end, sign

    def polarity_of(self, azimuth):
        """Vectorised sector lookup; azimuths outside the field of view are gap."""
        az = np.asarray(azimuth, dtype=float)
        idx = np.searchsorted(self._edges, az, side="right") - 1
        inside = (az >= self._edges[0]) & (az <= self._edges[-1])
        idx = np.clip(idx, 0, len(self.sectors) - 1)
        sign = np.array([s.polarity.sign for s in self.sectors])[idx]
        return np.where(inside, sign, 0)


def _select_lens(az: float, lenses: Sequence[LensElement]):
    best = None
    best_dist = math.inf
    for lens in lenses:
        dist = abs(az - lens.axis_angle)
        # nearest axis wins when acceptance windows overlap
        if dist <= lens.half_acceptance and dist < best_dist:
            best, best_dist = lens, dist
    return best


def classify_angle(source_azimuth: float, lenses: Sequence[LensElement],
                   geom: SensingGeometry, fov=DEFAULT_FOV) -> Polarity:
    """Polarity of a far-field source at ``source_azimuth`` (radians)."""
    if fov is not None and not fov[0] <= source_azimuth <= fov[1]:
        return Polarity.GAP
    lens = _select_lens(source_azimuth, lenses)
    if lens is None:
        return Polarity.GAP
    offset = lens.focal_length * math.tan(source_azimuth - lens.axis_angle)
    (plo, phi), (nlo, nhi) = geom.element_spans()
    if plo <= offset <= phi:
        return Polarity.POSITIVE
    if nlo <= offset <= nhi:
        return Polarity.NEGATIVE
    return Polarity.GAP


def _refine_edge(lo: float, hi: float, left: Polarity, lenses, geom, fov) -> float:
    # bisect the switch point between a grid sample of polarity `left` at lo
    # and a sample of a different polarity at hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if classify_angle(mid, lenses, geom, fov) is left:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sweep_zones(lenses: Sequence[LensElement], geom: SensingGeometry,
                angular_resolution: float = DEFAULT_RESOLUTION,
                fov=DEFAULT_FOV) -> ZoneLayout:
    """Sweep the field of view and merge equal-polarity runs into sectors.

    Sector boundaries found on the grid are refined by bisection, so the
    layout is insensitive to ``angular_resolution`` as long as no sector is
    narrower than one grid step.

    Raises
    ------
    DegenerateLayout
        If fewer than two positive/negative sectors are found.
    """
    if not 0 < angular_resolution <= MAX_RESOLUTION:
        raise ValueError(f"angular_resolution must be in (0, {MAX_RESOLUTION}]")
    lo, hi = fov
    n = int(math.ceil((hi - lo) / angular_resolution)) + 1
    grid = np.linspace(lo, hi, n)
    labels = [classify_angle(a, lenses, geom, fov) for a in grid]

    sectors = []
    start = lo
    for i in range(1, n):
        if labels[i] is not labels[i - 1]:
            edge = _refine_edge(grid[i - 1], grid[i], labels[i - 1], lenses, geom, fov)
            sectors.append(Sector(start, edge, labels[i - 1]))
            start = edge
    sectors.append(Sector(start, hi, labels[-1]))
    return ZoneLayout.from_sectors(sectors, fov=fov)


def neighbor_angles(layout: ZoneLayout) -> list:
    """Included angles between consecutive symmetric axes (radians)."""
    if len(layout.axes) < 2:
        raise DegenerateLayout("need at least two zones")
    return [b[0] - a[0] for a, b in zip(layout.axes[:-1], layout.axes[1:])]


def render_layout(layout: ZoneLayout, range_m: float, n_points: int, seed: int):
    """Scatter ``n_points`` uniformly over the sensing wedge and label them.

    Returns arrays ``x``, ``y`` (metres, sensor at the origin looking along
    +x) and ``sign`` (+1 positive, -1 negative, 0 gap).
    """
    if n_points <= 0:
        raise ValueError("n_points must be positive")
    rng = np.random.default_rng(seed)
    lo, hi = layout.fov
    r = range_m * np.sqrt(rng.random(n_points))
    az = lo + (hi - lo) * rng.random(n_points)
    return r * np.cos(az), r * np.sin(az), layout.polarity_of(az)


def uniform_test_array(spacing: float, n_lenses: int, focal_length: float = 0.02,
                       zone_width: float | None = None):
    """Lens array whose zone axes are exactly ``spacing`` apart.

    Each lens images the two elements into bands centred ``spacing/2``
    either side of its axis, and lenses are ``2*spacing`` apart, so
    consecutive symmetric axes alternate polarity at a constant pitch.
    """
    if zone_width is None:
        zone_width = spacing / 2.0
    inner = spacing / 2.0 - zone_width / 2.0
    outer = spacing / 2.0 + zone_width / 2.0
    e_lo = focal_length * math.tan(inner)
    e_hi = focal_length * math.tan(outer)
    geom = SensingGeometry(element_width=e_hi - e_lo, element_gap=e_hi + e_lo)
    half = spacing
    aperture = 2.0 * focal_length * math.tan(half * 0.999)
    first = -(n_lenses - 1) * spacing
    lenses = [LensElement(first + 2 * spacing * k, aperture, focal_length)
              for k in range(n_lenses)]
    return lenses, geom
