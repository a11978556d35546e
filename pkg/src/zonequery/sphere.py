"""Spherical geometry for declination-zone indexing.

All angles are degrees. The sky is cut into horizontal declination stripes
("zones") of fixed height h; zone k covers [k*h - 90, (k+1)*h - 90), with the
last zone closed at +90 so every declination belongs to exactly one zone.
Neighborhood queries restrict work to the zones a declination band can touch,
plus a right-ascension window wide enough to be complete at that declination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DEFAULT_ZONE_HEIGHT_DEG",
    "SkyPoint",
    "ZoneConfig",
    "RaWindow",
    "normalize_ra",
    "zone_of",
    "zone_dec_range",
    "zones_overlapping",
    "angular_separation",
    "ra_halfwidth",
    "ra_window",
]

DEFAULT_ZONE_HEIGHT_DEG = 4.0 / 60.0  # 4 arcminutes

# A zone id is a plain int in [0, ZoneConfig.zone_count).
ZoneId = int


def normalize_ra(ra: float) -> float:
    """Wrap a right ascension into [0, 360)."""
    if not math.isfinite(ra):
        raise ValueError(f"ra must be finite, got {ra!r}")
    wrapped = ra % 360.0
    # x % 360.0 can round to exactly 360.0 for tiny negative x
    return 0.0 if wrapped >= 360.0 else wrapped


def normalize_ra_array(ra: np.ndarray) -> np.ndarray:
    """Vector form of :func:`normalize_ra`; same arithmetic, same results."""
    wrapped = np.mod(ra, 360.0)
    wrapped[wrapped >= 360.0] = 0.0
    return wrapped


@dataclass(frozen=True)
class SkyPoint:
    """A position on the celestial sphere, in degrees.

    ra is normalized into [0, 360) at construction. dec outside [-90, +90]
    is an error rather than a wrap: wrapping declination is ambiguous
    because crossing a pole changes ra.
    """

    ra: float
    dec: float

    def __post_init__(self) -> None:
        if not (-90.0 <= self.dec <= 90.0):
            raise ValueError(f"dec {self.dec!r} outside [-90, +90]")
        object.__setattr__(self, "ra", normalize_ra(self.ra))


@dataclass(frozen=True)
class ZoneConfig:
    """Zone layout: stripe height in degrees plus the derived zone count."""

    height_deg: float = DEFAULT_ZONE_HEIGHT_DEG
    zone_count: int = field(init=False)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.height_deg) and self.height_deg > 0.0):
            raise ValueError(f"zone height must be positive, got {self.height_deg!r}")
        raw = 180.0 / self.height_deg
        # ceil with a relative guard: an exact divisor (e.g. h = 4') must not
        # gain a sliver zone from float noise in the quotient
        count = math.ceil(raw * (1.0 - 1e-12))
        object.__setattr__(self, "zone_count", max(int(count), 1))


def zone_of(dec: float, cfg: ZoneConfig) -> ZoneId:
    """Zone index containing declination ``dec``: floor((dec + 90) / h).

    dec = +90 is clamped into the last zone; it is the only value where the
    raw formula lands out of range.
    """
    if not (-90.0 <= dec <= 90.0):
        raise ValueError(f"dec {dec!r} outside [-90, +90]")
    z = int(math.floor((dec + 90.0) / cfg.height_deg))
    if z < 0:
        return 0
    return min(z, cfg.zone_count - 1)


def zone_of_array(dec: np.ndarray, cfg: ZoneConfig) -> np.ndarray:
    """Vector form of :func:`zone_of`; identical arithmetic per element."""
    z = np.floor((dec + 90.0) / cfg.height_deg).astype(np.int64)
    return np.clip(z, 0, cfg.zone_count - 1)


def zone_dec_range(zone: ZoneId, cfg: ZoneConfig) -> tuple[float, float]:
    """Declination range [lo, hi) covered by ``zone``; last zone closed at +90."""
    if not 0 <= zone < cfg.zone_count:
        raise ValueError(f"zone {zone} outside [0, {cfg.zone_count})")
    lo = zone * cfg.height_deg - 90.0
    if zone == cfg.zone_count - 1:
        return lo, 90.0
    return lo, (zone + 1) * cfg.height_deg - 90.0


def zones_overlapping(dec_lo: float, dec_hi: float, cfg: ZoneConfig) -> range:
    """Minimal contiguous run of zones whose stripes intersect [dec_lo, dec_hi].

    Bounds are clamped into [-90, +90] first, so callers may pass
    ``dec - radius`` / ``dec + radius`` without clamping themselves.
    """
    if dec_hi < dec_lo:
        raise ValueError(f"dec_lo {dec_lo!r} > dec_hi {dec_hi!r}")
    lo = min(max(dec_lo, -90.0), 90.0)
    hi = min(max(dec_hi, -90.0), 90.0)
    return range(zone_of(lo, cfg), zone_of(hi, cfg) + 1)


def separation_deg(
    ra1: np.ndarray | float,
    dec1: np.ndarray | float,
    ra2: np.ndarray | float,
    dec2: np.ndarray | float,
) -> np.ndarray | np.floating:
    """Great-circle separation in degrees, haversine form, broadcast-friendly.

    Stable at the arcsecond separations match radii live at, where the
    dot-product/acos form loses about half the significand. The sqrt argument
    is clamped at 1 so rounding near antipodal points cannot leave the asin
    domain.
    """
    phi1 = np.radians(dec1)
    phi2 = np.radians(dec2)
    sd = np.sin(0.5 * np.radians(np.subtract(dec2, dec1)))
    sr = np.sin(0.5 * np.radians(np.subtract(ra2, ra1)))
    h = sd * sd + np.cos(phi1) * np.cos(phi2) * (sr * sr)
    return 2.0 * np.degrees(np.arcsin(np.minimum(1.0, np.sqrt(h))))


def angular_separation(p: SkyPoint, q: SkyPoint) -> float:
    """Great-circle distance between two sky positions, in [0, 180] degrees."""
    return float(separation_deg(p.ra, p.dec, q.ra, q.dec))


def ra_halfwidth(radius: float, dec: float) -> float:
    """Half-width of an ra window containing everything within ``radius`` of
    a point at declination ``dec``.

    Deliberately conservative: r / cos(|dec| + r) over-covers, and the exact
    separation filter downstream removes false candidates, so completeness is
    the only hard requirement here. Returns 180 (full circle) once the cap
    touches a pole (|dec| + radius >= 90).
    """
    if not 0.0 <= radius <= 180.0:
        raise ValueError(f"radius {radius!r} outside [0, 180]")
    if not (-90.0 <= dec <= 90.0):
        raise ValueError(f"dec {dec!r} outside [-90, +90]")
    reach = abs(dec) + radius
    if reach >= 90.0:
        return 180.0
    return min(radius / math.cos(math.radians(reach)), 180.0)


def ra_halfwidth_array(radius: float, dec: np.ndarray) -> np.ndarray:
    """Vector form of :func:`ra_halfwidth` for a fixed radius."""
    reach = np.abs(dec) + radius
    out = np.full(np.shape(dec), 180.0)
    narrow = reach < 90.0
    out[narrow] = np.minimum(radius / np.cos(np.radians(reach[narrow])), 180.0)
    return out


@dataclass(frozen=True)
class RaWindow:
    """One or two disjoint half-open ra intervals in [0, 360), sorted by start.

    Two intervals occur when the window wraps the 0/360 discontinuity.
    """

    intervals: tuple[tuple[float, float], ...]

    def contains(self, ra: float) -> bool:
        r = normalize_ra(ra)
        return any(lo <= r < hi for lo, hi in self.intervals)

    @property
    def width(self) -> float:
        return sum(hi - lo for lo, hi in self.intervals)


def ra_window(center_ra: float, halfwidth: float) -> RaWindow:
    """Normalize [center - halfwidth, center + halfwidth] into an RaWindow.

    halfwidth = 180 yields the full circle. halfwidth = 0 yields a one-ulp
    interval that still contains the center, so radius-0 searches can match
    coincident objects through half-open interval arithmetic.
    """
    if not 0.0 <= center_ra < 360.0:
        raise ValueError(f"center_ra {center_ra!r} outside [0, 360)")
    if not 0.0 <= halfwidth <= 180.0:
        raise ValueError(f"halfwidth {halfwidth!r} outside [0, 180]")
    if halfwidth >= 180.0:
        return RaWindow(((0.0, 360.0),))
    if halfwidth == 0.0:
        return RaWindow(((center_ra, math.nextafter(center_ra, math.inf)),))
    lo = center_ra - halfwidth
    hi = center_ra + halfwidth
    if lo < 0.0:
        return RaWindow(((0.0, hi), (lo + 360.0, 360.0)))
    if hi > 360.0:
        return RaWindow(((0.0, hi - 360.0), (lo, 360.0)))
    return RaWindow(((lo, hi),))
