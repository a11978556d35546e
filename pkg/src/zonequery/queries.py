"""The three query kinds executed against zone slices, plus the exhaustive
oracle used to verify them.

* scan_filter: magnitude BETWEEN filter; visits every object (no index on
  magnitudes by design).
* cone_search: zone range + ra window candidates, exact separation filter.
* zone_crossmatch: all-pairs radius join driven by the leading catalog's
  slices against a full replicated index of the other catalog.
* brute_force_crossmatch: O(n*m) exhaustive comparison, the correctness
  oracle; zone_crossmatch must reproduce its output exactly.

Match semantics are all-pairs-within-radius with an inclusive boundary
(sep <= r); best-match is a post-filter, not a different join.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .catalog import KEY_BAND, ZoneIndex, ZoneSlice, ra_scan_indices
from .sphere import (
    SkyPoint,
    ra_halfwidth,
    ra_halfwidth_array,
    ra_window,
    separation_deg,
    zone_of_array,
    zones_overlapping,
)

__all__ = [
    "ScanFilter",
    "ConeQuery",
    "MatchSpec",
    "MatchPair",
    "scan_filter",
    "cone_search",
    "zone_crossmatch",
    "brute_force_crossmatch",
    "best_matches",
]

# widen candidate windows by this many degrees: absorbs the quantization of
# the composite zone*512+ra sort key, which can shift an edge by ~1e-10 deg.
# Padding only adds false candidates; the exact filter removes them.
WINDOW_PAD_DEG = 1e-7

# brute-force oracle refuses above this many pairwise comparisons
BRUTE_FORCE_PAIR_LIMIT = 10**8

CandidateSink = Callable[[np.ndarray, np.ndarray], None]


@dataclass(frozen=True)
class ScanFilter:
    """Inclusive magnitude range on one band; missing magnitudes never pass."""

    band: str
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not self.lo <= self.hi:
            raise ValueError(f"lo {self.lo!r} > hi {self.hi!r}")


@dataclass(frozen=True)
class ConeQuery:
    center: SkyPoint
    radius: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.radius <= 180.0:
            raise ValueError(f"radius {self.radius!r} outside [0, 180]")


@dataclass(frozen=True)
class MatchSpec:
    """Cross-match parameters. ``leading`` optionally names the catalog whose
    zones drive partitioning (binding is positional; the label is checked
    when set)."""

    radius: float
    leading: str | None = None
    radius_cap: float = 10.0

    def __post_init__(self) -> None:
        if not self.radius > 0.0:
            raise ValueError(f"match radius must be > 0, got {self.radius!r}")
        if self.radius > self.radius_cap:
            raise ValueError(
                f"match radius {self.radius!r} above sanity cap {self.radius_cap!r}"
            )


@dataclass(frozen=True)
class MatchPair:
    leading_id: int
    other_id: int
    separation: float


def _scan_slice(zone_slice: ZoneSlice, f: ScanFilter) -> tuple[np.ndarray, np.ndarray]:
    col = zone_slice.mags[:, zone_slice.bands.index(f.band)]
    mask = (col >= f.lo) & (col <= f.hi)  # NaN (missing) compares False
    return zone_slice.ids[mask], col[mask]


def scan_filter(
    slices: Sequence[ZoneSlice], f: ScanFilter
) -> list[tuple[int, float]]:
    """Objects whose ``f.band`` magnitude lies in [lo, hi], ascending by id.

    Every object in the given slices is visited; there is deliberately no
    index over magnitudes.
    """
    ids_parts: list[np.ndarray] = []
    mag_parts: list[np.ndarray] = []
    for zone_slice in slices:
        if f.band not in zone_slice.bands:
            raise ValueError(
                f"unknown band {f.band!r}; catalog has {list(zone_slice.bands)}"
            )
        ids, mags = _scan_slice(zone_slice, f)
        ids_parts.append(ids)
        mag_parts.append(mags)
    if not ids_parts:
        return []
    ids = np.concatenate(ids_parts)
    mags = np.concatenate(mag_parts)
    order = np.argsort(ids)
    return [(int(i), float(m)) for i, m in zip(ids[order], mags[order])]


def _cone_arrays(
    index: ZoneIndex, q: ConeQuery, zones: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray, int]:
    """Cone search over (a zone subset of) an index.

    Returns (ids, separations, candidates_examined), unsorted.
    """
    overlap = zones_overlapping(
        q.center.dec - q.radius, q.center.dec + q.radius, index.cfg
    )
    if zones is None:
        zone_list = np.arange(overlap.start, overlap.stop)
    else:
        zone_list = np.intersect1d(zones, np.arange(overlap.start, overlap.stop))
    window = ra_window(q.center.ra, ra_halfwidth(q.radius, q.center.dec))
    ids_parts: list[np.ndarray] = []
    sep_parts: list[np.ndarray] = []
    examined = 0
    for zone in zone_list:
        zone_slice = index.slice(int(zone))
        if not len(zone_slice):
            continue
        idx = ra_scan_indices(zone_slice, window)
        if idx.size == 0:
            continue
        examined += int(idx.size)
        sep = separation_deg(
            zone_slice.ra[idx], zone_slice.dec[idx], q.center.ra, q.center.dec
        )
        keep = sep <= q.radius
        ids_parts.append(zone_slice.ids[idx][keep])
        sep_parts.append(sep[keep])
    if not ids_parts:
        return np.empty(0, dtype=np.uint64), np.empty(0), examined
    return np.concatenate(ids_parts), np.concatenate(sep_parts), examined


def cone_search(index: ZoneIndex, q: ConeQuery) -> list[tuple[int, float]]:
    """All objects within q.radius of q.center as (id, separation), by id."""
    ids, sep, _ = _cone_arrays(index, q)
    order = np.argsort(ids)
    return [(int(i), float(s)) for i, s in zip(ids[order], sep[order])]


def _window_segments(
    ra: np.ndarray, alpha: np.ndarray
) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Split padded ra windows into half-open segments inside [0, 360).

    Returns up to three (object_index, lo, hi) groups: the main segment for
    every object, plus wrap segments for windows crossing 0/360. Segments of
    one object never overlap, so no candidate is produced twice.
    """
    w_lo = ra - alpha - WINDOW_PAD_DEG
    w_hi = ra + alpha + WINDOW_PAD_DEG
    full = (w_hi - w_lo) >= 360.0

    main_lo = np.where(full, 0.0, np.maximum(w_lo, 0.0))
    main_hi = np.where(full, 360.0, np.minimum(w_hi, 360.0))
    segments = [(np.arange(len(ra)), main_lo, main_hi)]

    wrap_low = np.nonzero(~full & (w_lo < 0.0))[0]
    if wrap_low.size:
        segments.append(
            (wrap_low, w_lo[wrap_low] + 360.0, np.full(wrap_low.size, 360.0))
        )
    wrap_high = np.nonzero(~full & (w_hi > 360.0))[0]
    if wrap_high.size:
        segments.append(
            (wrap_high, np.zeros(wrap_high.size), w_hi[wrap_high] - 360.0)
        )
    return segments


def _crossmatch_arrays(
    lead_ids: np.ndarray,
    lead_ra: np.ndarray,
    lead_dec: np.ndarray,
    other: ZoneIndex,
    radius: float,
    candidate_sink: CandidateSink | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Zone join of a batch of leading objects against a full other-catalog
    index. Returns (leading_ids, other_ids, separations, candidates), unsorted.

    Per leading object the candidate set is: other objects in the zones its
    dec +- radius band can touch, with ra inside a window of conservative
    half-width; an exact separation filter then decides. Candidate ranges are
    located with binary searches on the composite (zone, ra) sort key, so the
    whole batch runs as a handful of array passes.
    """
    cfg = other.cfg
    if len(lead_ids) == 0 or other.total_count == 0:
        return (
            np.empty(0, dtype=np.uint64),
            np.empty(0, dtype=np.uint64),
            np.empty(0),
            0,
        )
    z_lo = zone_of_array(np.clip(lead_dec - radius, -90.0, 90.0), cfg)
    z_hi = zone_of_array(np.clip(lead_dec + radius, -90.0, 90.0), cfg)
    alpha = ra_halfwidth_array(radius, lead_dec)
    segments = _window_segments(lead_ra, alpha)

    lead_parts: list[np.ndarray] = []
    cand_parts: list[np.ndarray] = []
    key = other.ra_key
    for k in range(int((z_hi - z_lo).max()) + 1):
        zone_k = z_lo + k
        for obj_idx, seg_lo, seg_hi in segments:
            act = np.nonzero(zone_k[obj_idx] <= z_hi[obj_idx])[0]
            if act.size == 0:
                continue
            obj = obj_idx[act]
            base = zone_k[obj].astype(np.float64) * KEY_BAND
            i0 = np.searchsorted(key, base + seg_lo[act], side="left")
            # closed upper bound: a stored key for ra just under 360 can round
            # up to exactly zone*KEY_BAND + 360, and the gap to the next zone
            # band makes including equality safe (never pulls in another zone)
            i1 = np.searchsorted(key, base + seg_hi[act], side="right")
            counts = i1 - i0
            total = int(counts.sum())
            if total == 0:
                continue
            lead_parts.append(np.repeat(obj, counts))
            starts = np.cumsum(counts) - counts
            cand_parts.append(np.repeat(i0 - starts, counts) + np.arange(total))

    if not lead_parts:
        return (
            np.empty(0, dtype=np.uint64),
            np.empty(0, dtype=np.uint64),
            np.empty(0),
            0,
        )
    li = np.concatenate(lead_parts)
    ci = np.concatenate(cand_parts)
    if candidate_sink is not None:
        candidate_sink(lead_ids[li], other.ids[ci])
    sep = separation_deg(lead_ra[li], lead_dec[li], other.ra[ci], other.dec[ci])
    keep = sep <= radius
    return lead_ids[li[keep]], other.ids[ci[keep]], sep[keep], int(li.size)


def _gather_slices(
    slices: Sequence[ZoneSlice],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not slices:
        return np.empty(0, dtype=np.uint64), np.empty(0), np.empty(0)
    return (
        np.concatenate([s.ids for s in slices]),
        np.concatenate([s.ra for s in slices]),
        np.concatenate([s.dec for s in slices]),
    )


def _pairs_from_arrays(
    lead_ids: np.ndarray, other_ids: np.ndarray, sep: np.ndarray
) -> list[MatchPair]:
    order = np.lexsort((other_ids, lead_ids))
    return [
        MatchPair(int(a), int(b), float(s))
        for a, b, s in zip(lead_ids[order], other_ids[order], sep[order])
    ]


def zone_crossmatch(
    leading_slices: Sequence[ZoneSlice],
    other: ZoneIndex,
    spec: MatchSpec,
    candidate_sink: CandidateSink | None = None,
) -> list[MatchPair]:
    """All (leading, other) pairs within spec.radius, ascending by
    (leading_id, other_id).

    Each qualifying pair appears exactly once because every leading object
    lives in exactly one slice and its window segments are disjoint.
    ``candidate_sink``, when given, receives the pre-filter candidate id
    stream (for completeness instrumentation).
    """
    for zone_slice in leading_slices:
        if zone_slice.cfg != other.cfg:
            raise ValueError(
                "mismatched zone configuration between leading slices and "
                f"other catalog: {zone_slice.cfg} vs {other.cfg}"
            )
    lead_ids, lead_ra, lead_dec = _gather_slices(leading_slices)
    a, b, sep, _ = _crossmatch_arrays(
        lead_ids, lead_ra, lead_dec, other, spec.radius, candidate_sink
    )
    return _pairs_from_arrays(a, b, sep)


def _brute_force_arrays(
    a: ZoneIndex, b: ZoneIndex, radius: float, chunk: int = 512
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exhaustive all-pairs comparison, chunked to bound the matrix size."""
    la_parts: list[np.ndarray] = []
    lb_parts: list[np.ndarray] = []
    sep_parts: list[np.ndarray] = []
    for start in range(0, a.total_count, chunk):
        stop = min(start + chunk, a.total_count)
        sep = separation_deg(
            a.ra[start:stop, None],
            a.dec[start:stop, None],
            b.ra[None, :],
            b.dec[None, :],
        )
        ia, ib = np.nonzero(sep <= radius)
        la_parts.append(a.ids[start:stop][ia])
        lb_parts.append(b.ids[ib])
        sep_parts.append(sep[ia, ib])
    return (
        np.concatenate(la_parts) if la_parts else np.empty(0, dtype=np.uint64),
        np.concatenate(lb_parts) if lb_parts else np.empty(0, dtype=np.uint64),
        np.concatenate(sep_parts) if sep_parts else np.empty(0),
    )


def brute_force_crossmatch(
    a: ZoneIndex, b: ZoneIndex, radius: float
) -> list[MatchPair]:
    """O(n*m) oracle: every pair compared, no zones, no windows.

    Guarded to desk scale; refuses when n*m would exceed 1e8 comparisons.
    """
    if radius < 0.0:
        raise ValueError(f"radius must be >= 0, got {radius!r}")
    n_pairs = a.total_count * b.total_count
    if n_pairs > BRUTE_FORCE_PAIR_LIMIT:
        raise ValueError(
            f"{a.total_count} x {b.total_count} = {n_pairs} comparisons "
            f"exceeds the brute-force guard ({BRUTE_FORCE_PAIR_LIMIT})"
        )
    return _pairs_from_arrays(*_brute_force_arrays(a, b, radius))


def best_matches(pairs: Sequence[MatchPair]) -> list[MatchPair]:
    """Keep, per leading id, the minimum-separation pair; ties go to the
    lower other_id. Input order does not matter."""
    best: dict[int, MatchPair] = {}
    for p in pairs:
        cur = best.get(p.leading_id)
        if (
            cur is None
            or p.separation < cur.separation
            or (p.separation == cur.separation and p.other_id < cur.other_id)
        ):
            best[p.leading_id] = p
    return [best[k] for k in sorted(best)]
