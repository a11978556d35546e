"""Fan a query out over W workers and merge results deterministically.

Workers are in-process threads over immutable shared indexes; the heavy
lifting inside each worker is vectorized array work that releases the GIL,
which is what makes threads worth having here. Each worker owns a disjoint
zone subset of the leading catalog (the other catalog, for cross-matches, is
shared read-only by everyone), workers never talk to each other, and the
coordinator merges by concatenate-then-sort so the result is bit-identical
for any worker count or strategy.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .catalog import ZoneIndex
from .partition import PartitionPlan
from .queries import (
    ConeQuery,
    MatchPair,
    MatchSpec,
    ScanFilter,
    _cone_arrays,
    _crossmatch_arrays,
    _pairs_from_arrays,
    _scan_slice,
)

__all__ = [
    "WorkerStats",
    "StatsSummary",
    "ExecutionReport",
    "aggregate",
    "run_scan",
    "run_cone",
    "run_xmatch",
]


@dataclass(frozen=True)
class WorkerStats:
    """What one worker did: wall clock, CPU if the platform provides it,
    and row/byte counters standing in for the storage engine's I/O numbers."""

    worker: int
    elapsed_s: float
    cpu_s: float | None
    rows_scanned: int
    rows_returned: int
    bytes_read: int


@dataclass(frozen=True)
class StatsSummary:
    """Component-wise aggregate over workers (the MAX / AVG report rows)."""

    elapsed_s: float
    cpu_s: float | None
    rows_scanned: float
    rows_returned: float
    bytes_read: float


def aggregate(stats: Sequence[WorkerStats]) -> tuple[StatsSummary, StatsSummary]:
    """Component-wise maximum and arithmetic mean over worker rows."""
    if not stats:
        raise ValueError("aggregate needs at least one worker row")
    cpus = [s.cpu_s for s in stats]
    have_cpu = all(c is not None for c in cpus)
    max_row = StatsSummary(
        elapsed_s=max(s.elapsed_s for s in stats),
        cpu_s=max(cpus) if have_cpu else None,
        rows_scanned=max(s.rows_scanned for s in stats),
        rows_returned=max(s.rows_returned for s in stats),
        bytes_read=max(s.bytes_read for s in stats),
    )
    n = len(stats)
    avg_row = StatsSummary(
        elapsed_s=sum(s.elapsed_s for s in stats) / n,
        cpu_s=sum(cpus) / n if have_cpu else None,
        rows_scanned=sum(s.rows_scanned for s in stats) / n,
        rows_returned=sum(s.rows_returned for s in stats) / n,
        bytes_read=sum(s.bytes_read for s in stats) / n,
    )
    return max_row, avg_row


@dataclass(frozen=True)
class ExecutionReport:
    worker_count: int
    workers: tuple[WorkerStats, ...]
    max_row: StatsSummary
    avg_row: StatsSummary
    total_elapsed_s: float

    def to_json(self) -> str:
        def row(s: WorkerStats | StatsSummary, label: object) -> dict:
            return {
                "worker": label,
                "elapsed_s": s.elapsed_s,
                "cpu_s": s.cpu_s,
                "rows_scanned": s.rows_scanned,
                "rows_returned": s.rows_returned,
                "bytes_read": s.bytes_read,
            }

        payload = {
            "worker_count": self.worker_count,
            "total_elapsed_s": self.total_elapsed_s,
            "workers": [row(s, s.worker) for s in self.workers],
            "max": row(self.max_row, "MAX"),
            "avg": row(self.avg_row, "AVG"),
        }
        return json.dumps(payload, sort_keys=True)

    def to_text(self) -> str:
        header = (
            f"{'worker':>8} {'elapsed_s':>12} {'cpu_s':>10} "
            f"{'rows_scanned':>14} {'rows_returned':>14} {'bytes_read':>12}"
        )

        def fmt(label: object, s: WorkerStats | StatsSummary) -> str:
            cpu = f"{s.cpu_s:.4f}" if s.cpu_s is not None else "-"
            return (
                f"{label!s:>8} {s.elapsed_s:>12.4f} {cpu:>10} "
                f"{s.rows_scanned:>14.0f} {s.rows_returned:>14.0f} "
                f"{s.bytes_read:>12.0f}"
            )

        lines = [header]
        lines.extend(fmt(s.worker, s) for s in self.workers)
        lines.append(fmt("MAX", self.max_row))
        lines.append(fmt("AVG", self.avg_row))
        lines.append(f"total elapsed: {self.total_elapsed_s:.4f}s")
        return "\n".join(lines)


def _check_plan(index: ZoneIndex, plan: PartitionPlan) -> None:
    if plan.zone_count != index.cfg.zone_count:
        raise ValueError(
            f"plan covers {plan.zone_count} zones but index "
            f"{index.name!r} has {index.cfg.zone_count}"
        )


# wall clock is mandatory; per-thread CPU only where the platform has it
_HAS_THREAD_CPU = hasattr(time, "thread_time")


def _timed(worker: int, row_bytes: int, work: Callable[[], tuple]):
    """Run one worker's share and wrap the counters it reports."""
    t0 = time.perf_counter()
    c0 = time.thread_time() if _HAS_THREAD_CPU else None
    result, scanned, returned = work()
    elapsed = time.perf_counter() - t0
    cpu = time.thread_time() - c0 if c0 is not None else None
    stats = WorkerStats(
        worker=worker,
        elapsed_s=elapsed,
        cpu_s=cpu,
        rows_scanned=scanned,
        rows_returned=returned,
        bytes_read=scanned * row_bytes,
    )
    return result, stats


def _run_workers(jobs: Sequence[Callable[[], tuple]], row_bytes: int):
    results = []
    all_stats = []
    with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
        futures = [
            pool.submit(_timed, w, row_bytes, job) for w, job in enumerate(jobs)
        ]
        for fut in futures:
            result, stats = fut.result()
            results.append(result)
            all_stats.append(stats)
    return results, all_stats


def _report(stats: list[WorkerStats], worker_count: int, t0: float) -> ExecutionReport:
    max_row, avg_row = aggregate(stats)
    return ExecutionReport(
        worker_count=worker_count,
        workers=tuple(stats),
        max_row=max_row,
        avg_row=avg_row,
        total_elapsed_s=time.perf_counter() - t0,
    )


def run_scan(
    index: ZoneIndex, f: ScanFilter, plan: PartitionPlan
) -> tuple[list[tuple[int, float]], ExecutionReport]:
    """Parallel magnitude scan; results identical to a single-threaded
    scan_filter after the canonical ascending-id sort."""
    _check_plan(index, plan)
    index.band_column(f.band)  # validate band before dispatching

    def job_for(worker: int) -> Callable[[], tuple]:
        zones = plan.zones_of(worker)

        def job() -> tuple:
            ids_parts, mag_parts = [], []
            scanned = 0
            for zone in zones:
                zone_slice = index.slice(int(zone))
                if not len(zone_slice):
                    continue
                scanned += len(zone_slice)
                ids, mags = _scan_slice(zone_slice, f)
                ids_parts.append(ids)
                mag_parts.append(mags)
            if ids_parts:
                ids = np.concatenate(ids_parts)
                mags = np.concatenate(mag_parts)
            else:
                ids = np.empty(0, dtype=np.uint64)
                mags = np.empty(0)
            return (ids, mags), scanned, int(len(ids))

        return job

    t0 = time.perf_counter()
    results, stats = _run_workers(
        [job_for(w) for w in range(plan.worker_count)], index.row_bytes
    )
    ids = np.concatenate([r[0] for r in results])
    mags = np.concatenate([r[1] for r in results])
    order = np.argsort(ids)
    merged = [(int(i), float(m)) for i, m in zip(ids[order], mags[order])]
    return merged, _report(stats, plan.worker_count, t0)


def run_cone(
    index: ZoneIndex, q: ConeQuery, plan: PartitionPlan
) -> tuple[list[tuple[int, float]], ExecutionReport]:
    """Parallel cone search; zone subsets are disjoint so the merged union
    needs no dedup."""
    _check_plan(index, plan)

    def job_for(worker: int) -> Callable[[], tuple]:
        zones = plan.zones_of(worker)

        def job() -> tuple:
            ids, sep, examined = _cone_arrays(index, q, zones)
            return (ids, sep), examined, int(len(ids))

        return job

    t0 = time.perf_counter()
    results, stats = _run_workers(
        [job_for(w) for w in range(plan.worker_count)], index.row_bytes
    )
    ids = np.concatenate([r[0] for r in results])
    sep = np.concatenate([r[1] for r in results])
    order = np.argsort(ids)
    merged = [(int(i), float(s)) for i, s in zip(ids[order], sep[order])]
    return merged, _report(stats, plan.worker_count, t0)


def run_xmatch(
    leading: ZoneIndex,
    other: ZoneIndex,
    spec: MatchSpec,
    plan: PartitionPlan,
) -> tuple[list[MatchPair], ExecutionReport]:
    """Parallel cross-match. Each worker joins its leading-zone slices
    against the full (replicated, read-only) other index; a leading object is
    owned by exactly one worker, so each pair is produced exactly once."""
    if leading.cfg != other.cfg:
        raise ValueError(
            f"catalogs indexed with different zone configurations: "
            f"{leading.cfg} vs {other.cfg}"
        )
    _check_plan(leading, plan)
    if spec.leading is not None and spec.leading != leading.name:
        raise ValueError(
            f"spec names leading catalog {spec.leading!r} but got {leading.name!r}"
        )

    def job_for(worker: int) -> Callable[[], tuple]:
        zones = plan.zones_of(worker)

        def job() -> tuple:
            parts = [
                (leading.ids[a:b], leading.ra[a:b], leading.dec[a:b])
                for a, b in (leading.zone_extent(int(z)) for z in zones)
                if b > a
            ]
            if parts:
                lead_ids = np.concatenate([p[0] for p in parts])
                lead_ra = np.concatenate([p[1] for p in parts])
                lead_dec = np.concatenate([p[2] for p in parts])
            else:
                lead_ids = np.empty(0, dtype=np.uint64)
                lead_ra = np.empty(0)
                lead_dec = np.empty(0)
            a, b, sep, candidates = _crossmatch_arrays(
                lead_ids, lead_ra, lead_dec, other, spec.radius
            )
            return (a, b, sep), candidates, int(len(a))

        return job

    t0 = time.perf_counter()
    results, stats = _run_workers(
        [job_for(w) for w in range(plan.worker_count)], other.row_bytes
    )
    lead_ids = np.concatenate([r[0] for r in results])
    other_ids = np.concatenate([r[1] for r in results])
    sep = np.concatenate([r[2] for r in results])
    pairs = _pairs_from_arrays(lead_ids, other_ids, sep)
    return pairs, _report(stats, plan.worker_count, t0)
