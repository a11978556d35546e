"""Acceptance gate: every release criterion, each printing one PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines. The
parallel-scaling criterion states a machine precondition (>= 4 physical
cores); on smaller machines it measures and reports, asserts a reduced
concurrency bound, and skips the strict 4-worker assertion.
"""

from __future__ import annotations

import io
import os
import statistics
import time

import numpy as np
import pytest

from zonequery import (
    ConeQuery,
    MatchSpec,
    ScanFilter,
    SkyPoint,
    SyntheticSpec,
    ZoneConfig,
    brute_force_crossmatch,
    build_index,
    generate_index,
    histogram,
    make_plan,
    plan_contiguous,
    plan_density,
    report,
    run_cone,
    run_scan,
    run_xmatch,
    zone_crossmatch,
    zone_of,
)
from zonequery.queries import _crossmatch_arrays
from zonequery.sphere import (
    ra_halfwidth_array,
    separation_deg,
    zone_of_array,
)
from zonequery.synth import Clustered, DecBand

from conftest import pair_keys, random_sky, scenario_pair

CFG = ZoneConfig()
ARCSEC = 1.0 / 3600.0
ARCMIN = 1.0 / 60.0
RADII = (ARCSEC, 10 * ARCSEC, ARCMIN, 30 * ARCMIN)
SEP_TOL_DEG = 1e-9


def physical_cores() -> int:
    try:
        import psutil

        cores = psutil.cpu_count(logical=False)
        if cores:
            return cores
    except ImportError:
        pass
    return os.cpu_count() or 1


def test_crossmatch_oracle_equivalence():
    """>= 200 randomized trials: zone join == brute force, exactly."""
    rng = np.random.default_rng(2005)
    kinds = ("random", "polar", "wrap", "boundary")
    trials = 200
    total_pairs = 0
    t0 = time.perf_counter()
    for trial in range(trials):
        kind = kinds[trial % len(kinds)]
        radius = RADII[(trial // len(kinds)) % len(RADII)]
        if trial < 4:  # pin the stated maximum size
            n_a = n_b = 2000
        else:
            n_a = int(np.exp(rng.uniform(np.log(50), np.log(2000))))
            n_b = int(np.exp(rng.uniform(np.log(50), np.log(2000))))
        a, b = scenario_pair(rng, kind, n_a, n_b, radius, CFG)
        got = zone_crossmatch(list(a.slices()), b, MatchSpec(radius=radius))
        expected = brute_force_crossmatch(a, b, radius)
        assert pair_keys(got) == pair_keys(expected), (
            f"trial {trial} ({kind}, r={radius * 3600:.0f} arcsec, "
            f"{n_a}x{n_b}): pair sets differ"
        )
        exp = {(p.leading_id, p.other_id): p.separation for p in expected}
        for p in got:
            assert abs(p.separation - exp[(p.leading_id, p.other_id)]) <= SEP_TOL_DEG
        total_pairs += len(got)
    elapsed = time.perf_counter() - t0
    assert total_pairs > 0
    print(
        f"PASS crossmatch-oracle-equivalence: {trials} trials, "
        f"{total_pairs} pairs verified, {elapsed:.1f}s"
    )


def test_cone_oracle_equivalence():
    """100 random cones over a 10^4-object catalog match the oracle exactly."""
    rng = np.random.default_rng(2006)
    ra, dec = random_sky(rng, 10_000)
    index = build_index("cone", CFG, np.arange(10_000, dtype=np.uint64), ra, dec)
    radii = (ARCSEC, ARCMIN, 1.0)
    t0 = time.perf_counter()
    nonempty = 0
    from zonequery import cone_search

    for i in range(100):
        center = SkyPoint(
            float(rng.uniform(0, 360)),
            float(np.degrees(np.arcsin(rng.uniform(-1, 1)))),
        )
        q = ConeQuery(center, radii[i % 3])
        got = cone_search(index, q)
        sep = separation_deg(ra, dec, center.ra, center.dec)
        keep = np.nonzero(sep <= q.radius)[0]
        expected = sorted(zip(keep.tolist(), sep[keep].tolist()))
        assert [g[0] for g in got] == [e[0] for e in expected], f"cone {i} differs"
        assert all(
            abs(g[1] - e[1]) <= SEP_TOL_DEG for g, e in zip(got, expected)
        )
        nonempty += bool(got)
    elapsed = time.perf_counter() - t0
    assert nonempty > 0
    print(f"PASS cone-oracle-equivalence: 100 cones, {elapsed:.1f}s")


def test_zone_arithmetic():
    """h = 4 arcmin gives 2700 zones; the boundary fixtures hold."""
    assert CFG.zone_count == 2700
    assert zone_of(-90.0, CFG) == 0
    assert zone_of(0.0, CFG) == 1350
    assert zone_of(90.0, CFG) == 2699
    print("PASS zone-arithmetic: zone_count=2700, fixtures {-90:0, 0:1350, +90:2699}")


def _scan_blob(rows) -> bytes:
    out = io.StringIO()
    out.write("id,mag\n")
    for i, m in rows:
        out.write(f"{i},{m!r}\n")
    return out.getvalue().encode()


def _cone_blob(rows) -> bytes:
    out = io.StringIO()
    out.write("id,separation_deg\n")
    for i, s in rows:
        out.write(f"{i},{s:.12g}\n")
    return out.getvalue().encode()


def _pairs_blob(pairs) -> bytes:
    out = io.StringIO()
    out.write("leading_id,other_id,separation_deg\n")
    for p in pairs:
        out.write(f"{p.leading_id},{p.other_id},{p.separation:.12g}\n")
    return out.getvalue().encode()


def test_parallel_determinism():
    """scan/cone/xmatch output files are byte-identical for worker counts
    {1,2,4,8} under all three strategies."""
    rng = np.random.default_rng(2007)
    ra, dec = random_sky(rng, 6000)
    mags = rng.uniform(5.0, 15.0, (6000, 1))
    leading = build_index(
        "lead", CFG, np.arange(6000, dtype=np.uint64), ra, dec, mags, ("r",)
    )
    _, other = scenario_pair(rng, "random", 10, 6000, ARCMIN, CFG)
    hist = histogram(leading)
    cone_q = ConeQuery(SkyPoint(30.0, -20.0), 3.0)
    scan_f = ScanFilter("r", 9.0, 10.0)
    spec = MatchSpec(radius=ARCMIN)

    blobs: dict[str, set[bytes]] = {"scan": set(), "cone": set(), "xmatch": set()}
    combos = 0
    for workers in (1, 2, 4, 8):
        for strategy in ("contiguous", "round_robin", "density"):
            plan = make_plan(strategy, CFG.zone_count, workers, hist)
            rows, _ = run_scan(leading, scan_f, plan)
            blobs["scan"].add(_scan_blob(rows))
            rows, _ = run_cone(leading, cone_q, plan)
            blobs["cone"].add(_cone_blob(rows))
            pairs, _ = run_xmatch(leading, other, spec, plan)
            blobs["xmatch"].add(_pairs_blob(pairs))
            combos += 1
    for name, variants in blobs.items():
        assert len(variants) == 1, f"{name} output varies across worker counts"
    print(
        f"PASS parallel-determinism: {combos} worker/strategy combos, "
        "byte-identical scan/cone/xmatch outputs"
    )


def test_parallel_scaling():
    """10^6 x 10^6 cross-match at r = 10 arcsec: >= 2x speedup with 4 workers
    on >= 4 physical cores; elapsed monotone non-increasing over {1, 2, 4}."""
    cores = physical_cores()
    leading = generate_index(SyntheticSpec(count=1_000_000, seed=81), "lead")
    other = generate_index(SyntheticSpec(count=1_000_000, seed=82), "oth")
    spec = MatchSpec(radius=10 * ARCSEC)

    medians: dict[int, float] = {}
    pair_counts = set()
    for workers in (1, 2, 4):
        plan = plan_contiguous(CFG.zone_count, workers)
        elapsed = []
        for _ in range(3):
            t0 = time.perf_counter()
            pairs, _ = run_xmatch(leading, other, spec, plan)
            elapsed.append(time.perf_counter() - t0)
            pair_counts.add(len(pairs))
        medians[workers] = statistics.median(elapsed)
    assert len(pair_counts) == 1  # identical results while we time them

    summary = ", ".join(f"{w}w={medians[w]:.3f}s" for w in (1, 2, 4))
    speedup4 = medians[1] / medians[4]
    if cores >= 4:
        assert medians[4] <= 0.5 * medians[1], (
            f"4-worker speedup {speedup4:.2f}x below 2x ({summary})"
        )
        assert medians[2] <= medians[1] and medians[4] <= medians[2], (
            f"elapsed not monotone non-increasing ({summary})"
        )
        print(
            f"PASS parallel-scaling: {summary}, speedup(4w)={speedup4:.2f}x "
            f"on {cores} physical cores"
        )
    else:
        # reduced bound: parallel execution must still beat one worker
        best = min(medians[2], medians[4])
        assert best <= 0.9 * medians[1], (
            f"no parallel gain on {cores} cores ({summary})"
        )
        print(
            f"SKIP parallel-scaling (strict): needs >= 4 physical cores, "
            f"have {cores}; measured {summary}, speedup(4w)={speedup4:.2f}x, "
            f"reduced bound passed"
        )
        pytest.skip(
            f"machine has {cores} physical cores (< 4); measured {summary}"
        )


def test_load_balance_skew():
    """Two-stripe clustered catalog: density planning stays within 1.1x of
    even; contiguous planning exceeds 1.5x and its skew shows up in the
    per-worker elapsed times."""
    stripes = Clustered((DecBand(-2.0, 2.0), DecBand(30.0, 34.0)))
    leading = generate_index(
        SyntheticSpec(count=200_000, footprint=stripes, seed=83), "clustered"
    )
    other = generate_index(SyntheticSpec(count=200_000, seed=84), "fullsky")
    hist = histogram(leading)

    dens = report(plan_density(hist, 4), hist)
    cont = report(plan_contiguous(CFG.zone_count, 4), hist)
    assert dens.imbalance <= 1.1, f"density imbalance {dens.imbalance:.3f} > 1.1"
    assert cont.imbalance >= 1.5, f"contiguous imbalance {cont.imbalance:.3f} < 1.5"

    spec = MatchSpec(radius=30 * ARCSEC)
    _, rep = run_xmatch(leading, other, spec, plan_contiguous(CFG.zone_count, 4))
    elapsed_ratio = rep.max_row.elapsed_s / rep.avg_row.elapsed_s
    assert elapsed_ratio >= 1.3, f"worker elapsed max/avg {elapsed_ratio:.2f} < 1.3"
    print(
        f"PASS load-balance-skew: density imbalance {dens.imbalance:.3f}, "
        f"contiguous {cont.imbalance:.3f}, worker elapsed max/avg "
        f"{elapsed_ratio:.2f}"
    )


def test_candidate_completeness():
    """No true pair is dropped by the pre-filter over 10^6 sampled pairs,
    including pole-clamp cases, plus an instrumented candidate-stream check."""
    rng = np.random.default_rng(2008)
    n = 1_000_000
    # half the leading points hug the poles so |dec| + r >= 90 clamps fire
    ra_a, dec_a = random_sky(rng, n // 2)
    ra_p = rng.uniform(0, 360, n - n // 2)
    z = rng.uniform(np.sin(np.radians(86.0)), 1.0, n - n // 2)
    dec_p = np.degrees(np.arcsin(z)) * rng.choice((-1.0, 1.0), n - n // 2)
    ra = np.concatenate([ra_a, ra_p])
    dec = np.concatenate([dec_a, dec_p])
    radius = rng.choice(RADII + (5.0,), n)

    theta = rng.uniform(0, 2 * np.pi, n)
    delta = np.radians(rng.uniform(0, 1, n) * radius)
    phi1 = np.radians(dec)
    sin_phi2 = np.sin(phi1) * np.cos(delta) + np.cos(phi1) * np.sin(delta) * np.cos(theta)
    sin_phi2 = np.clip(sin_phi2, -1, 1)
    lam2 = np.radians(ra) + np.arctan2(
        np.sin(theta) * np.sin(delta) * np.cos(phi1),
        np.cos(delta) - np.sin(phi1) * sin_phi2,
    )
    ra_q = np.degrees(lam2) % 360.0
    dec_q = np.clip(np.degrees(np.arcsin(sin_phi2)), -90.0, 90.0)

    sep = separation_deg(ra, dec, ra_q, dec_q)
    true_pair = sep <= radius
    n_true = int(true_pair.sum())
    assert n_true > n // 2

    # the join's pre-filter predicate, unpadded (stricter than the real one):
    # companion zone inside the dec +- r zone range, ra inside the window
    z_lo = zone_of_array(np.clip(dec - radius, -90.0, 90.0), CFG)
    z_hi = zone_of_array(np.clip(dec + radius, -90.0, 90.0), CFG)
    z_q = zone_of_array(dec_q, CFG)
    in_zone = (z_q >= z_lo) & (z_q <= z_hi)
    alpha = np.empty(n)
    for r in np.unique(radius):
        m = radius == r
        alpha[m] = ra_halfwidth_array(float(r), dec[m])
    dra = np.abs((ra_q - ra + 180.0) % 360.0 - 180.0)
    in_window = (dra <= alpha) | (alpha >= 180.0)
    dropped = true_pair & ~(in_zone & in_window)
    assert dropped.sum() == 0, f"{dropped.sum()} true pairs left the candidate set"

    clamp_cases = int((np.abs(dec) + radius >= 90.0).sum())
    assert clamp_cases > 100_000

    # instrumented stream: every oracle pair appears among actual candidates
    rng2 = np.random.default_rng(2009)
    a, b = scenario_pair(rng2, "polar", 800, 800, 2.0, CFG)
    seen: set[tuple[int, int]] = set()
    lead_ids = np.concatenate([s.ids for s in a.slices()])
    lead_ra = np.concatenate([s.ra for s in a.slices()])
    lead_dec = np.concatenate([s.dec for s in a.slices()])
    _crossmatch_arrays(
        lead_ids, lead_ra, lead_dec, b, 2.0,
        candidate_sink=lambda la, ob: seen.update(zip(la.tolist(), ob.tolist())),
    )
    oracle = pair_keys(brute_force_crossmatch(a, b, 2.0))
    assert oracle <= seen
    print(
        f"PASS candidate-completeness: {n_true} true pairs kept of {n} sampled "
        f"({clamp_cases} pole-clamp cases); instrumented stream superset of "
        f"{len(oracle)} oracle pairs"
    )
