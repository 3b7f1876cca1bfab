"""Acceptance criteria, each run at its stated scale and tolerance.

Every test records one PASS/FAIL line through the ``acceptance`` fixture; the
lines are repeated in the terminal summary. Seeds are fixed per criterion.
"""
import math
import time

import numpy as np
import pytest

from walkrange.codec import decode_range, encode_range
from walkrange.entropy import (
    boundary_lower_bound,
    codec_upper_bound,
    exact_range_entropy,
    probability_bound_violations,
    range_distribution,
    replica_statistics,
    scaling_experiment,
)
from walkrange.extractor import bit_statistics, occurrence_ratio, replica_bits
from walkrange.geometry import range_of
from walkrange.lemmas import LEMMAS, lemma_check
from walkrange.percolation import (
    exact_tree_entropy,
    expected_retained,
    intersection_ratios,
    sample_fractal,
    tree_log_prob,
)
from walkrange.potential import optional_stopping_check, potential_kernel
from walkrange.stats import band_ratio, mean_estimate
from walkrange.walk import derive_stream, simulate_walk

from oracles import fourier_kernel

pytestmark = pytest.mark.acceptance

SCALING_GRID = [2**e for e in range(10, 17)]


@pytest.fixture(scope="module")
def scaling_d2():
    return scaling_experiment(2, SCALING_GRID, 200, master_seed=4)


def test_codec_round_trips(acceptance):
    start = time.perf_counter()
    failures = 0
    for i in range(1000):
        n = (2**8, 2**10, 2**12, 2**14)[i % 4]
        R = range_of(simulate_walk(2, n, derive_stream(10_000 + i, 0)))
        data = encode_range(R, n).to_bytes()
        R2, n2 = decode_range(data)
        failures += not (n2 == n and R2 == R and encode_range(R2, n2).to_bytes() == data)
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < 120
    acceptance(1, ok, f"codec round trips: 1000 ranges, {failures} failures, {elapsed:.1f}s")
    assert ok


def test_entropy_sandwich(acceptance):
    start = time.perf_counter()
    reps = 10**4
    details, ok = [], True
    for n in (4, 6, 8, 10):
        exact = exact_range_entropy(2, n).value
        stats = np.array([replica_statistics(i, 2, n, 2) for i in range(reps)])
        lo = boundary_lower_bound(2, stats[:, 1], n)
        up = codec_upper_bound(stats[:, 2].astype(int).tolist(), n)
        good = lo.value - 3 * lo.stderr <= exact <= up.value + 3 * up.stderr
        ok &= good
        details.append(f"n={n}: {lo.value:.3f} <= {exact:.4f} <= {up.value:.2f}")
    h1 = exact_range_entropy(2, 1).value
    h2 = exact_range_entropy(1, 2).value
    ok &= h1 == 2.0 and h2 == 2.0
    elapsed = time.perf_counter() - start
    ok &= elapsed < 600
    acceptance(2, ok, "entropy sandwich " + "; ".join(details)
               + f"; H(R(1)) d=2 = {h1}, H(R(2)) d=1 = {h2}; {elapsed:.0f}s")
    assert ok


def test_probability_bound(acceptance):
    total_bad, total_checked = 0, 0
    for n in range(0, 9):
        bad, checked = probability_bound_violations(range_distribution(2, n))
        total_bad += len(bad)
        total_checked += checked
    ok = total_bad == 0
    acceptance(3, ok, f"p_n(A) <= (3/4)^(|dA|-1): {total_checked} ranges checked for n <= 8, "
               f"{total_bad} violations")
    assert ok


def test_d2_scaling(acceptance, scaling_d2):
    lower = [r.lower_ratio for r in scaling_d2]
    upper = [r.upper_ratio for r in scaling_d2]
    bl, bu = band_ratio(lower), band_ratio(upper)
    ok = bl < 4 and bu < 4
    acceptance(4, ok, f"d=2 scaling over n=2^10..2^16, 200 reps: lower*log2^2 n/n "
               f"{min(lower):.3f}..{max(lower):.3f} (band {bl:.2f}), code*log2^2 n/n "
               f"{min(upper):.2f}..{max(upper):.2f} (band {bu:.2f})")
    assert ok


def test_d3_scaling(acceptance):
    rows = scaling_experiment(3, SCALING_GRID, 200, master_seed=5)
    lower = [r.lower_ratio for r in rows]
    b = band_ratio(lower)
    ok = b < 2
    acceptance(5, ok, f"d=3 scaling: lower/n {min(lower):.4f}..{max(lower):.4f} (band {b:.3f})")
    assert ok


def test_d1_exact_logarithmic(acceptance):
    ratios = {n: exact_range_entropy(1, n).value / math.log2(n) for n in (4, 8, 16)}
    ok = all(0.5 <= v <= 3 for v in ratios.values())
    acceptance(6, ok, "d=1 H(R(n))/log2 n: " + ", ".join(f"n={n}: {v:.3f}" for n, v in ratios.items()))
    assert ok


def test_lemma_checks(acceptance):
    start = time.perf_counter()
    parts, ok = [], True
    for lemma in LEMMAS:
        rep = lemma_check(lemma, master_seed=7)
        ok &= rep.passed
        parts.append(f"{lemma} {'ok' if rep.passed else 'FAILED'} (band {rep.band:.2f})")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 1800
    acceptance(7, ok, "lemma checks: " + ", ".join(parts) + f"; {elapsed:.0f}s")
    assert ok


def test_potential_kernel(acceptance):
    a0 = potential_kernel((0, 0))
    a10 = potential_kernel((1, 0))
    a11 = potential_kernel((1, 1))
    ref10, ref11 = fourier_kernel((1, 0)), fourier_kernel((1, 1))
    direct, pred = optional_stopping_check(z=(4, 0), r=16, reps=20000, master_seed=8)
    se = math.hypot(direct.stderr, pred.stderr)
    ok = (a0 == 0.0 and abs(a10 - 1.0) <= 1e-3 and abs(a11 - 1.273) <= 1e-2
          and abs(a10 - ref10) <= 1e-3 and abs(a11 - ref11) <= 1e-2
          and abs(direct.value - pred.value) <= 3 * se)
    acceptance(8, ok, f"potential kernel: a(0)={a0}, a(1,0)={a10:.6f} (oracle {ref10:.6f}), "
               f"a(1,1)={a11:.6f} (oracle {ref11:.6f}); optional stopping {direct.value:.4f} vs "
               f"{pred.value:.4f} (3 sigma = {3 * se:.4f})")
    assert ok


def test_fractal_percolation(acceptance):
    reps = 10**4
    counts = np.array([sample_fractal(5, derive_stream(9, i)).counts for i in range(reps)], dtype=float)
    z = []
    for k in range(1, 6):
        est = mean_estimate(counts[:, k])
        z.append((est.value - expected_retained(k)) / est.stderr)
    logp = mean_estimate([tree_log_prob(sample_fractal(3, derive_stream(90, i))) for i in range(10**5)])
    exact3 = exact_tree_entropy(3)
    band = band_ratio([exact_tree_entropy(L) * L**2 / 4**L for L in range(4, 11)])
    ok = all(abs(v) <= 3 for v in z) and abs(logp.value - exact3) <= 3 * logp.stderr and band < 4
    acceptance(9, ok, "percolation: E[N_k] z-scores " + ", ".join(f"{v:+.2f}" for v in z)
               + f"; mean log-prob L=3 {logp.value:.3f} +- {logp.stderr:.3f} vs {exact3:.4f}"
               + f"; entropy*L^2/4^L band {band:.2f}")
    assert ok


def test_intersection_equivalence(acceptance):
    targets = ["point(64,64)", "point(96,64)", "point(112,16)",
               "ball(96,96,4)", "ball(96,96,8)", "ball(96,96,16)"]
    res = intersection_ratios(targets, 7, 10**4, 10)
    ok = all(r.available and 1 / 20 <= r.ratio <= 20 for r in res)
    acceptance(10, ok, "intersection L=7, 10^4 reps: "
               + ", ".join(f"{r.target} {r.ratio:.3f}" for r in res))
    assert ok


def test_extractor(acceptance):
    n = 2**12
    bits = [replica_bits(i, n, 11) for i in range(10**4)]
    ones, (rho, rho_se), counts = bit_statistics(bits)
    occ = {m: occurrence_ratio(m, reps, 12)[0] for m, reps in ((2**12, 4000), (2**14, 2000), (2**16, 1000))}
    band = band_ratio(list(occ.values()))
    ok = (abs(ones.value - 0.5) < 3 * ones.stderr and abs(rho) < 3 * rho_se and band < 4)
    acceptance(11, ok, f"extractor n=2^12, 10^4 walks, {int(counts.sum())} bits: ones {ones.value:.4f} "
               f"+- {ones.stderr:.4f}, lag-1 rho {rho:+.4f} +- {rho_se:.4f}; occurrences*log2^2 n/n "
               + ", ".join(f"{v:.4f}" for v in occ.values()) + f" (band {band:.2f})")
    assert ok
