import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from sklearn.base import clone

from walkrange.codec import encode_range
from walkrange.entropy import (
    BoundaryEntropyBound,
    CodecEntropyBound,
    boundary_coefficient,
    boundary_lower_bound,
    codec_upper_bound,
    exact_range_entropy,
    probability_bound_violations,
    range_distribution,
    replica_statistics,
    scaling_experiment,
)
from walkrange.geometry import range_of
from walkrange.walk import derive_stream, simulate_walk

from oracles import brute_force_range_law, entropy_bits

# frozen exact entropies (bits), cross-checked against brute-force enumeration where feasible
EXACT = {
    (2, 0): 0.0,
    (2, 1): 2.0,
    (1, 2): 2.0,
    (2, 4): 7.3316,
    (2, 6): 10.1424,
    (2, 8): 12.6365,
    (1, 16): 5.3626,
    (3, 6): 14.3596,
}


@pytest.mark.parametrize("d, n", sorted(EXACT))
def test_frozen_exact_entropies(d, n):
    est = exact_range_entropy(d, n)
    assert est.kind == "exact" and est.stderr == 0.0
    assert est.size == (2 * d) ** n
    assert est.value == pytest.approx(EXACT[d, n], abs=5e-5)


@pytest.mark.parametrize("d, n", [(1, 0), (1, 5), (1, 9), (2, 2), (2, 5), (2, 7), (3, 3), (3, 4), (4, 3)])
def test_enumeration_matches_brute_force(d, n):
    dist = range_distribution(d, n)
    ref = brute_force_range_law(d, n)
    assert dist.counts == dict(ref)
    assert dist.probability_mass() == dist.total == (2 * d) ** n
    assert dist.entropy() == pytest.approx(entropy_bits(list(ref.values())), abs=1e-12)


def test_one_dimensional_two_step_ranges():
    dist = range_distribution(1, 2)
    assert dist.counts == {((-2,), (-1,), (0,)): 1, ((-1,), (0,)): 1, ((0,), (1,)): 1, ((0,), (1,), (2,)): 1}


@pytest.mark.parametrize("d, n", [(1, 12), (2, 6), (3, 4)])
def test_entropy_bounded_by_log_of_paths(d, n):
    assert 0 <= exact_range_entropy(d, n).value <= n * math.log2(2 * d)


def test_enumeration_budget_refusal():
    with pytest.raises(ValueError, match="refusing"):
        exact_range_entropy(2, 13)
    with pytest.raises(ValueError, match="budget"):
        exact_range_entropy(2, 6, budget=100)
    assert exact_range_entropy(1, 3, budget=8).value > 0


@pytest.mark.parametrize("n", range(0, 7))
def test_probability_bound_small_n(n):
    bad, checked = probability_bound_violations(range_distribution(2, n))
    assert bad == [] and checked > 0


def test_probability_bound_detects_violation():
    from walkrange.entropy import RangeDistribution
    # a fake law putting all mass on a range with a large boundary
    fake = RangeDistribution(2, 4, {tuple((i, 0) for i in range(5)): 256}, 256)
    bad, _ = probability_bound_violations(fake)
    assert len(bad) == 1 and bad[0][2] == 5


# -- bounds from samples ----------------------------------------------------------------

def test_boundary_coefficient():
    assert boundary_coefficient(2) == pytest.approx(0.415037, abs=1e-6)
    assert boundary_coefficient(1) == pytest.approx(1.0)


def test_lower_bound_examples():
    est = boundary_lower_bound(2, [1, 1, 1])
    assert est.value == 0 and est.kind == "lower_bound"
    est = boundary_lower_bound(3, [3, 5], n=4)
    assert est.value == pytest.approx(boundary_coefficient(3) * 3)
    assert est.stderr == pytest.approx(boundary_coefficient(3) * 1.0)
    assert est.n == 4 and est.size == 2
    with pytest.raises(ValueError):
        boundary_lower_bound(2, [])
    with pytest.raises(ValueError):
        boundary_lower_bound(2, [4])


@given(st.lists(st.integers(1, 500), min_size=2, max_size=50), st.integers(1, 4))
def test_lower_bound_is_linear_in_mean(sizes, d):
    est = boundary_lower_bound(d, sizes)
    assert est.value == pytest.approx(boundary_coefficient(d) * (np.mean(sizes) - 1), rel=1e-12, abs=1e-12)
    assert est.value >= 0


def test_upper_bound_examples():
    est = codec_upper_bound([37, 37, 37], n=10)
    assert est.value == 37 and est.stderr == 0 and est.kind == "upper_bound"
    streams = [encode_range(range_of(simulate_walk(2, 10, derive_stream(1, i))), 10) for i in range(4)]
    est = codec_upper_bound(streams)
    assert est.value == np.mean([s.total_bits for s in streams]) and est.n == 10
    other = encode_range(range_of(simulate_walk(2, 12, derive_stream(1, 0))), 12)
    with pytest.raises(ValueError, match="mixed"):
        codec_upper_bound(streams + [other])
    with pytest.raises(ValueError):
        codec_upper_bound([5, 6])
    with pytest.raises(ValueError):
        codec_upper_bound([])


def test_estimators_follow_sklearn_conventions():
    lb = BoundaryEntropyBound(d=3, n=100)
    assert lb.get_params() == {"d": 3, "n": 100}
    assert clone(lb).set_params(d=2).d == 2
    assert not hasattr(lb, "value_")
    lb.fit([4, 6, 8])
    assert lb.value_ == pytest.approx(boundary_coefficient(3) * 5)
    ub = CodecEntropyBound(n=7).fit([10, 12])
    assert ub.value_ == 11 and ub.estimate_.n == 7


def test_desk_scale_sandwich():
    n, reps = 6, 2000
    stats = np.array([replica_statistics(i, 2, n, 77) for i in range(reps)])
    exact = exact_range_entropy(2, n).value
    lower = boundary_lower_bound(2, stats[:, 1], n)
    upper = codec_upper_bound(stats[:, 2].tolist(), n)
    assert lower.value - 3 * lower.stderr <= exact <= upper.value + 3 * upper.stderr


def test_replica_statistics_without_code():
    size, bnd, bits = replica_statistics(3, 3, 50, 1)
    assert bits == -1 and 1 <= bnd <= size <= 51


def test_scaling_experiment_rows():
    rows = scaling_experiment(2, [256, 1024], 30, master_seed=5)
    assert [r.n for r in rows] == [256, 1024]
    for r in rows:
        assert r.reps == 30
        assert r.lower <= r.upper
        assert r.lower_ratio == pytest.approx(r.lower * math.log2(r.n) ** 2 / r.n)
        assert r.range_ratio == pytest.approx(r.range_mean * math.log2(r.n) / r.n)
    rows3 = scaling_experiment(3, [256], 30, master_seed=5)
    assert math.isnan(rows3[0].upper) and rows3[0].lower_ratio == pytest.approx(rows3[0].lower / 256)
    with pytest.raises(ValueError):
        scaling_experiment(2, [256], 29, master_seed=5)
    with pytest.raises(ValueError):
        scaling_experiment(2, [256], 30, master_seed=None)


def test_scaling_is_independent_of_worker_count():
    serial = scaling_experiment(2, [300], 30, master_seed=9, n_jobs=1)
    parallel = scaling_experiment(2, [300], 30, master_seed=9, n_jobs=2)
    assert serial == parallel
