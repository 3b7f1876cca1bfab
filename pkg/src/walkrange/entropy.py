"""Entropy of walk ranges: exact enumeration, boundary lower bound, code-length upper bound."""
from collections import defaultdict
from dataclasses import dataclass
import math

import numpy as np
from sklearn.base import BaseEstimator

from ._parallel import map_replicas
from ._validation import check_dimension, check_nonneg_int, check_reps, check_seed
from .codec import RangeBitStream, encode_range
from .geometry import RangeSet, inner_boundary, range_of
from .stats import band_ratio, mean_estimate
from .walk import derive_stream, simulate_walk

DEFAULT_BUDGET = 2**26
MAX_EXACT_N = {1: 24, 2: 12, 3: 9}


@dataclass(frozen=True)
class EntropyEstimate:
    """Entropy in bits. ``size`` is the replica count or, for ``exact``, the
    number of enumerated trajectories."""

    value: float
    kind: str  # "exact", "lower_bound" or "upper_bound"
    n: int
    d: int
    size: int
    stderr: float = 0.0


# -- exact enumeration -----------------------------------------------------------------

@dataclass(frozen=True)
class RangeDistribution:
    """Exact law of R(n): ``counts[A]`` trajectories out of ``total = (2d)^n``.

    Keys are canonical: tuples of lexicographically sorted point tuples.
    """

    d: int
    n: int
    counts: dict
    total: int

    def probability_mass(self):
        return sum(self.counts.values())

    def entropy(self):
        c = np.fromiter(self.counts.values(), dtype=np.float64, count=len(self.counts))
        p = c / float(self.total)
        return float(-(p * np.log2(p)).sum()) + 0.0


def _check_budget(d, n, budget):
    if (2 * d) ** n > budget:
        raise ValueError(
            f"refusing exact enumeration: (2d)^n = {(2 * d) ** n} trajectories exceeds "
            f"budget {budget}")
    if budget == DEFAULT_BUDGET and n > MAX_EXACT_N.get(d, n):
        raise ValueError(f"refusing exact enumeration beyond n={MAX_EXACT_N[d]} for d={d}")


def range_distribution(d, n, budget=DEFAULT_BUDGET):
    """Enumerate all ``(2d)^n`` trajectories and tally their ranges.

    Trajectories sharing (current point, range so far) are merged, so the work is
    proportional to the number of distinct such states rather than to ``(2d)^n``.
    Counts are exact integers.
    """
    d = check_dimension(d)
    n = check_nonneg_int(n, "n")
    _check_budget(d, n, budget)
    base = 2 * n + 1
    strides = [base**i for i in range(d)]
    origin = sum(n * s for s in strides)
    moves = [s * sign for s in strides for sign in (1, -1)]

    states = {(origin, frozenset((origin,))): 1}
    for _ in range(n):
        nxt = defaultdict(int)
        for (pos, visited), count in states.items():
            for mv in moves:
                p = pos + mv
                vs = visited if p in visited else visited | {p}
                nxt[(p, vs)] += count
        states = nxt

    counts = defaultdict(int)
    for (_, visited), count in states.items():
        counts[visited] += count

    def decode(code):
        out = []
        for _ in range(d):
            code, r = divmod(code, base)
            out.append(r - n)
        return tuple(out)

    canonical = {}
    for visited, count in counts.items():
        pts = sorted(decode(c) for c in visited)
        canonical[tuple(pts)] = count
    return RangeDistribution(d, n, canonical, (2 * d) ** n)


def exact_range_entropy(d, n, budget=DEFAULT_BUDGET):
    dist = range_distribution(d, n, budget)
    return EntropyEstimate(dist.entropy(), "exact", dist.n, dist.d, dist.total)


def probability_bound_violations(dist):
    """Ranges ``A`` with ``p_n(A) > (1 - 1/2d)^(|dA| - 1)``, checked in exact integers.

    Returns ``(violations, checked)`` where ``violations`` lists ``(A, count, |dA|)``.
    """
    d = dist.d
    bad = []
    for pts, count in dist.counts.items():
        b = len(inner_boundary(RangeSet(pts, dim=d)))
        # count / (2d)^n <= ((2d-1)/(2d))^(b-1)  <=>  count (2d)^(b-1) <= (2d-1)^(b-1) (2d)^n
        if count * (2 * d) ** (b - 1) > (2 * d - 1) ** (b - 1) * dist.total:
            bad.append((pts, count, b))
    return bad, len(dist.counts)


# -- two-sided bounds from samples ------------------------------------------------------

def boundary_coefficient(d):
    """Bits per boundary point: ``-log2(1 - 1/(2d))``."""
    return -math.log2(1.0 - 1.0 / (2 * d))


class BoundaryEntropyBound(BaseEstimator):
    """Lower bound ``-log2(1 - 1/2d) * E[|dR(n)| - 1]`` fitted from boundary sizes.

    Parameters
    ----------
    d : int
        Lattice dimension.
    n : int or None
        Walk length, recorded on the resulting estimate.
    """

    def __init__(self, d=2, n=None):
        self.d = d
        self.n = n

    def fit(self, X, y=None):
        d = check_dimension(self.d)
        sizes = np.asarray(X, dtype=float).reshape(-1)
        if sizes.size == 0:
            raise ValueError("no boundary-size samples")
        if sizes.size < 2:
            raise ValueError("at least two samples are needed for a standard error")
        coef = boundary_coefficient(d)
        est = mean_estimate(sizes - 1.0)
        self.value_ = coef * est.value
        self.stderr_ = coef * est.stderr
        self.estimate_ = EntropyEstimate(
            self.value_, "lower_bound", -1 if self.n is None else int(self.n), d, est.reps, self.stderr_)
        return self


class CodecEntropyBound(BaseEstimator):
    """Upper bound: mean payload length of the lossless range code.

    ``fit`` takes :class:`RangeBitStream` objects, or plain bit counts together
    with ``n``. Samples from different walk lengths are rejected.
    """

    def __init__(self, n=None):
        self.n = n

    def fit(self, X, y=None):
        items = list(X)
        if not items:
            raise ValueError("no code-length samples")
        if isinstance(items[0], RangeBitStream):
            ns = {s.n for s in items}
            if len(ns) != 1 or (self.n is not None and ns != {self.n}):
                raise ValueError(f"code lengths from mixed walk lengths {sorted(ns)}")
            n = ns.pop()
            lengths = [s.total_bits for s in items]
        else:
            if self.n is None:
                raise ValueError("n is required with plain code lengths")
            n = check_nonneg_int(self.n, "n")
            lengths = items
        est = mean_estimate(lengths)
        self.value_, self.stderr_ = est.value, est.stderr
        self.estimate_ = EntropyEstimate(est.value, "upper_bound", n, 2, est.reps, est.stderr)
        return self


def boundary_lower_bound(d, boundary_size_samples, n=None):
    return BoundaryEntropyBound(d=d, n=n).fit(boundary_size_samples).estimate_


def codec_upper_bound(code_length_samples, n=None):
    return CodecEntropyBound(n=n).fit(code_length_samples).estimate_


# -- scaling experiments ---------------------------------------------------------------

@dataclass(frozen=True)
class ScalingRow:
    n: int
    d: int
    reps: int
    lower: float
    lower_se: float
    upper: float  # nan when d != 2
    upper_se: float
    boundary_mean: float
    boundary_se: float
    range_mean: float
    range_se: float

    @property
    def lower_ratio(self):
        return self.lower * scaling_normalizer(self.d, self.n)

    @property
    def upper_ratio(self):
        return self.upper * scaling_normalizer(self.d, self.n)

    @property
    def range_ratio(self):
        """``E|R| log n / n`` for d=2, ``E|R| / n`` otherwise."""
        if self.d == 2:
            return self.range_mean * math.log2(self.n) / self.n
        return self.range_mean / self.n


def scaling_normalizer(d, n):
    """Multiplier turning bits into the order-one ratio of the scaling law."""
    if d == 1:
        return 1.0 / math.log2(n)
    if d == 2:
        return math.log2(n) ** 2 / n
    return 1.0 / n


def replica_statistics(i, d, n, master_seed, with_code=True):
    """``(|R|, |dR|, payload bits or -1)`` for replica ``i``."""
    R = range_of(simulate_walk(d, n, derive_stream(master_seed, i)))
    bits = encode_range(R, n).total_bits if (with_code and d == 2) else -1
    return len(R), len(inner_boundary(R)), bits


def scaling_row(d, n, reps, master_seed, n_jobs=1, with_code=True):
    d = check_dimension(d)
    reps = check_reps(reps, 2)
    stats = np.array(map_replicas(replica_statistics, reps, n_jobs, d=d, n=n,
                                  master_seed=master_seed, with_code=with_code), dtype=float)
    rng_est = mean_estimate(stats[:, 0])
    bnd_est = mean_estimate(stats[:, 1])
    lower = boundary_lower_bound(d, stats[:, 1], n)
    if d == 2 and with_code:
        upper = codec_upper_bound(stats[:, 2].astype(int).tolist(), n)
        up, up_se = upper.value, upper.stderr
    else:
        up, up_se = math.nan, math.nan
    return ScalingRow(n, d, reps, lower.value, lower.stderr, up, up_se,
                      bnd_est.value, bnd_est.stderr, rng_est.value, rng_est.stderr)


def scaling_experiment(d, n_grid, reps, master_seed, n_jobs=1):
    """One :class:`ScalingRow` per walk length; replica ``i`` uses stream ``i``."""
    reps = check_reps(reps, 30)
    master_seed = check_seed(master_seed)
    return [scaling_row(d, int(n), reps, master_seed, n_jobs) for n in n_grid]


def band(rows, attr):
    """max/min of a per-row ratio."""
    return band_ratio([getattr(r, attr) for r in rows])
