"""Seedable simple random walk on Z^d.

Directions are coded ``2*i`` for ``+e_i`` and ``2*i + 1`` for ``-e_i``.
"""
from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np

from ._validation import (
    as_rational,
    check_dimension,
    check_nonneg_int,
    check_positive_int,
    check_reps,
    check_seed,
)
from .stats import Estimate, binomial_estimate, mean_estimate

_TWO64 = 2**64


class RngStream:
    """Deterministic counter-based stream of 64-bit words.

    The output is a pure function of ``(master_seed, stream_id)``: the key of a
    Philox-4x64 generator is derived from both through ``numpy.random.SeedSequence``,
    and successive draws advance the Philox counter. Distinct ``stream_id`` values
    give statistically independent streams.
    """

    def __init__(self, master_seed, stream_id=0):
        self.master_seed = check_seed(master_seed)
        self.stream_id = check_seed(stream_id, "stream_id")
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))
        self._bitgen = np.random.Philox(seq)
        self.counter = 0

    def __repr__(self):
        return (f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id}, "
                f"counter={self.counter})")

    def raw(self, size):
        """Next ``size`` raw 64-bit words."""
        size = int(size)
        out = self._bitgen.random_raw(size)
        self.counter += size
        return out

    def uniform(self, size):
        """Doubles in [0, 1) built from the top 53 bits of each word."""
        return (self.raw(size) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def integers_below(self, size, m):
        """``size`` unbiased integers in ``[0, m)``.

        Each word is reduced modulo ``m``; words at or above the largest multiple of
        ``m`` are rejected, so no word beyond those needed is consumed.
        """
        size, m = int(size), int(m)
        if m < 1:
            raise ValueError("m must be >= 1")
        limit = _TWO64 - _TWO64 % m
        if limit == _TWO64:
            return (self.raw(size) % np.uint64(m)).astype(np.int64)
        out = np.empty(size, dtype=np.int64)
        filled = 0
        lim = np.uint64(limit)
        while filled < size:
            need = size - filled
            words = self.raw(need)
            ok = words[words < lim]
            out[filled:filled + ok.size] = (ok % np.uint64(m)).astype(np.int64)
            filled += ok.size
        return out

    def directions(self, size, d):
        return self.integers_below(size, 2 * d)


def derive_stream(master_seed, stream_id):
    """Stream ``stream_id`` of the experiment seeded by ``master_seed``."""
    return RngStream(master_seed, stream_id)


def direction_table(d):
    """``(2d, d)`` table of unit steps indexed by direction code."""
    table = np.zeros((2 * d, d), dtype=np.int64)
    for i in range(d):
        table[2 * i, i] = 1
        table[2 * i + 1, i] = -1
    return table


@dataclass(frozen=True)
class Trajectory:
    """Nearest-neighbour path started at the origin."""

    dim: int
    steps: np.ndarray = field(repr=False)

    def __post_init__(self):
        steps = np.asarray(self.steps, dtype=np.uint8).reshape(-1)
        if steps.size and int(steps.max()) >= 2 * self.dim:
            raise ValueError(f"direction codes must lie in [0, {2 * self.dim})")
        steps.setflags(write=False)
        object.__setattr__(self, "steps", steps)

    @property
    def n(self):
        return int(self.steps.size)

    @property
    def points(self):
        """``(n+1, d)`` array of positions S(0), ..., S(n)."""
        pts = np.zeros((self.n + 1, self.dim), dtype=np.int64)
        np.cumsum(direction_table(self.dim)[self.steps], axis=0, out=pts[1:])
        return pts

    def __len__(self):
        return self.n + 1


def simulate_walk(d, n, rng):
    """Trajectory of ``n`` uniform nearest-neighbour steps on Z^d."""
    d = check_dimension(d)
    n = check_nonneg_int(n, "n")
    return Trajectory(d, rng.directions(n, d).astype(np.uint8))


# -- stopping times ---------------------------------------------------------------

@dataclass(frozen=True)
class StopSpec:
    """Stop condition relative to a center ``z``.

    ``kind`` is ``"hit-ball"`` (``|S-z| <= r``), ``"exit-ball"`` (``|S-z| >= r``)
    or ``"hit-point"`` (``S == z``). The squared radius is kept as an exact
    rational so that comparisons against integer squared norms never tie-break
    through floating point.
    """

    kind: str
    center: tuple
    radius_sq: Fraction = Fraction(0)

    def __post_init__(self):
        if self.kind not in ("hit-ball", "exit-ball", "hit-point"):
            raise ValueError(f"unknown stop kind {self.kind!r}")
        object.__setattr__(self, "center", tuple(int(c) for c in self.center))
        object.__setattr__(self, "radius_sq", as_rational(self.radius_sq, "radius_sq"))

    def fired(self, dist_sq):
        """Boolean mask over integer squared distances."""
        if self.kind == "hit-point":
            return dist_sq == 0
        if self.kind == "hit-ball":
            return dist_sq <= math.floor(self.radius_sq)
        return dist_sq >= math.ceil(self.radius_sq)


def _radius_sq(r, r_sq):
    if (r is None) == (r_sq is None):
        raise ValueError("give exactly one of r and r_sq")
    if r_sq is not None:
        return as_rational(r_sq, "r_sq")
    return as_rational(r) ** 2


def hit_ball(z, r=None, *, r_sq=None):
    return StopSpec("hit-ball", z, _radius_sq(r, r_sq))


def exit_ball(z, r=None, *, r_sq=None):
    return StopSpec("exit-ball", z, _radius_sq(r, r_sq))


def hit_point(z):
    return StopSpec("hit-point", z)


@dataclass(frozen=True)
class StoppingOutcome:
    kind: str  # "hit", "exit" or "timecap"
    time: int
    terminal_point: tuple
    stop_index: int = -1


_OUTCOME_KIND = {"hit-ball": "hit", "hit-point": "hit", "exit-ball": "exit"}


def run_until(d, rng, stop, cap, start=None):
    """Run a walk until the first stop condition holds or ``cap`` steps elapse.

    ``stop`` is one :class:`StopSpec` or a sequence of them; the earliest time at
    which any fires wins, ties going to the earlier entry. The walk starts at
    ``start`` (default: origin). Directions are drawn from ``rng`` in exactly the
    order :func:`simulate_walk` would draw them.
    """
    d = check_dimension(d)
    cap = check_nonneg_int(cap, "cap")
    specs = (stop,) if isinstance(stop, StopSpec) else tuple(stop)
    if not specs:
        raise ValueError("at least one stop condition is required")
    for s in specs:
        if len(s.center) != d:
            raise ValueError("stop center dimension does not match d")
    centers = np.array([s.center for s in specs], dtype=np.int64)
    pos = np.zeros(d, dtype=np.int64) if start is None else np.asarray(start, dtype=np.int64).copy()
    if pos.shape != (d,):
        raise ValueError("start dimension does not match d")

    def first_fire(points):
        # points: (m, d); returns (index into points, stop index) or None
        best = None
        for j, s in enumerate(specs):
            diff = points - centers[j]
            hits = np.flatnonzero(s.fired(np.einsum("ij,ij->i", diff, diff)))
            if hits.size and (best is None or hits[0] < best[0]):
                best = (int(hits[0]), j)
        return best

    hit0 = first_fire(pos[None, :])
    if hit0 is not None:
        return StoppingOutcome(_OUTCOME_KIND[specs[hit0[1]].kind], 0, tuple(pos.tolist()), hit0[1])

    table = direction_table(d)
    t = 0
    chunk = 64
    while t < cap:
        size = min(chunk, cap - t)
        path = pos + np.cumsum(table[rng.directions(size, d)], axis=0)
        fire = first_fire(path)
        if fire is not None:
            i, j = fire
            return StoppingOutcome(_OUTCOME_KIND[specs[j].kind], t + i + 1, tuple(path[i].tolist()), j)
        pos = path[-1]
        t += size
        chunk = min(2 * chunk, 1 << 16)
    return StoppingOutcome("timecap", cap, tuple(pos.tolist()))


# -- displacement estimates -----------------------------------------------------------

def _max_sq_norms(rng, d, n, reps, block=1 << 22):
    """Per-replica ``max_{1<=j<=n} |S(j)|^2`` for ``reps`` walks drawn from one stream."""
    table = direction_table(d)
    out = np.empty(reps, dtype=np.int64)
    per = max(1, block // max(n, 1))
    done = 0
    while done < reps:
        b = min(per, reps - done)
        steps = rng.directions(b * n, d).reshape(b, n)
        sq = np.zeros((b, n), dtype=np.int64)
        for i in range(d):
            coord = np.cumsum(table[steps, i], axis=1)
            sq += coord * coord
        out[done:done + b] = sq.max(axis=1)
        done += b
    return out


def tail_displacement_probability(n, lam, reps, rng, d=2):
    """Estimate ``Pr[max_{1<=j<=n} |S(j)| >= lam]`` with a binomial standard error."""
    n = check_positive_int(n, "n")
    reps = check_reps(reps)
    lam_sq = as_rational(lam, "lam") ** 2
    threshold = math.ceil(lam_sq)
    hits = int(np.count_nonzero(_max_sq_norms(rng, d, n, reps) >= threshold))
    return binomial_estimate(hits, reps)


def mean_max_sq_displacement(d, n, reps, master_seed):
    """Estimate ``E[max_{k<=n} |S(k)|^2]``, replica ``i`` on stream ``i``."""
    d = check_dimension(d)
    n = check_positive_int(n, "n")
    reps = check_reps(reps, 2)
    vals = [int(_max_sq_norms(derive_stream(master_seed, i), d, n, 1)[0]) for i in range(reps)]
    return mean_estimate(vals)


__all__ = [
    "Estimate",
    "RngStream",
    "StopSpec",
    "StoppingOutcome",
    "Trajectory",
    "derive_stream",
    "direction_table",
    "exit_ball",
    "hit_ball",
    "hit_point",
    "mean_max_sq_displacement",
    "run_until",
    "simulate_walk",
    "tail_displacement_probability",
]
