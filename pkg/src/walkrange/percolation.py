"""Fractal percolation on the ``2^L x 2^L`` square and its hitting probabilities.

Level ``k`` squares have side ``2^(L-k)`` and are indexed by ``(row, col)`` in
``[0, 2^k)^2``. Each retained level ``k-1`` square examines its four children in
row-major order and keeps each with probability ``k/(k+1)``; parents are
visited in row-major order, so the flags are consumed in one fixed sequence.
Level ``L`` squares are single cells, identified with lattice points
``(row, col)``.
"""
from dataclasses import dataclass, field
import math
import re

import numpy as np

from ._validation import check_positive_int, check_reps, check_seed
from .stats import Estimate, binomial_estimate
from .walk import derive_stream, direction_table

_CHILD = np.array([(0, 0), (0, 1), (1, 0), (1, 1)], dtype=np.int64)


def retention_probability(k):
    return k / (k + 1)


@dataclass(frozen=True)
class PercolationTree:
    """Retained squares per level; ``levels[k]`` is an ``(m, 2)`` array in
    traversal order (parents in order, children row-major; ``levels[0]`` is the root). ``examined[k]`` counts the flags drawn at
    level ``k`` (four per retained parent)."""

    L: int
    levels: tuple = field(repr=False)

    @property
    def side(self):
        return 1 << self.L

    @property
    def counts(self):
        return [int(a.shape[0]) for a in self.levels]

    @property
    def examined(self):
        return [0] + [4 * c for c in self.counts[:-1]]

    @property
    def leaf_squares(self):
        return self.levels[-1]

    def cells(self):
        """Boolean ``side x side`` mask of ``Q``."""
        mask = np.zeros((self.side, self.side), dtype=bool)
        leaves = self.leaf_squares
        mask[leaves[:, 0], leaves[:, 1]] = True
        return mask

    @property
    def survives(self):
        return self.leaf_squares.shape[0] > 0


def _children(parents):
    kids = (2 * parents[:, None, :] + _CHILD[None, :, :]).reshape(-1, 2)
    return kids


def sample_fractal(L, rng):
    """Sample the retention quadtree to depth ``L``."""
    L = check_positive_int(L, "L")
    levels = [np.zeros((1, 2), dtype=np.int64)]
    for k in range(1, L + 1):
        kids = _children(levels[-1])
        keep = rng.uniform(kids.shape[0]) < retention_probability(k)
        levels.append(kids[keep])
    return PercolationTree(L, tuple(levels))


def prune(tree, level, index):
    """Copy of ``tree`` with the ``index``-th retained square at ``level`` dropped,
    together with its descendants."""
    if not 1 <= level <= tree.L:
        raise ValueError("level must be in 1..L")
    node = tree.levels[level][index]
    levels = list(tree.levels[:level]) + [np.delete(tree.levels[level], index, axis=0)]
    for k in range(level + 1, tree.L + 1):
        shift = k - level
        anc = tree.levels[k] >> shift
        levels.append(tree.levels[k][~np.all(anc == node, axis=1)])
    return PercolationTree(tree.L, tuple(levels))


def tree_log_prob(tree):
    """``-log2`` of the probability of drawing exactly this tree."""
    bits = 0.0
    for k in range(1, tree.L + 1):
        p = retention_probability(k)
        kept = tree.counts[k]
        dropped = tree.examined[k] - kept
        bits -= kept * math.log2(p) + dropped * math.log2(1.0 - p)
    return bits


def binary_entropy(p):
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log2(p) + (1 - p) * math.log2(1 - p))


def exact_tree_entropy(L):
    """Entropy of the decision tree: sum over levels of the expected number of
    flags ``4^k/k`` times the binary entropy of ``k/(k+1)``."""
    L = check_positive_int(L, "L")
    return math.fsum(4**k / k * binary_entropy(retention_probability(k)) for k in range(1, L + 1))


def expected_retained(k):
    return 4**k / (k + 1)


# -- targets --------------------------------------------------------------------------

_TARGET = re.compile(r"^\s*(point|ball|rect)\s*\(([^)]*)\)\s*$")
_ARITY = {"point": 2, "ball": 3, "rect": 4}


@dataclass(frozen=True)
class TargetSet:
    """Cell set given by ``point(x,y)``, ``ball(x,y,r)`` or ``rect(x0,y0,x1,y1)``.

    Coordinates are ``(row, col)`` in the square; balls are Euclidean and
    rectangles inclusive.
    """

    kind: str
    args: tuple

    @classmethod
    def parse(cls, text):
        m = _TARGET.match(text)
        if not m:
            raise ValueError(f"bad target spec {text!r}; expected point(x,y), ball(x,y,r) or rect(x0,y0,x1,y1)")
        kind = m.group(1)
        try:
            args = tuple(int(a) for a in m.group(2).split(","))
        except ValueError:
            raise ValueError(f"target {text!r} needs integer arguments") from None
        if len(args) != _ARITY[kind]:
            raise ValueError(f"{kind} takes {_ARITY[kind]} arguments, got {len(args)}")
        return cls(kind, args)

    def __str__(self):
        return f"{self.kind}({','.join(map(str, self.args))})"

    def mask(self, side):
        """Boolean ``side x side`` mask; raises if the set is empty or leaves the square."""
        rows, cols = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
        if self.kind == "point":
            x, y = self.args
            if not (0 <= x < side and 0 <= y < side):
                raise ValueError(f"{self} lies outside the {side}x{side} square")
            mask = (rows == x) & (cols == y)
        elif self.kind == "ball":
            x, y, r = self.args
            if r < 0 or x - r < 0 or y - r < 0 or x + r >= side or y + r >= side:
                raise ValueError(f"{self} is not contained in the {side}x{side} square")
            mask = (rows - x) ** 2 + (cols - y) ** 2 <= r * r
        else:
            x0, y0, x1, y1 = self.args
            if x1 < x0 or y1 < y0:
                raise ValueError(f"{self} is empty")
            if x0 < 0 or y0 < 0 or x1 >= side or y1 >= side:
                raise ValueError(f"{self} is not contained in the {side}x{side} square")
            mask = (rows >= x0) & (rows <= x1) & (cols >= y0) & (cols <= y1)
        if not mask.any():
            raise ValueError(f"{self} is empty")
        return mask


def _as_target(t):
    return t if isinstance(t, TargetSet) else TargetSet.parse(str(t))


@dataclass(frozen=True)
class IntersectionResult:
    target: str
    L: int
    reps: int
    fractal: Estimate
    walk: Estimate
    ratio: float  # nan when either probability is estimated as 0
    ratio_se: float

    @property
    def available(self):
        return math.isfinite(self.ratio)


def replica_hits(i, L, masks, master_seed):
    """Hit indicators of ``Q`` and of ``R(n^2)`` for each target mask, replica ``i``.

    The replica's stream first samples the fractal, then drives the walk, which
    starts at the center cell ``(n/2, n/2)``.
    """
    rng = derive_stream(master_seed, i)
    side = 1 << L
    q = sample_fractal(L, rng).cells()
    steps = rng.directions(side * side, 2)
    path = np.cumsum(direction_table(2)[steps], axis=0) + side // 2
    path = np.vstack([[side // 2, side // 2], path])
    inside = np.all((path >= 0) & (path < side), axis=1)
    visited = np.zeros((side, side), dtype=bool)
    visited[path[inside, 0], path[inside, 1]] = True
    return [(bool((q & m).any()), bool((visited & m).any())) for m in masks]


def intersection_ratios(targets, L, reps, master_seed):
    """``Pr[Q meets A] / Pr[R(n^2) meets A]`` for several targets on shared replicas.

    Needs at least 1000 replicas. The ratio's standard error is by the delta
    method, treating the two estimates as independent.
    """
    L = check_positive_int(L, "L")
    reps = check_reps(reps, 1000)
    master_seed = check_seed(master_seed)
    targets = [_as_target(t) for t in targets]
    if not targets:
        raise ValueError("no target sets given")
    masks = [t.mask(1 << L) for t in targets]
    hits = np.array([replica_hits(i, L, masks, master_seed) for i in range(reps)], dtype=np.int64)
    hits = hits.reshape(reps, len(targets), 2)
    out = []
    for j, t in enumerate(targets):
        fq = binomial_estimate(int(hits[:, j, 0].sum()), reps)
        fr = binomial_estimate(int(hits[:, j, 1].sum()), reps)
        if fq.value > 0 and fr.value > 0:
            ratio = fq.value / fr.value
            se = ratio * math.sqrt((fq.stderr / fq.value) ** 2 + (fr.stderr / fr.value) ** 2)
        else:
            ratio, se = math.nan, math.nan
        out.append(IntersectionResult(str(t), L, reps, fq, fr, ratio, se))
    return out


def intersection_ratio(target, L, reps, master_seed):
    return intersection_ratios([target], L, reps, master_seed)[0]
