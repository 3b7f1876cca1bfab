"""Range sets, inner boundaries, triadic box tilings and complement components."""
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ._validation import check_nonneg_int, check_points

_FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


def _radix_keys(points, lo, ext):
    """Mixed-radix keys with the first coordinate most significant."""
    keys = np.zeros(points.shape[0], dtype=np.int64)
    for i in range(points.shape[1]):
        keys = keys * ext[i] + (points[:, i] - lo[i])
    return keys


class RangeSet:
    """Finite set of lattice points, stored lexicographically sorted.

    Parameters
    ----------
    points : array-like of shape (m, d)
        Lattice points; duplicates are collapsed.
    dim : int, optional
        Needed only when ``points`` is empty.
    """

    __slots__ = ("dim", "points", "_lo", "_ext", "_keys", "_set")

    def __init__(self, points, dim=None):
        pts = check_points(points, dim)
        self.dim = pts.shape[1]
        if pts.shape[0]:
            lo = pts.min(axis=0) - 1
            ext = pts.max(axis=0) - lo + 2
            if np.prod(ext.astype(float)) > 2.0**62:
                raise ValueError("point set is too spread out to index")
            keys, idx = np.unique(_radix_keys(pts, lo, ext), return_index=True)
            pts = pts[idx]
        else:
            lo = np.zeros(self.dim, dtype=np.int64)
            ext = np.ones(self.dim, dtype=np.int64)
            keys = np.zeros(0, dtype=np.int64)
        pts.setflags(write=False)
        self.points, self._lo, self._ext, self._keys = pts, lo, ext, keys
        self._set = None

    @property
    def bbox(self):
        """``(mins, maxs)`` tuples, or ``None`` for the empty set."""
        if not len(self):
            return None
        return tuple(self.points.min(axis=0).tolist()), tuple(self.points.max(axis=0).tolist())

    def __len__(self):
        return int(self.points.shape[0])

    def __iter__(self):
        return iter(map(tuple, self.points.tolist()))

    def __contains__(self, point):
        if self._set is None:
            self._set = frozenset(self)
        return tuple(int(c) for c in point) in self._set

    def __eq__(self, other):
        if not isinstance(other, RangeSet):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.dim, self.points.tobytes()))

    def __repr__(self):
        return f"RangeSet(dim={self.dim}, size={len(self)}, bbox={self.bbox})"

    def contains(self, query):
        """Vectorised membership for an ``(m, d)`` array of points."""
        q = np.asarray(query, dtype=np.int64).reshape(-1, self.dim)
        if not len(self):
            return np.zeros(q.shape[0], dtype=bool)
        inside = np.all((q >= self._lo) & (q < self._lo + self._ext), axis=1)
        out = np.zeros(q.shape[0], dtype=bool)
        if inside.any():
            keys = _radix_keys(q[inside], self._lo, self._ext)
            pos = np.searchsorted(self._keys, keys)
            pos[pos == self._keys.size] = 0
            out[inside] = self._keys[pos] == keys
        return out

    def to_grid(self, lo, hi):
        """Boolean occupancy grid over the inclusive box ``[lo, hi]`` (d=2 only).

        The grid is indexed ``grid[x - lo[0], y - lo[1]]``.
        """
        if self.dim != 2:
            raise ValueError("to_grid is defined for d=2 only")
        lo = np.asarray(lo, dtype=np.int64)
        hi = np.asarray(hi, dtype=np.int64)
        grid = np.zeros(tuple((hi - lo + 1).tolist()), dtype=bool)
        pts = self.points
        keep = np.all((pts >= lo) & (pts <= hi), axis=1)
        sel = pts[keep] - lo
        grid[sel[:, 0], sel[:, 1]] = True
        return grid

    def canonical(self):
        """Hashable identity: (dimension, size, sorted points)."""
        return (self.dim, len(self), tuple(self))


def range_of(traj):
    """Set of distinct points visited by ``traj``."""
    return RangeSet(traj.points)


def inner_boundary(A):
    """Points of ``A`` with at least one lattice neighbour outside ``A``."""
    pts = A.points
    mask = np.zeros(len(A), dtype=bool)
    for i in range(A.dim):
        for sign in (1, -1):
            nb = pts.copy()
            nb[:, i] += sign
            mask |= ~A.contains(nb)
    return RangeSet(pts[mask], dim=A.dim)


def scale_schedule(n):
    """Scales ``k_0 = 0, k_{j+1} = 3 k_j + 1`` up to the first one exceeding ``n``."""
    n = check_nonneg_int(n, "n")
    ks = [0]
    while ks[-1] <= n:
        ks.append(3 * ks[-1] + 1)
    return ks


def box_centers(points, k):
    """Center of the scale-``k`` tile (side ``2k+1``) containing each point."""
    side = 2 * k + 1
    return np.floor_divide(np.asarray(points, dtype=np.int64) + k, side) * side


@dataclass(frozen=True)
class TileIndicator:
    """Active scale-``k`` tiles: centers in ``(2k+1) Z^2`` within ``[-2n, 2n]^2``
    whose box meets the boundary. ``centers`` is lexicographically sorted."""

    k: int
    n: int
    centers: np.ndarray = field(repr=False)

    @property
    def count(self):
        return int(self.centers.shape[0])

    @property
    def active(self):
        return frozenset(map(tuple, self.centers.tolist()))


def tile_indicator(boundary, k, n):
    """Indicator vector of scale-``k`` tiles that meet ``boundary``."""
    k = check_nonneg_int(k, "k")
    n = check_nonneg_int(n, "n")
    if boundary.dim != 2:
        raise ValueError("tile indicators are defined for d=2")
    pts = boundary.points
    if pts.size and np.abs(pts).max() > n:
        raise ValueError(f"boundary point outside [-{n},{n}]^2 cannot come from an {n}-step walk")
    centers = RangeSet(box_centers(pts, k), dim=2).points
    if centers.size:
        centers = centers[np.all(np.abs(centers) <= 2 * n, axis=1)]
    return TileIndicator(k, n, centers)


# -- complement components ---------------------------------------------------------

@dataclass(frozen=True)
class ComponentLabeling:
    """4-connected components of a window minus a boundary set.

    ``labels[x - x0, y - y0]`` is 0 on boundary cells and ``1..count`` otherwise,
    numbered by the lexicographically smallest cell of each component.
    ``finite[i - 1]`` is False exactly for components touching the window frame.
    """

    window: tuple
    labels: np.ndarray = field(repr=False)
    finite: np.ndarray

    @property
    def count(self):
        return int(self.finite.size)

    def cells(self, label):
        x0, y0 = self.window[0], self.window[1]
        ix, iy = np.nonzero(self.labels == label)
        return np.column_stack([ix + x0, iy + y0])

    @property
    def components(self):
        return [(self.cells(i + 1), bool(self.finite[i])) for i in range(self.count)]


def _label_complement(blocked):
    """Label the free cells of a 2-d boolean grid in lexicographic order."""
    labels, count = ndimage.label(~blocked, structure=_FOUR_CONNECTED)
    if count:
        flat = np.arange(labels.size).reshape(labels.shape)
        first = ndimage.minimum(flat, labels, index=np.arange(1, count + 1)).astype(np.int64)
        order = np.argsort(first, kind="stable")
        remap = np.zeros(count + 1, dtype=labels.dtype)
        remap[order + 1] = np.arange(1, count + 1)
        labels = remap[labels]
    frame = np.zeros_like(blocked)
    frame[0, :] = frame[-1, :] = frame[:, 0] = frame[:, -1] = True
    finite = np.ones(count, dtype=bool)
    touching = np.unique(labels[frame & (labels > 0)])
    finite[touching - 1] = False
    return labels, finite


def complement_components(boundary, window):
    """Components of ``window \\ boundary``; ``window = (x0, y0, x1, y1)`` inclusive."""
    x0, y0, x1, y1 = (int(v) for v in window)
    if x1 < x0 or y1 < y0:
        raise ValueError("empty window")
    grid = boundary.to_grid((x0, y0), (x1, y1))
    if int(grid.sum()) != len(boundary):
        raise ValueError("window must contain the boundary")
    labels, finite = _label_complement(grid)
    return ComponentLabeling((x0, y0, x1, y1), labels, finite)


def finite_components(boundary):
    """Finite complement components of ``boundary`` in any window that strictly
    contains its bounding box, as a labeling over ``bbox`` grown by one cell.

    Every cell outside the bounding box is joined to the window frame, so a
    component is finite iff it stays off the frame of the grown box; ordering by
    smallest cell is the same as in the full window.
    """
    (xa, ya), (xb, yb) = boundary.bbox
    return complement_components(boundary, (xa - 1, ya - 1, xb + 1, yb + 1))


def is_connected(A):
    """True when ``A`` (d=2) is 4-connected."""
    if len(A) <= 1:
        return True
    (xa, ya), (xb, yb) = A.bbox
    _, count = ndimage.label(A.to_grid((xa, ya), (xb, yb)), structure=_FOUR_CONNECTED)
    return count == 1
