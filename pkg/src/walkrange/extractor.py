"""Bit extraction from mirror-image local configurations of a planar range.

The default pair is a 3x3 window surrounded by a one-cell context ring. Inside
the window the range occupies a vertical stem entering from the ring's bottom
middle cell and a single bend to the left or to the right; the other six window
cells are empty. The walk can enter the window
only through the stem, so reflecting each excursion into the window maps
trajectories producing one pattern onto trajectories producing the other with
the same probability.

Only three ring cells matter: the stem's entry cell must be occupied and the
two cells beside either bend must be empty; the rest of the ring is ignored.

Template text format: a block per pattern, rows listed top to bottom, ``X``
occupied, ``.`` empty, ``?`` ignored::

    symmetry: mirror-x
    left:
    ?????
    ?...?
    .XX..
    ?.X.?
    ??X??
    right:
    ...

Cells where ``left`` and ``right`` agree and that lie on the window frame form
the context.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .geometry import RangeSet, range_of
from .stats import binomial_estimate, mean_estimate
from .walk import derive_stream, simulate_walk

OCCUPIED, EMPTY, IGNORE = 1, 0, -1
_SYMBOLS = {"X": OCCUPIED, ".": EMPTY, "?": IGNORE}
_CHARS = {v: k for k, v in _SYMBOLS.items()}
SYMMETRIES = ("mirror-x", "mirror-y")


def _reflect(pattern, symmetry):
    # patterns are indexed [x, y]
    return pattern[::-1, :] if symmetry == "mirror-x" else pattern[:, ::-1]


def _frame(width, height):
    mask = np.zeros((width, height), dtype=bool)
    mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
    return mask


@dataclass(frozen=True)
class TemplatePair:
    """Two mirror-image cell patterns over a ``width x height`` window.

    ``left`` and ``right`` are int8 arrays indexed ``[x, y]`` (y pointing up)
    holding 1 (occupied), 0 (empty) or -1 (ignored).
    """

    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)
    symmetry: str = "mirror-x"

    def __post_init__(self):
        left = np.asarray(self.left, dtype=np.int8)
        right = np.asarray(self.right, dtype=np.int8)
        if left.ndim != 2 or left.shape != right.shape:
            raise ValueError("patterns must be 2-d arrays of equal shape")
        if not np.isin(left, (OCCUPIED, EMPTY, IGNORE)).all() or not np.isin(right, (OCCUPIED, EMPTY, IGNORE)).all():
            raise ValueError("pattern cells must be 1, 0 or -1")
        if self.symmetry not in SYMMETRIES:
            raise ValueError(f"symmetry must be one of {SYMMETRIES}")
        if np.array_equal(left, right):
            raise ValueError("left and right patterns must differ")
        if not np.array_equal(_reflect(left, self.symmetry), right):
            raise ValueError("reflecting the left pattern must give the right pattern")
        ctx = self.context_mask
        if not np.array_equal(left[ctx], right[ctx]) or not np.array_equal(_reflect(left, self.symmetry)[ctx], left[ctx]):
            raise ValueError("context must be shared and fixed by the symmetry")
        if not (left == OCCUPIED).any():
            raise ValueError("patterns need at least one occupied cell")
        left.setflags(write=False)
        right.setflags(write=False)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @property
    def width(self):
        return self.left.shape[0]

    @property
    def height(self):
        return self.left.shape[1]

    @property
    def context_mask(self):
        return _frame(self.width, self.height)

    def to_text(self):
        def block(p):
            return ["".join(_CHARS[int(p[x, y])] for x in range(self.width))
                    for y in range(self.height - 1, -1, -1)]
        return "\n".join([f"symmetry: {self.symmetry}", "left:", *block(self.left),
                          "right:", *block(self.right)]) + "\n"

    @classmethod
    def from_text(cls, text):
        blocks, current, symmetry = {}, None, "mirror-x"
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key = line.rstrip(":").strip().lower()
            if line.lower().startswith("symmetry:"):
                symmetry = line.split(":", 1)[1].strip()
            elif line.endswith(":") and key in ("left", "right"):
                if key in blocks:
                    raise ValueError(f"line {lineno}: duplicate {key!r} block")
                current = blocks.setdefault(key, [])
            elif current is None:
                raise ValueError(f"line {lineno}: pattern row before a 'left:' or 'right:' header")
            elif set(line) - set(_SYMBOLS):
                raise ValueError(f"line {lineno}: unexpected characters in {line!r}")
            else:
                current.append(line)
        if set(blocks) != {"left", "right"}:
            raise ValueError("template needs both 'left:' and 'right:' blocks")
        pats = []
        for key in ("left", "right"):
            rows = blocks[key]
            if len({len(r) for r in rows}) != 1:
                raise ValueError(f"{key!r} rows have unequal lengths")
            grid = np.array([[_SYMBOLS[c] for c in row] for row in rows], dtype=np.int8)
            pats.append(grid[::-1, :].T)  # top-to-bottom rows -> [x, y]
        return cls(pats[0], pats[1], symmetry)


_DEFAULT_TEXT = """\
symmetry: mirror-x
left:
?????
?...?
.XX..
?.X.?
??X??
right:
?????
?...?
..XX.
?.X.?
??X??
"""


def default_templates():
    """Stem-and-bend pair in a 3x3 window with a one-cell context ring."""
    return TemplatePair.from_text(_DEFAULT_TEXT)


@dataclass(frozen=True)
class ExtractionResult:
    bits: np.ndarray  # uint8, one per occurrence
    anchors: np.ndarray  # (m, 2) lower-left window corners in scan order

    def __len__(self):
        return int(self.bits.size)

    def hex(self):
        """Bits packed MSB first, zero padded, as a hex string."""
        return np.packbits(self.bits).tobytes().hex()


def _match(grid, pattern, shape):
    """Boolean map over anchor offsets where ``pattern`` matches ``grid``."""
    w, h = pattern.shape
    ok = np.ones(shape, dtype=bool)
    for x in range(w):
        for y in range(h):
            v = pattern[x, y]
            if v != IGNORE:
                cell = grid[x:x + shape[0], y:y + shape[1]]
                ok &= cell if v == OCCUPIED else ~cell
    return ok


def _raw_matches(R, tp):
    if R.dim != 2:
        raise ValueError("templates are defined for d=2")
    if not len(R):
        return np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.uint8)
    w, h = tp.width, tp.height
    (xa, ya), (xb, yb) = R.bbox
    # anchors range over every window that touches the bbox
    lo = (xa - w + 1, ya - h + 1)
    grid = R.to_grid(lo, (xb + w - 1, yb + h - 1))
    shape = (xb - xa + w, yb - ya + h)
    left = _match(grid, tp.left, shape)
    right = _match(grid, tp.right, shape)
    ix, iy = np.nonzero(left | right)  # row-major = lexicographic in (x, y)
    anchors = np.column_stack([ix + lo[0], iy + lo[1]]).astype(np.int64)
    return anchors, right[ix, iy].astype(np.uint8)


def _greedy_disjoint(anchors, w, h):
    kept = []
    recent = []  # kept anchors with x close enough to overlap later ones
    for i, (x, y) in enumerate(anchors.tolist()):
        recent = [(j, kx, ky) for j, kx, ky in recent if x - kx < w]
        if all(abs(y - ky) >= h for _, _, ky in recent):
            kept.append(i)
            recent.append((i, x, y))
    return np.array(kept, dtype=np.int64)


def scan_occurrences(R, tp=None):
    """Anchors of pairwise disjoint template occurrences, in lexicographic order."""
    return extract_bits(R, tp).anchors


def extract_bits(R, tp=None):
    """One bit per occurrence: 1 for the right pattern, 0 for the left."""
    tp = tp if tp is not None else default_templates()
    anchors, bits = _raw_matches(R, tp)
    keep = _greedy_disjoint(anchors, tp.width, tp.height)
    return ExtractionResult(bits[keep], anchors[keep].reshape(-1, 2))


def reflect_range(R, symmetry="mirror-x"):
    """Image of ``R`` under ``x -> -x`` (or ``y -> -y``)."""
    pts = R.points.copy()
    pts[:, 0 if symmetry == "mirror-x" else 1] *= -1
    return RangeSet(pts, dim=2)


class BitExtractor(BaseEstimator, TransformerMixin):
    """Transformer: ranges -> :class:`ExtractionResult`.

    Parameters
    ----------
    templates : TemplatePair or None
        Defaults to :func:`default_templates`.
    """

    def __init__(self, templates=None):
        self.templates = templates

    def fit(self, X=None, y=None):
        self.templates_ = self.templates if self.templates is not None else default_templates()
        return self

    def transform(self, X):
        tp = self.templates if self.templates is not None else default_templates()
        return [extract_bits(R, tp) for R in X]


# -- statistics over walks ----------------------------------------------------------

def replica_bits(i, n, master_seed, tp=None):
    R = range_of(simulate_walk(2, n, derive_stream(master_seed, i)))
    return extract_bits(R, tp).bits


def bit_statistics(bit_lists):
    """Bias and lag-1 autocorrelation of the pooled bits of several walks.

    Returns ``(ones, lag1, counts)``: the frequency of ones as a binomial
    estimate, ``(rho, stderr)`` for consecutive pairs of the concatenated
    sequence (stderr ``1/sqrt(pairs)``), and per-walk occurrence counts.
    """
    counts = np.array([np.size(b) for b in bit_lists], dtype=np.int64)
    pooled = np.concatenate([np.asarray(b, dtype=float).ravel() for b in bit_lists] or [np.zeros(0)])
    ones = binomial_estimate(int(pooled.sum()), max(pooled.size, 1))
    x, y = pooled[:-1], pooled[1:]
    if x.size > 2 and x.std() > 0 and y.std() > 0:
        lag1 = (float(np.corrcoef(x, y)[0, 1]), 1.0 / math.sqrt(x.size))
    else:
        lag1 = (math.nan, math.nan)
    return ones, lag1, counts


def occurrence_ratio(n, reps, master_seed, tp=None):
    """Mean occurrence count times ``log2(n)^2 / n``."""
    counts = [replica_bits(i, n, master_seed, tp).size for i in range(reps)]
    est = mean_estimate(counts)
    scale = math.log2(n) ** 2 / n
    return est.value * scale, est.stderr * scale
