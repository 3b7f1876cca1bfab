"""Lossless hierarchical coding of planar walk ranges.

Stream layout (``RWRC`` version 1)::

    magic  b"RWRC"           4 bytes
    version                  1 byte   (= 1)
    d                        1 byte   (= 2)
    n                        8 bytes  big-endian unsigned
    m (level count)          1 byte
    payload                  MSB-first bits, zero padded to a byte boundary

The payload walks the triadic scale schedule from the top: the single box at
level ``m`` is implicit, and each active box at level ``j+1`` sends 9 bits saying
which of its 3x3 sub-boxes at level ``j`` meet the inner boundary. Level 0 boxes
are single cells, so after the hierarchy the decoder knows the inner boundary
exactly. A final fill section sends one bit per finite complement component of
the boundary (ordered by smallest cell): 1 iff that component lies in the range.
"""
from dataclasses import dataclass
import struct

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_nonneg_int, check_reps, check_seed
from .geometry import (
    RangeSet,
    box_centers,
    finite_components,
    inner_boundary,
    is_connected,
    range_of,
    scale_schedule,
)
from .stats import mean_estimate
from .walk import derive_stream, simulate_walk

MAGIC = b"RWRC"
VERSION = 1
_HEADER = struct.Struct(">4sBBQB")
HEADER_BYTES = _HEADER.size

# sub-box offsets in lexicographic (x, then y) order
_CHILD_OFFSETS = np.array([(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)], dtype=np.int64)


class CodecError(ValueError):
    """Base class for malformed streams and unencodable input."""


class InvalidRangeError(CodecError):
    pass


class HeaderError(CodecError):
    pass


class TruncatedPayloadError(CodecError):
    pass


class FillBitMismatchError(CodecError):
    pass


class HierarchyError(CodecError):
    pass


@dataclass(frozen=True)
class RangeBitStream:
    """Encoded range. ``total_bits`` counts payload bits only, excluding padding."""

    n: int
    levels: int
    payload: bytes
    total_bits: int
    d: int = 2
    version: int = VERSION

    def to_bytes(self):
        return _HEADER.pack(MAGIC, self.version, self.d, self.n, self.levels) + self.payload

    @classmethod
    def from_bytes(cls, data):
        """Parse and fully validate a serialized stream."""
        _, n, total_bits = _decode(bytes(data))
        _, _, _, _, m = _HEADER.unpack_from(data)
        return cls(n, m, bytes(data[HEADER_BYTES:]), total_bits)


class _Keys:
    """Sorted integer keys for 2-d integer points within a known radius."""

    def __init__(self, radius):
        self.off = int(radius) + 1
        self.width = 2 * self.off + 1

    def __call__(self, pts):
        return (pts[:, 0] + self.off) * self.width + (pts[:, 1] + self.off)


def _sort_lex(pts, keyer):
    return pts[np.argsort(keyer(pts), kind="stable")]


def _check_encodable(R, n):
    if R.dim != 2:
        raise InvalidRangeError("the codec handles d=2 only")
    if not len(R) or (0, 0) not in R:
        raise InvalidRangeError("range must contain the origin")
    if np.abs(R.points).max() > n:
        raise InvalidRangeError(f"range leaves [-{n},{n}]^2")
    if not is_connected(R):
        raise InvalidRangeError("range is not connected")


def encode_range(R, n):
    """Encode the range ``R`` of an ``n``-step planar walk."""
    n = check_nonneg_int(n, "n")
    _check_encodable(R, n)
    ks = scale_schedule(n)
    m = len(ks) - 1
    if m > 255:
        raise InvalidRangeError("n too large for the level-count byte")
    keyer = _Keys(3 * ks[-1] + 2 * n + 2)
    boundary = inner_boundary(R)

    # active centers per level, lexicographically sorted
    active = [_sort_lex(np.unique(box_centers(boundary.points, k), axis=0), keyer) for k in ks]

    chunks = []
    for j in range(m - 1, -1, -1):
        parents = active[j + 1]
        side = 2 * ks[j] + 1
        children = (parents[:, None, :] + side * _CHILD_OFFSETS[None, :, :]).reshape(-1, 2)
        child_keys = keyer(children)
        level_keys = keyer(active[j])
        pos = np.searchsorted(level_keys, child_keys)
        pos[pos == level_keys.size] = 0
        chunks.append((level_keys[pos] == child_keys).astype(np.uint8))

    labeling = finite_components(boundary)
    fill = np.zeros(labeling.count, dtype=np.uint8)
    if labeling.count:
        x0, y0 = labeling.window[:2]
        inside = R.contains(np.column_stack(np.nonzero(labeling.labels)) + (x0, y0))
        lab = labeling.labels[labeling.labels > 0]
        fill_any = np.zeros(labeling.count + 1, dtype=bool)
        fill_any[lab[inside]] = True
        fill = fill_any[1:][labeling.finite].astype(np.uint8)
    chunks.append(fill)

    bits = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.uint8)
    return RangeBitStream(n, m, np.packbits(bits).tobytes(), int(bits.size))


def _decode(data):
    if len(data) < HEADER_BYTES:
        raise HeaderError("stream shorter than the header")
    magic, version, d, n, m = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise HeaderError(f"bad magic {magic!r}")
    if version != VERSION:
        raise HeaderError(f"unsupported version {version}")
    if d != 2:
        raise HeaderError(f"unsupported dimension {d}")
    ks = scale_schedule(n)
    if m != len(ks) - 1:
        raise HeaderError(f"level count {m} inconsistent with n={n}")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8, offset=HEADER_BYTES))
    keyer = _Keys(3 * ks[-1] + 2 * n + 2)

    pos = 0
    parents = np.zeros((1, 2), dtype=np.int64)
    for j in range(m - 1, -1, -1):
        need = 9 * parents.shape[0]
        if pos + need > bits.size:
            raise TruncatedPayloadError(f"payload ends inside level {j}")
        block = bits[pos:pos + need].reshape(-1, 9).astype(bool)
        pos += need
        if not block.any(axis=1).all():
            raise HierarchyError(f"active box at level {j + 1} has no active sub-box")
        side = 2 * ks[j] + 1
        children = (parents[:, None, :] + side * _CHILD_OFFSETS[None, :, :])[block]
        parents = _sort_lex(children, keyer)

    if np.abs(parents).max() > n:
        raise HierarchyError(f"boundary cell outside [-{n},{n}]^2")
    boundary = RangeSet(parents, dim=2)
    labeling = finite_components(boundary)
    n_fill = int(labeling.finite.sum())
    if pos + n_fill > bits.size:
        raise TruncatedPayloadError("payload ends inside the fill section")
    fill = bits[pos:pos + n_fill].astype(bool)
    pos += n_fill
    pad = bits[pos:]
    if pad.size >= 8 or pad.any():
        raise FillBitMismatchError(
            f"{bits.size - pos} bits left after {n_fill} fill bits; expected zero padding only")

    finite_ids = np.flatnonzero(labeling.finite) + 1
    filled = np.zeros(labeling.count + 1, dtype=bool)
    filled[finite_ids[fill]] = True
    x0, y0 = labeling.window[:2]
    ix, iy = np.nonzero(filled[labeling.labels] & (labeling.labels > 0))
    R = RangeSet(np.concatenate([parents, np.column_stack([ix + x0, iy + y0])]), dim=2)
    if inner_boundary(R) != boundary:
        raise CodecError("decoded fill bits are inconsistent with the decoded boundary")
    try:
        _check_encodable(R, n)
    except InvalidRangeError as exc:
        raise CodecError(f"decoded set is not a walk range: {exc}") from None
    return R, n, pos


def decode_range(stream):
    """Invert :func:`encode_range`; accepts a :class:`RangeBitStream` or raw bytes."""
    data = stream.to_bytes() if isinstance(stream, RangeBitStream) else bytes(stream)
    R, n, _ = _decode(data)
    return R, n


def code_length(R, n):
    """Payload bits :func:`encode_range` would spend on ``R``."""
    return encode_range(R, n).total_bits


def _replica_code_length(i, n, master_seed):
    traj = simulate_walk(2, n, derive_stream(master_seed, i))
    return encode_range(range_of(traj), n).total_bits


def mean_code_length(n, reps, master_seed, d=2):
    """Mean payload length over ``reps`` independent planar walks of length ``n``."""
    if d != 2:
        raise ValueError("the codec handles d=2 only")
    reps = check_reps(reps, 2)
    master_seed = check_seed(master_seed)
    return mean_estimate([_replica_code_length(i, n, master_seed) for i in range(reps)])


class RangeCodec(BaseEstimator, TransformerMixin):
    """Transformer wrapper: ranges -> :class:`RangeBitStream` and back.

    Parameters
    ----------
    n : int
        Walk length every transformed range comes from.
    """

    def __init__(self, n=0):
        self.n = n

    def fit(self, X=None, y=None):
        self.n_ = check_nonneg_int(self.n, "n")
        self.levels_ = len(scale_schedule(self.n_)) - 1
        return self

    def transform(self, X):
        n = check_nonneg_int(self.n, "n")
        return [encode_range(R, n) for R in X]

    def inverse_transform(self, X):
        return [decode_range(s)[0] for s in X]


__all__ = [
    "CodecError",
    "FillBitMismatchError",
    "HeaderError",
    "HierarchyError",
    "InvalidRangeError",
    "RangeBitStream",
    "RangeCodec",
    "TruncatedPayloadError",
    "code_length",
    "decode_range",
    "encode_range",
    "mean_code_length",
]
