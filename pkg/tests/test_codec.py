import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from sklearn.base import clone

from walkrange.codec import (
    HEADER_BYTES,
    CodecError,
    FillBitMismatchError,
    HeaderError,
    HierarchyError,
    InvalidRangeError,
    RangeBitStream,
    RangeCodec,
    TruncatedPayloadError,
    code_length,
    decode_range,
    encode_range,
    mean_code_length,
)
from walkrange.entropy import boundary_lower_bound
from walkrange.geometry import (
    RangeSet,
    finite_components,
    inner_boundary,
    range_of,
    scale_schedule,
    tile_indicator,
)
from walkrange.walk import Trajectory, derive_stream, simulate_walk


def walk_range(n, seed, stream=0):
    return range_of(simulate_walk(2, n, derive_stream(seed, stream)))


def test_singleton_stream_bytes():
    s = encode_range(RangeSet([(0, 0)]), 0)
    assert s.total_bits == 9 and s.levels == 1
    assert s.to_bytes().hex() == "52575243" "01" "02" "0000000000000000" "01" "0800"
    R, n = decode_range(s)
    assert n == 0 and sorted(R) == [(0, 0)]
    # level 0 active set is the origin: centre child bit only
    assert np.unpackbits(np.frombuffer(s.payload, np.uint8))[:9].tolist() == [0, 0, 0, 0, 1, 0, 0, 0, 0]


def test_small_walk_stream_is_frozen():
    R = walk_range(10, 1)
    s = encode_range(R, 10)
    assert s.to_bytes().hex() == "525752430102000000000000000a03080c093168"
    assert s.total_bits == 37
    assert decode_range(s.to_bytes()) == (R, 10)


@given(n=st.integers(0, 3000), seed=st.integers(0, 2**64 - 1))
def test_round_trip(n, seed):
    R = walk_range(n, seed)
    s = encode_range(R, n)
    R2, n2 = decode_range(s.to_bytes())
    assert n2 == n and R2 == R
    assert RangeBitStream.from_bytes(s.to_bytes()) == s


def test_round_trip_of_rings_and_filled_regions():
    # a walk around the ring of Q((1,1),1) leaves its centre empty
    ring_walk = Trajectory(2, [0, 0, 2, 2, 1, 1, 3, 3])
    filled_walk = Trajectory(2, [0, 0, 2, 2, 1, 1, 3, 3, 0, 2])
    assert (1, 1) not in range_of(ring_walk) and (1, 1) in range_of(filled_walk)
    for traj in (ring_walk, filled_walk):
        R = range_of(traj)
        assert decode_range(encode_range(R, traj.n)) == (R, traj.n)
    hole = RangeSet([(x, y) for x in range(3) for y in range(3) if (x, y) != (1, 1)])
    filled = RangeSet([(x, y) for x in range(3) for y in range(3)])
    a, b = encode_range(hole, 4), encode_range(filled, 4)
    # identical boundaries; only the fill bit differs
    assert a.total_bits == b.total_bits and a.payload != b.payload
    assert decode_range(a)[0] == hole and decode_range(b)[0] == filled


def test_code_length_identity():
    for seed in range(15):
        n = 500 + 300 * seed
        R = walk_range(n, seed)
        B = inner_boundary(R)
        ks = scale_schedule(n)
        active = sum(tile_indicator(B, k, n).count for k in ks[1:])
        fill = int(finite_components(B).finite.sum())
        assert code_length(R, n) == 9 * active + fill


@pytest.mark.parametrize("points, n", [
    ([(1, 0), (2, 0)], 3),          # no origin
    ([(0, 0), (2, 0)], 3),          # disconnected
    ([(0, 0), (1, 0), (2, 0)], 1),  # leaves [-n, n]^2
])
def test_invalid_ranges(points, n):
    with pytest.raises(InvalidRangeError):
        encode_range(RangeSet(points), n)


def test_three_dimensional_range_rejected():
    with pytest.raises(InvalidRangeError):
        encode_range(RangeSet([(0, 0, 0)]), 0)


def test_header_errors():
    data = bytearray(encode_range(walk_range(50, 3), 50).to_bytes())
    with pytest.raises(HeaderError, match="magic"):
        decode_range(b"XWRC" + bytes(data[4:]))
    bad = bytearray(data)
    bad[4] = 2
    with pytest.raises(HeaderError, match="version"):
        decode_range(bytes(bad))
    bad = bytearray(data)
    bad[5] = 3
    with pytest.raises(HeaderError, match="dimension"):
        decode_range(bytes(bad))
    bad = bytearray(data)
    bad[-len(data) + 14] += 1
    with pytest.raises(HeaderError, match="level count"):
        decode_range(bytes(bad))
    with pytest.raises(HeaderError):
        decode_range(bytes(data[:10]))


def test_truncated_and_overlong_payloads():
    s = encode_range(walk_range(400, 2), 400)
    data = s.to_bytes()
    with pytest.raises(TruncatedPayloadError):
        decode_range(data[:HEADER_BYTES + 2])
    with pytest.raises(FillBitMismatchError):
        decode_range(data + b"\x00")
    pad = 8 * len(s.payload) - s.total_bits
    if pad:
        bad = bytearray(data)
        bad[-1] |= 1  # set a padding bit
        with pytest.raises(FillBitMismatchError):
            decode_range(bytes(bad))


def test_empty_child_mask_rejected():
    header = encode_range(RangeSet([(0, 0)]), 0).to_bytes()[:HEADER_BYTES]
    with pytest.raises(HierarchyError):
        decode_range(header + b"\x00\x00")


def test_every_single_bit_flip_is_caught_or_decodes_to_a_valid_range():
    s = encode_range(walk_range(200, 5), 200)
    data = bytearray(s.to_bytes())
    for i in range(8 * (len(data) - HEADER_BYTES)):
        bad = bytearray(data)
        bad[HEADER_BYTES + i // 8] ^= 0x80 >> (i % 8)
        try:
            R, n = decode_range(bytes(bad))
        except CodecError:
            continue
        # anything accepted must re-encode to the same stream
        assert encode_range(R, n).to_bytes() == bytes(bad)


def test_mean_code_length_examples():
    assert mean_code_length(0, 5, master_seed=1).value == 9
    small = mean_code_length(2**12, 60, master_seed=2)
    large = mean_code_length(2**14, 60, master_seed=2)
    theory = (2**12 / 12**2) / (2**14 / 14**2)
    ratio = small.value / large.value
    assert theory / 6 < ratio < theory * 6
    with pytest.raises(ValueError):
        mean_code_length(100, 1, master_seed=0)
    with pytest.raises(ValueError):
        mean_code_length(100, 5, master_seed=0, d=3)


def test_code_length_exceeds_boundary_bound():
    n, reps = 2**10, 100
    bits = mean_code_length(n, reps, master_seed=4)
    sizes = [len(inner_boundary(walk_range(n, 4, i))) for i in range(reps)]
    lower = boundary_lower_bound(2, sizes, n)
    assert bits.value > lower.value


def test_transformer_api():
    codec = RangeCodec(n=300)
    assert codec.get_params() == {"n": 300}
    assert clone(codec).n == 300
    ranges = [walk_range(300, 9, i) for i in range(5)]
    streams = codec.fit(ranges).transform(ranges)
    assert codec.levels_ == len(scale_schedule(300)) - 1
    assert codec.inverse_transform(streams) == ranges
    assert [s.total_bits for s in codec.fit_transform(ranges)] == [s.total_bits for s in streams]
    with pytest.raises(ValueError):
        RangeCodec(n=-1).fit()


def test_code_scale():
    # order n / log^2 n bits: a few thousand at n = 2^16 rather than ~n
    bits = code_length(walk_range(2**16, 7), 2**16)
    assert 0.2 * 2**16 / 16**2 < bits < 0.6 * 2**16
    assert math.isfinite(bits)
