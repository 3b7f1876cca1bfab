import numpy as np
import pytest
from hypothesis import given, strategies as st
from sklearn.base import clone

from walkrange.extractor import (
    EMPTY,
    IGNORE,
    OCCUPIED,
    BitExtractor,
    TemplatePair,
    _raw_matches,
    bit_statistics,
    default_templates,
    extract_bits,
    occurrence_ratio,
    reflect_range,
    replica_bits,
    scan_occurrences,
)
from walkrange.geometry import RangeSet, range_of
from walkrange.walk import derive_stream, simulate_walk

# stem entering from below, bending left
LEFT_SHAPE = [(2, -1), (2, 0), (2, 1), (2, 2), (1, 2)]


def walk_range(n, seed, stream=0):
    return range_of(simulate_walk(2, n, derive_stream(seed, stream)))


def test_default_pair_invariants():
    tp = default_templates()
    assert (tp.width, tp.height) == (5, 5)
    assert np.array_equal(tp.left[::-1, :], tp.right)
    ctx = tp.context_mask
    assert ctx.sum() == 16
    assert np.array_equal(tp.left[ctx], tp.right[ctx])
    # only the stem entry and the two side cells of the ring are constrained
    assert sorted(zip(*np.nonzero((tp.left != IGNORE) & ctx))) == [(0, 2), (2, 0), (4, 2)]
    assert tp.left[2, 0] == OCCUPIED and tp.left[0, 2] == tp.left[4, 2] == EMPTY


def test_text_round_trip():
    tp = default_templates()
    again = TemplatePair.from_text(tp.to_text())
    assert np.array_equal(again.left, tp.left) and np.array_equal(again.right, tp.right)
    assert again.symmetry == tp.symmetry


@pytest.mark.parametrize("text, message", [
    ("left:\nX.\n", "both"),
    ("X.\nleft:\n", "line 1"),
    ("left:\nX.\nright:\n.Z\n", "line 4"),
    ("left:\nX.\nleft:\n.X\n", "line 3: duplicate"),
    ("left:\nX.\nright:\nX.\n", "differ"),
    ("left:\nX..\nright:\n.X\n", "shape"),
])
def test_text_errors(text, message):
    with pytest.raises(ValueError, match=message):
        TemplatePair.from_text(text)


def test_pair_validation():
    a = np.array([[1, 1], [0, 0]])
    with pytest.raises(ValueError, match="reflecting"):
        TemplatePair(a, a.T)
    with pytest.raises(ValueError, match="symmetry"):
        TemplatePair(a, a[::-1], symmetry="rotate")


def test_mirror_y_pair():
    left = np.full((3, 4), IGNORE)
    left[1, 1] = OCCUPIED
    left[1, 2] = EMPTY
    tp = TemplatePair(left, left[:, ::-1], symmetry="mirror-y")
    # the right-pattern window sits lower, so it comes first and blocks the left one
    res = extract_bits(RangeSet([(0, 0)]), tp)
    assert res.bits.tolist() == [1] and res.anchors.tolist() == [[-1, -2]]


def test_synthetic_occurrence():
    R = RangeSet(LEFT_SHAPE)
    res = extract_bits(R)
    assert res.bits.tolist() == [0]
    assert res.anchors.tolist() == [[0, 0]]
    mirrored = extract_bits(reflect_range(R))
    assert mirrored.bits.tolist() == [1]
    assert mirrored.anchors.tolist() == [[-4, 0]]


def test_blocked_context_kills_the_match():
    assert len(extract_bits(RangeSet(LEFT_SHAPE + [(0, 2)]))) == 0
    assert len(extract_bits(RangeSet(LEFT_SHAPE + [(3, 2)]))) == 0


def test_two_separated_occurrences():
    far = [(x + 10, y) for x, y in LEFT_SHAPE]
    res = extract_bits(RangeSet(LEFT_SHAPE + [(-x + 14, y + 8) for x, y in LEFT_SHAPE] + far))
    assert len(res) == 3
    assert res.hex() == format(int("".join(map(str, res.bits)) + "00000", 2), "02x")


@given(n=st.integers(50, 3000), seed=st.integers(0, 2**32))
def test_raw_matches_are_reflection_equivariant(n, seed):
    R = walk_range(n, seed)
    tp = default_templates()
    a, b = _raw_matches(R, tp)
    a2, b2 = _raw_matches(reflect_range(R), tp)
    ref = {(-x - tp.width + 1, y): 1 - bit for (x, y), bit in zip(a.tolist(), b.tolist())}
    assert ref == {tuple(p): bit for p, bit in zip(a2.tolist(), b2.tolist())}


@given(n=st.integers(50, 4000), seed=st.integers(0, 2**32))
def test_kept_windows_are_disjoint_and_maximal(n, seed):
    R = walk_range(n, seed)
    tp = default_templates()
    kept = scan_occurrences(R).tolist()
    assert kept == sorted(kept)

    def overlap(p, q):
        return abs(p[0] - q[0]) < tp.width and abs(p[1] - q[1]) < tp.height

    for i, p in enumerate(kept):
        assert not any(overlap(p, q) for q in kept[i + 1:])
    raw = _raw_matches(R, tp)[0].tolist()
    assert all(any(overlap(p, q) for q in kept) for p in raw)


def test_determinism_and_transformer():
    ranges = [walk_range(2000, 4, i) for i in range(4)]
    ext = BitExtractor()
    assert clone(ext).get_params() == {"templates": None}
    out = ext.fit(ranges).transform(ranges)
    again = BitExtractor(templates=default_templates()).fit_transform(ranges)
    assert [r.hex() for r in out] == [r.hex() for r in again]
    assert np.array_equal(replica_bits(2, 2000, 4), out[2].bits)


def test_three_dimensional_range_rejected():
    with pytest.raises(ValueError):
        extract_bits(RangeSet([(0, 0, 0)]))


def test_bit_statistics():
    ones, (rho, se), counts = bit_statistics([[0, 1, 0, 1], [1, 0], []])
    assert ones.value == 0.5 and counts.tolist() == [4, 2, 0]
    pooled = np.array([0, 1, 0, 1, 1, 0], dtype=float)
    assert rho == pytest.approx(np.corrcoef(pooled[:-1], pooled[1:])[0, 1]) and se == pytest.approx(1 / np.sqrt(5))
    ones, (rho, _), _ = bit_statistics([[1, 1]])
    assert ones.value == 1 and np.isnan(rho)


def test_bits_are_roughly_fair():
    bits = [replica_bits(i, 2**12, 8) for i in range(800)]
    ones, (rho, se), counts = bit_statistics(bits)
    assert counts.sum() > 20
    assert abs(ones.value - 0.5) <= 4 * ones.stderr
    assert abs(rho) <= 4 * se


def test_occurrence_ratio_is_order_one():
    value, se = occurrence_ratio(2**10, 100, 5)
    assert 0 < value < 1 and se > 0


def test_single_point_has_no_occurrence():
    assert len(extract_bits(RangeSet([(0, 0)]))) == 0
