import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ibf.core import (
    BloomFilter,
    ConfigurationError,
    FilterParams,
    FprReport,
    measure_fpr,
    pack_bits,
    unpack_bits,
)


def make(m=32, k=3, **kw):
    return BloomFilter(FilterParams(m=m, k=k, **kw))


class TestParams:
    def test_m_prime_accounting(self):
        p = FilterParams(m=256, k=5, d_choices=16, r=32)
        assert p.candidate_bits == 4
        assert p.m_prime == 256 - 4 - 32

    @pytest.mark.parametrize(
        "kw",
        [
            dict(m=100, k=3),
            dict(m=0, k=3),
            dict(m=32, k=0),
            dict(m=32, k=3, d_choices=3),
            dict(m=32, k=3, r=-1),
            dict(m=32, k=3, r=32),
            dict(m=8, k=8, d_choices=2),
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            FilterParams(**kw)

    def test_k_equal_m_prime_allowed(self):
        assert FilterParams(m=8, k=8).m_prime == 8


class TestInsertQuery:
    def test_insert_into_empty(self):
        f = make().insert([1, 9, 22])
        assert set(np.flatnonzero(f.bits)) == {1, 9, 22}
        assert f.count == 1

    def test_insert_overlapping(self):
        f = make(k=2).insert([1, 9])
        f.insert([9, 30])
        assert set(np.flatnonzero(f.bits)) == {1, 9, 30}
        assert f.count == 2

    def test_insert_twice_is_idempotent(self):
        f = make().insert([1, 9, 22])
        before = f.bits.copy()
        f.insert([1, 9, 22])
        assert np.array_equal(f.bits, before)
        assert f.count == 2

    def test_query(self):
        f = make().insert([1, 9, 22])
        assert f.query([1, 9, 22])
        assert [1, 9, 22] in f
        assert not f.query([1, 9, 23])

    def test_empty_filter_rejects_everything(self):
        f = make()
        assert not any(f.query([i, (i + 5) % 32, (i + 11) % 32]) for i in range(32))

    def test_duplicates_in_footprint_act_as_a_set(self):
        f = make().insert([4, 4, 7])
        assert f.popcount() == 2
        assert f.query([7, 4, 4])

    @pytest.mark.parametrize("bad", [[0, 1, 32], [-1, 2, 3]])
    def test_out_of_range(self, bad):
        f = make()
        with pytest.raises(ConfigurationError):
            f.insert(bad)
        with pytest.raises(ConfigurationError):
            f.query(bad)

    def test_range_is_m_prime_not_m(self):
        f = make(m=32, k=3, r=4)
        with pytest.raises(ConfigurationError):
            f.insert([0, 1, 28])

    def test_bulk_matches_single(self, rng):
        mat = rng.integers(0, 256, size=(40, 5))
        a = BloomFilter(FilterParams(256, 5)).insert_many(mat)
        b = BloomFilter(FilterParams(256, 5))
        for row in mat:
            b.insert(row)
        assert np.array_equal(a.bits, b.bits) and a.count == b.count == 40
        assert a.query_many(mat).all()

    def test_insert_many_requires_matrix(self):
        with pytest.raises(ConfigurationError):
            make().insert_many(np.array([1, 2, 3]))


@settings(max_examples=10_000, deadline=None)
@given(
    st.lists(st.lists(st.integers(0, 63), min_size=4, max_size=4), min_size=1, max_size=20)
)
def test_no_false_negatives_and_monotone(footprints):
    f = BloomFilter(FilterParams(64, 4))
    prev = 0
    for fp in footprints:
        before = f.bits.copy()
        f.insert(fp)
        assert f.popcount() >= prev
        assert not (before & ~f.bits).any()
        prev = f.popcount()
    assert all(f.query(fp) for fp in footprints)
    assert f.popcount() <= 4 * len(footprints)


class TestFill:
    def test_empty(self):
        assert make().fill_factor() == 0.0
        assert make().fpa_estimate(5) == 0.0

    def test_full(self):
        f = BloomFilter(FilterParams(32, 3), np.ones(32, bool))
        assert f.fill_factor() == 1.0
        assert f.fpa_estimate() == 1.0

    def test_half(self):
        bits = np.zeros(256, bool)
        bits[::2] = True
        f = BloomFilter(FilterParams(256, 5), bits)
        assert f.fill_factor() == 0.5
        assert f.fpa_estimate(5) == pytest.approx(0.03125)

    def test_wrong_length_bits(self):
        with pytest.raises(ConfigurationError):
            BloomFilter(FilterParams(32, 3), np.zeros(31, bool))

    def test_copy_is_independent(self):
        f = make().insert([1, 2, 3])
        g = f.copy().insert([4, 5, 6])
        assert f.popcount() == 3 and g.popcount() == 6


class TestMeasure:
    def test_empty_filter(self, rng):
        rep = measure_fpr(BloomFilter(FilterParams(256, 5)), rng.integers(0, 256, (1000, 5)))
        assert rep == FprReport(1000, 0) and rep.rate == 0.0

    def test_counts(self):
        f = make().insert([1, 2, 3])
        rep = measure_fpr(f, [[1, 2, 3], [1, 2, 4], [3, 2, 1]])
        assert (rep.tested, rep.false_positives) == (3, 2)
        assert rep.rate == pytest.approx(2 / 3)

    def test_single_footprint(self):
        assert measure_fpr(make(), [1, 2, 3]).tested == 1

    def test_empty_set_is_an_error(self):
        with pytest.raises(ValueError):
            measure_fpr(make(), [])


class TestSerialization:
    def test_bit_order(self):
        bits = np.zeros(16, bool)
        bits[0] = bits[9] = True
        assert pack_bits(bits) == bytes([0x01, 0x02])
        assert np.array_equal(unpack_bits(b"\x01\x02", 16), bits)

    def test_header_layout(self):
        f = BloomFilter(FilterParams(32, 3)).insert([0, 1, 31])
        data = f.to_bytes()
        assert data[:8] == bytes([0, 32, 0, 3, 0, 0, 0, 0])
        assert data[8:] == bytes([0x03, 0, 0, 0x80])

    def test_candidate_index_is_big_endian(self):
        f = BloomFilter(FilterParams(32, 3, d_choices=8))
        env = f.envelope(candidate=6)
        assert env[:3].tolist() == [True, True, False]

    def test_round_trip(self, rng):
        p = FilterParams(256, 5, d_choices=16, r=8)
        f = BloomFilter(p).insert_many(rng.integers(0, p.m_prime, (20, 5)))
        flags = rng.random(8) < 0.5
        g, cand, got_flags = BloomFilter.parse(f.to_bytes(candidate=11, region_flags=flags))
        assert g.params == p and cand == 11
        assert np.array_equal(g.bits, f.bits) and np.array_equal(got_flags, flags)

    def test_bad_candidate(self):
        with pytest.raises(ConfigurationError):
            make().envelope(candidate=1)

    @pytest.mark.parametrize("data", [b"\x00", bytes([0, 32, 0, 3, 0, 0, 0, 0]) + b"\x00"])
    def test_truncated(self, data):
        with pytest.raises(ConfigurationError):
            BloomFilter.from_bytes(data)
