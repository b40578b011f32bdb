import itertools
import math

import numpy as np
import pytest

from ibf.core import BloomFilter, FilterParams, SizeError
from ibf.estimates import exact_fp_probability, fpa_estimate, fpb_estimate, optimal_k, stirling2_row
from ibf.naming import double_hash_matrix, hash_pairs
from ibf.datasets import gen_random_labels


@pytest.mark.parametrize("n,expected", [(12, 0.0004), (24, 0.0074), (36, 0.0331)])
def test_fpb_reference_values(n, expected):
    assert fpb_estimate(256, n, 5) == pytest.approx(expected, rel=0.05)


def test_fpb_edge_and_monotone():
    assert fpb_estimate(256, 0, 5) == 0.0
    vals = [fpb_estimate(128, n, 4) for n in range(0, 80)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("m,n,k", [(256, 36, 5), (256, 256, 1), (256, 32, 6), (10, 1000, 1)])
def test_optimal_k(m, n, k):
    assert optimal_k(m, n) == k


def test_optimal_k_needs_elements():
    with pytest.raises(ValueError):
        optimal_k(256, 0)


def test_fpa_function_matches_method():
    f = BloomFilter(FilterParams(32, 3)).insert([1, 2, 3])
    assert fpa_estimate(f, 4) == pytest.approx((3 / 32) ** 4)


def test_stirling_row():
    assert stirling2_row(4) == (0, 1, 7, 6, 1)
    assert sum(stirling2_row(5)) == 52  # Bell number


def _enumerate(m, n, k):
    """Brute force over every placement of the k(n+1) hash values."""
    hits = 0
    for cells in itertools.product(range(m), repeat=k * (n + 1)):
        members = set(cells[: k * n])
        hits += all(c in members for c in cells[k * n:])
    return hits / m ** (k * (n + 1))


@pytest.mark.parametrize("m,n,k", [(2, 1, 1), (4, 2, 1), (4, 2, 2), (5, 1, 3), (3, 3, 2), (6, 2, 2)])
def test_exact_matches_enumeration(m, n, k):
    assert exact_fp_probability(m, n, k) == pytest.approx(_enumerate(m, n, k), abs=1e-12)


def test_exact_hand_case():
    assert exact_fp_probability(2, 1, 1) == 0.5


def test_exact_monte_carlo_oracle(rng):
    m, n, k, trials = 16, 3, 2, 1_000_000
    members = rng.integers(0, m, size=(trials, k * n))
    probes = rng.integers(0, m, size=(trials, k))
    hit = np.ones(trials, bool)
    for j in range(k):
        hit &= (members == probes[:, j : j + 1]).any(axis=1)
    est = hit.mean()
    half = 2.5758 * math.sqrt(est * (1 - est) / trials)
    exact = exact_fp_probability(m, n, k)
    assert abs(exact - est) <= half


@pytest.mark.parametrize("m,n,k", [(16, 3, 2), (32, 4, 3), (64, 10, 4), (8, 2, 2), (64, 100, 5)])
def test_exact_exceeds_closed_form(m, n, k):
    p = 1 - (1 - 1 / m) ** (k * n)
    assert exact_fp_probability(m, n, k) > p**k


def test_exact_size_cap():
    with pytest.raises(SizeError):
        exact_fp_probability(128, 2, 2)
    with pytest.raises(SizeError):
        exact_fp_probability(64, 200, 3)


def test_exact_zero_elements():
    assert exact_fp_probability(16, 0, 2) == 0.0


def test_fpa_tracks_fpb_in_expectation():
    m, n, k = 256, 24, 5
    fills = []
    for t in range(400):
        h1, h2 = hash_pairs(gen_random_labels(n, seed=t))
        fills.append(BloomFilter(FilterParams(m, k)).insert_many(double_hash_matrix(h1, h2, k, m)).fill_factor())
    assert np.mean(fills) ** k == pytest.approx(fpb_estimate(m, n, k), rel=0.05)
