"""Closed-form false-positive estimates for a plain iBF."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

from .core import BloomFilter, SizeError

__all__ = [
    "fpb_estimate",
    "fpa_estimate",
    "optimal_k",
    "exact_fp_probability",
    "stirling2_row",
    "EXACT_MAX_M",
    "EXACT_MAX_BALLS",
]

EXACT_MAX_M = 64
EXACT_MAX_BALLS = 512


def fpb_estimate(m: int, n: int, k: int) -> float:
    """A priori false-positive probability ``[1 - (1 - 1/m)^(k n)]^k``."""
    if m < 1 or n < 0 or k < 1:
        raise ValueError(f"invalid parameters m={m}, n={n}, k={k}")
    return (1.0 - (1.0 - 1.0 / m) ** (k * n)) ** k


def fpa_estimate(filt: BloomFilter, k: int) -> float:
    return filt.fill_factor() ** k


def optimal_k(m: int, n: int) -> int:
    """``round(ln 2 * m / n)``, never below one."""
    if n < 1:
        raise ValueError("optimal_k needs n >= 1")
    return max(1, round(math.log(2) * m / n))


@lru_cache(maxsize=None)
def stirling2_row(balls: int) -> tuple[int, ...]:
    """Stirling numbers of the second kind ``S(balls, i)`` for ``i = 0..balls``."""
    row = [1]
    for b in range(1, balls + 1):
        nxt = [0] * (b + 1)
        for i in range(1, b + 1):
            nxt[i] = i * (row[i] if i < len(row) else 0) + row[i - 1]
        row = nxt
    return tuple(row)


def exact_fp_probability(m: int, n: int, k: int) -> float:
    """Exact false-positive probability of the balls-into-bins model.

    ``kn`` balls land uniformly in ``m`` bins.  The probability that ``k``
    further balls all hit occupied bins is

        ``m^-(k(n+1)) * sum_i  i^k * i! * C(m, i) * S(kn, i)``

    evaluated here with exact rational arithmetic.
    """
    if m < 1 or n < 0 or k < 1:
        raise ValueError(f"invalid parameters m={m}, n={n}, k={k}")
    if m > EXACT_MAX_M or k * n > EXACT_MAX_BALLS:
        raise SizeError(
            f"exact computation capped at m <= {EXACT_MAX_M}, k*n <= {EXACT_MAX_BALLS}"
        )
    balls = k * n
    row = stirling2_row(balls)
    total = 0
    for i in range(1, min(m, balls) + 1):
        total += i**k * math.factorial(i) * math.comb(m, i) * row[i]
    return float(Fraction(total, m ** (k * (n + 1))))
