"""Power of choices: d candidate filters per element set.

Every element carries ``d`` eTags; candidate ``j`` is the OR of all candidate-``j``
footprints.  A selection policy then picks one candidate, whose index is sent
in the ``log2(d)`` header bits.  Ties always go to the lowest index.

The module also carries the order-statistics model for the expected fill of
the sparsest of ``d`` candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, special

from .core import BloomFilter, ConfigurationError, FilterParams
from .deletable import DeletableFilter, deletable_fraction
from .naming import ETagSet

__all__ = [
    "CandidateSet",
    "SelectionPolicy",
    "POLICIES",
    "k_distribution",
    "build_candidates",
    "build_candidates_from_matrices",
    "select",
    "expected_set_bits_moments",
    "min_fill_expectation",
    "predicted_fp_after_choice",
]

POLICIES = ("fpa", "fpr", "avoidance", "deletability-bits", "deletability-elements")


def k_distribution(lo: int, hi: int, d: int) -> list[int]:
    """Spread ``k`` evenly over ``[lo, hi]`` across ``d`` candidates, ascending.

    ``k_distribution(4, 7, 8) == [4, 4, 5, 5, 6, 6, 7, 7]``.
    """
    if lo < 1 or hi < lo or d < 1:
        raise ValueError(f"invalid k range [{lo}, {hi}] for d={d}")
    span = hi - lo + 1
    return [lo + (j * span) // d for j in range(d)]


@dataclass
class CandidateSet:
    """The ``d`` filters built from one element set, plus the member footprints."""

    params: FilterParams
    filters: list[BloomFilter]
    members: list[np.ndarray]
    chosen: int | None = None

    @property
    def d(self) -> int:
        return len(self.filters)

    @property
    def k_per_candidate(self) -> list[int]:
        return [mat.shape[1] for mat in self.members]

    def choose(self, policy: "SelectionPolicy") -> int:
        if self.chosen is None:
            self.chosen = select(self, policy)
        return self.chosen

    def to_bytes(self) -> bytes:
        """Serialize the chosen candidate with its index in the header."""
        if self.chosen is None:
            raise ConfigurationError("no candidate has been chosen yet")
        filt = self.filters[self.chosen]
        flags = getattr(filt, "region_flags", None)
        return filt.to_bytes(candidate=self.chosen, region_flags=flags)


def _per_candidate(items, d: int) -> list[np.ndarray]:
    """Accept either ``d`` footprint matrices or a list of :class:`ETagSet`."""
    items = list(items)
    if items and isinstance(items[0], ETagSet):
        if any(e.d != d for e in items):
            raise ConfigurationError("eTag sets with differing d")
        return [np.array([e.candidates[j] for e in items], dtype=np.int64) for j in range(d)]
    if len(items) != d:
        raise ConfigurationError(f"expected {d} per-candidate matrices, got {len(items)}")
    return [np.asarray(x, dtype=np.int64) for x in items]


@dataclass
class SelectionPolicy:
    """How to pick among candidates.

    ``fpr`` needs ``training`` (non-member names) and ``avoidance`` needs
    ``forbidden``; both may be given as eTag sets or as one footprint matrix
    per candidate.
    """

    kind: str = "fpa"
    training: Sequence = field(default_factory=list)
    forbidden: Sequence = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.kind not in POLICIES:
            raise ConfigurationError(f"unknown policy {self.kind!r}; choose from {POLICIES}")
        if self.kind == "fpr" and len(self.training) == 0:
            raise ConfigurationError("fpr policy needs a non-empty training set")
        if self.kind == "avoidance" and len(self.forbidden) == 0:
            raise ConfigurationError("avoidance policy needs a non-empty forbidden set")


def build_candidates_from_matrices(
    matrices: Sequence[np.ndarray], params: FilterParams
) -> CandidateSet:
    """Candidate ``j`` is the OR of the rows of ``matrices[j]``."""
    if len(matrices) != params.d_choices:
        raise ConfigurationError(
            f"{len(matrices)} candidate matrices for d_choices={params.d_choices}"
        )
    filters: list[BloomFilter] = []
    for mat in matrices:
        if params.r:
            filt: BloomFilter = DeletableFilter(params)
            filt.insert_many(mat)
        else:
            filt = BloomFilter(params).insert_many(mat)
        filters.append(filt)
    return CandidateSet(params, filters, [np.asarray(m, dtype=np.int64) for m in matrices])


def build_candidates(
    elements: Sequence[bytes], etags: Sequence[ETagSet], params: FilterParams
) -> CandidateSet:
    if len(elements) != len(etags):
        raise ConfigurationError("one eTag set per element is required")
    if not etags:
        raise ConfigurationError("cannot build candidates from an empty element set")
    return build_candidates_from_matrices(_per_candidate(etags, params.d_choices), params)


def select(cands: CandidateSet, policy: SelectionPolicy) -> int:
    """Index of the best candidate under ``policy`` (lowest index on ties)."""
    kind = policy.kind
    if kind == "fpa":
        scores = [f.fill_factor() ** k for f, k in zip(cands.filters, cands.k_per_candidate)]
        return int(np.argmin(scores))
    if kind == "fpr":
        train = _per_candidate(policy.training, cands.d)
        hits = [int(f.query_many(t).sum()) for f, t in zip(cands.filters, train)]
        return int(np.argmin(hits))
    if kind == "avoidance":
        bad = _per_candidate(policy.forbidden, cands.d)
        hits = [int(f.query_many(t).sum()) for f, t in zip(cands.filters, bad)]
        return int(np.argmin(hits))
    if not all(isinstance(f, DeletableFilter) for f in cands.filters):
        raise ConfigurationError("deletability policies need r > 0")
    fracs = [deletable_fraction(f, mem) for f, mem in zip(cands.filters, cands.members)]
    if kind == "deletability-bits":
        return int(np.argmax([f.bits_deletable for f in fracs]))
    return int(np.argmax([f.elements for f in fracs]))


# -- analytical model -----------------------------------------------------


def expected_set_bits_moments(m: int, n: int, k: int) -> tuple[float, float]:
    """Mean and variance of the number of set bits after ``n`` insertions.

    The second moment is ``m(1 - q1) + m(m - 1)(1 - 2 q1 + q2)`` with
    ``q1 = (1 - 1/m)^(kn)`` and ``q2 = (1 - 2/m)^(kn)``.
    """
    if m < 1 or n < 0 or k < 1:
        raise ValueError(f"invalid parameters m={m}, n={n}, k={k}")
    balls = k * n
    q1 = (1.0 - 1.0 / m) ** balls
    q2 = (1.0 - 2.0 / m) ** balls
    mean = m * (1.0 - q1)
    second = m * (1.0 - q1) + m * (m - 1) * (1.0 - 2.0 * q1 + q2)
    var = second - mean * mean
    # cancellation noise only; the exact variance is never negative
    return mean, max(var, 0.0)


def _min_density(s: np.ndarray | float, mu: float, sigma: float, d: int):
    z = (np.asarray(s) - mu) / sigma
    log_sf = special.log_ndtr(-z)
    log_pdf = -0.5 * z * z - 0.5 * math.log(2.0 * math.pi) - math.log(sigma)
    return np.exp(math.log(d) + (d - 1) * log_sf + log_pdf)


def min_fill_expectation(m: int, n: int, k: int, d: int) -> float:
    """Expected popcount of the sparsest of ``d`` independent candidates.

    Popcounts are modelled as normal with the moments above; the density of
    the minimum, ``d * (1 - Phi(z))^(d-1) * phi(z) / sigma``, is integrated
    over ``mu +- 10 sigma`` clipped to ``[0, m]``.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    mu, var = expected_set_bits_moments(m, n, k)
    if d == 1 or var == 0.0:
        return mu
    sigma = math.sqrt(var)
    lo, hi = max(0.0, mu - 10 * sigma), min(float(m), mu + 10 * sigma)
    value, _ = integrate.quad(
        lambda s: s * _min_density(s, mu, sigma, d),
        lo,
        hi,
        points=[mu],
        limit=200,
        epsabs=0.0,
        epsrel=1e-10,
    )
    if not math.isfinite(value):
        raise FloatingPointError(f"non-finite minimum-fill integral for m={m}, n={n}, k={k}, d={d}")
    return float(value)


def predicted_fp_after_choice(m: int, n: int, k: int, d: int) -> float:
    """``(E[s_min] / m) ** k``: false-positive estimate of the sparsest candidate."""
    return (min_fill_expectation(m, n, k, d) / m) ** k
