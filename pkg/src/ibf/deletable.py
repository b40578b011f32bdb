"""Deletable regions: false-negative-free removal from an iBF.

The ``m_prime`` filter bits are split into ``r`` regions of
``ceil(m_prime / r)`` bits (the last region holds whatever is left).  A region
flag turns to 1 as soon as two different elements set the same bit inside
it, and bits in flagged regions are never cleared.  An element is deletable
when at least one of its bits lies in an unflagged region.
"""

from __future__ import annotations

import enum
import math
from typing import NamedTuple, Sequence

import numpy as np

from .core import BloomFilter, ConfigurationError, FilterParams, Footprint

__all__ = [
    "DeleteResult",
    "DeletableFilter",
    "DeletableStats",
    "region_index",
    "collision_flags",
    "deletable_fraction",
    "deletability_probability",
    "deletability_probability_linear",
]


class DeleteResult(enum.Enum):
    DELETED = "deleted"
    NOT_DELETABLE = "not_deletable"


class DeletableStats(NamedTuple):
    elements: float
    bits_deletable: float


def region_index(m_prime: int, r: int) -> np.ndarray:
    """Region number of every filter bit."""
    width = math.ceil(m_prime / r)
    return np.minimum(np.arange(m_prime) // width, r - 1)


def _distinct_rows(matrix: np.ndarray) -> np.ndarray:
    """Flattened indices with duplicates inside each row removed."""
    srt = np.sort(matrix, axis=1)
    keep = np.ones_like(srt, dtype=bool)
    keep[:, 1:] = srt[:, 1:] != srt[:, :-1]
    return srt[keep]


def collision_flags(
    matrix: np.ndarray, m_prime: int, r: int, preset: np.ndarray | None = None
) -> np.ndarray:
    """Region flags after inserting the rows of ``matrix`` in any order.

    A bit collides when two distinct rows name it (or a row names a bit that
    ``preset`` already marks as set).  Repeats inside one row do not count.
    """
    counts = np.bincount(_distinct_rows(np.asarray(matrix, dtype=np.int64)), minlength=m_prime)
    if preset is not None:
        counts = counts + preset.astype(np.int64)
    flags = np.zeros(r, dtype=bool)
    flags[region_index(m_prime, r)[counts >= 2]] = True
    return flags


class DeletableFilter(BloomFilter):
    """A :class:`BloomFilter` with ``r`` collision-flag regions."""

    def __init__(
        self,
        params: FilterParams,
        bits: np.ndarray | None = None,
        count: int = 0,
        region_flags: np.ndarray | None = None,
    ) -> None:
        if params.r < 1:
            raise ConfigurationError("a deletable filter needs r >= 1")
        super().__init__(params, bits, count)
        self.region_flags = (
            np.zeros(params.r, dtype=bool)
            if region_flags is None
            else np.asarray(region_flags, dtype=bool).copy()
        )
        self.regions = region_index(params.m_prime, params.r)
        self.deletions = 0

    def _guard(self) -> None:
        if self.deletions:
            raise ConfigurationError("insertion after a deletion is not supported")

    def insert(self, footprint: Footprint) -> "DeletableFilter":
        self._guard()
        idx = np.unique(self._check(footprint))
        self.region_flags[self.regions[idx[self.bits[idx]]]] = True
        self.bits[idx] = True
        self.count += 1
        return self

    def insert_many(self, footprints: np.ndarray) -> "DeletableFilter":
        self._guard()
        mat = self._check(footprints)
        if mat.ndim != 2:
            raise ConfigurationError("insert_many expects an (n, k) matrix")
        self.region_flags |= collision_flags(mat, self.size, self.params.r, preset=self.bits)
        self.bits[mat.ravel()] = True
        self.count += mat.shape[0]
        return self

    def free_mask(self, footprint: Footprint) -> np.ndarray:
        idx = self._check(footprint)
        return ~self.region_flags[self.regions[idx]]

    def is_deletable(self, footprint: Footprint) -> bool:
        return bool(self.free_mask(footprint).any())

    def delete(self, footprint: Footprint) -> DeleteResult:
        """Clear the element's bits that sit in collision-free regions."""
        idx = self._check(footprint)
        free = ~self.region_flags[self.regions[idx]]
        if not free.any():
            return DeleteResult.NOT_DELETABLE
        self.bits[idx[free]] = False
        self.deletions += 1
        return DeleteResult.DELETED

    def deletable_bits_mask(self) -> np.ndarray:
        """Set bits that live in unflagged regions."""
        return self.bits & ~self.region_flags[self.regions]

    def delete_all_deletable(self) -> "DeletableFilter":
        """Clear every bit in an unflagged region."""
        self.bits &= self.region_flags[self.regions]
        self.deletions += 1
        return self

    def copy(self) -> "DeletableFilter":
        clone = DeletableFilter(self.params, self.bits.copy(), self.count, self.region_flags)
        clone.deletions = self.deletions
        return clone

    def to_bytes(self, candidate: int = 0, region_flags: np.ndarray | None = None) -> bytes:
        flags = self.region_flags if region_flags is None else region_flags
        return super().to_bytes(candidate, flags)

    @classmethod
    def from_bytes(cls, data: bytes) -> "DeletableFilter":
        plain, _, flags = BloomFilter.parse(data)
        return cls(plain.params, plain.bits, region_flags=flags)


def deletable_fraction(
    filt: DeletableFilter, inserted: Sequence[Footprint] | np.ndarray
) -> DeletableStats:
    """Share of inserted elements that are deletable, and of set bits that are."""
    mat = np.asarray(inserted, dtype=np.int64)
    if mat.size == 0:
        raise ValueError("deletable_fraction needs the construction set")
    free = ~filt.region_flags[filt.regions[mat]]
    elements = float(free.any(axis=1).mean())
    set_bits = filt.popcount()
    bits = float(np.count_nonzero(filt.deletable_bits_mask()) / set_bits) if set_bits else 1.0
    return DeletableStats(elements, bits)


def deletability_probability(m: int, n: int, k: int, r: int) -> float:
    """``(1 - C(n, 2) * k / (m - r)^2) ** ((m - r) / r)``, clamped to ``[0, 1]``."""
    if r < 1 or m <= r:
        raise ValueError(f"need 1 <= r < m, got m={m}, r={r}")
    base = 1.0 - math.comb(n, 2) * k / (m - r) ** 2
    if base <= 0.0:
        return 0.0
    return min(1.0, base ** ((m - r) / r))


def deletability_probability_linear(m: int, n: int, k: int, r: int) -> float:
    """First-order form ``1 - C(n, 2) * k / (r (m - r))``, clamped to ``[0, 1]``."""
    if r < 1 or m <= r:
        raise ValueError(f"need 1 <= r < m, got m={m}, r={r}")
    return min(1.0, max(0.0, 1.0 - math.comb(n, 2) * k / (r * (m - r))))
