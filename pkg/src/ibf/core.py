"""The basic in-packet Bloom filter.

A filter is an ``m_prime``-bit vector (the usable part of an ``m``-bit
packet header field) plus the parameters that produced it.  Elements are
inserted as precomputed footprints: ``k`` bit positions in ``[0, m_prime)``.
Insertion is a bitwise OR, a query is a bitwise AND over those positions.

Bit index 0 is the least significant bit of the first byte whenever a
vector is serialized.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ConfigurationError",
    "SizeError",
    "FilterParams",
    "BloomFilter",
    "Footprint",
    "FprReport",
    "measure_fpr",
    "pack_bits",
    "unpack_bits",
]

Footprint = Sequence[int]

_HEADER = struct.Struct(">HHHH")


class ConfigurationError(ValueError):
    """Raised for invalid filter parameters or out-of-range indices."""


class SizeError(ValueError):
    """Raised when a computation is requested beyond its supported size."""


def _is_power_of_two(value: int) -> bool:
    return value >= 1 and value & (value - 1) == 0


@dataclass(frozen=True)
class FilterParams:
    """Configuration of one iBF family.

    ``m`` is the full header width.  The candidate index (``log2(d_choices)``
    bits) and the ``r`` region flags are carved out of it, leaving
    ``m_prime`` bits for the filter proper.
    """

    m: int
    k: int
    d_choices: int = 1
    r: int = 0

    def __post_init__(self) -> None:
        if not _is_power_of_two(self.m):
            raise ConfigurationError(f"m must be a power of two, got {self.m}")
        if self.k < 1:
            raise ConfigurationError(f"k must be >= 1, got {self.k}")
        if not _is_power_of_two(self.d_choices):
            raise ConfigurationError(
                f"d_choices must be a power of two, got {self.d_choices}"
            )
        if self.r < 0:
            raise ConfigurationError(f"r must be non-negative, got {self.r}")
        if self.m_prime < self.k:
            raise ConfigurationError(
                f"m_prime={self.m_prime} leaves no room for k={self.k} hashes"
            )
        if self.r and self.r >= self.m_prime:
            raise ConfigurationError(f"r={self.r} must be < m_prime={self.m_prime}")

    @property
    def candidate_bits(self) -> int:
        return self.d_choices.bit_length() - 1

    @property
    def m_prime(self) -> int:
        return self.m - self.candidate_bits - self.r


@dataclass(frozen=True)
class FprReport:
    tested: int
    false_positives: int

    @property
    def rate(self) -> float:
        return self.false_positives / self.tested


def pack_bits(bits: np.ndarray) -> bytes:
    """Pack a boolean vector into bytes, index 0 = LSB of byte 0."""
    return np.packbits(np.asarray(bits, dtype=bool), bitorder="little").tobytes()


def unpack_bits(data: bytes, count: int) -> np.ndarray:
    raw = np.frombuffer(data, dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little", count=count).astype(bool)


@dataclass(eq=False)
class BloomFilter:
    """An iBF bit vector.

    The filter is mutated in place by :meth:`insert`; callers that share a
    filter between threads must :meth:`copy` it first.
    """

    params: FilterParams
    bits: np.ndarray = field(default=None)  # type: ignore[assignment]
    count: int = 0

    def __post_init__(self) -> None:
        if self.bits is None:
            self.bits = np.zeros(self.params.m_prime, dtype=bool)
        else:
            self.bits = np.asarray(self.bits, dtype=bool)
            if self.bits.shape != (self.params.m_prime,):
                raise ConfigurationError(
                    f"bit vector has length {self.bits.size}, "
                    f"expected m_prime={self.params.m_prime}"
                )

    @property
    def size(self) -> int:
        return self.params.m_prime

    def _check(self, footprint: Iterable[int]) -> np.ndarray:
        idx = np.asarray(footprint, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.size):
            raise ConfigurationError(
                f"footprint {idx.tolist()} has an index outside [0, {self.size})"
            )
        return idx

    def insert(self, footprint: Footprint) -> "BloomFilter":
        self.bits[self._check(footprint)] = True
        self.count += 1
        return self

    def query(self, footprint: Footprint) -> bool:
        return bool(self.bits[self._check(footprint)].all())

    def __contains__(self, footprint: Footprint) -> bool:
        return self.query(footprint)

    def insert_many(self, footprints: np.ndarray) -> "BloomFilter":
        """Insert every row of an ``(n, k)`` index matrix."""
        idx = self._check(footprints)
        if idx.ndim != 2:
            raise ConfigurationError("insert_many expects an (n, k) matrix")
        self.bits[idx.ravel()] = True
        self.count += idx.shape[0]
        return self

    def query_many(self, footprints: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`query` over the rows of an ``(n, k)`` matrix."""
        idx = self._check(footprints)
        return self.bits[idx].all(axis=-1)

    def popcount(self) -> int:
        return int(np.count_nonzero(self.bits))

    def fill_factor(self) -> float:
        return self.popcount() / self.size

    def fpa_estimate(self, k: int | None = None) -> float:
        """Posterior false-positive estimate ``rho ** k``."""
        return self.fill_factor() ** (self.params.k if k is None else k)

    def copy(self) -> "BloomFilter":
        return BloomFilter(self.params, self.bits.copy(), self.count)

    # -- serialization ---------------------------------------------------

    def envelope(
        self, candidate: int = 0, region_flags: np.ndarray | None = None
    ) -> np.ndarray:
        """The full ``m``-bit header: candidate index, region flags, filter."""
        p = self.params
        if not 0 <= candidate < p.d_choices:
            raise ConfigurationError(f"candidate {candidate} not in [0, {p.d_choices})")
        flags = np.zeros(p.r, dtype=bool) if region_flags is None else region_flags
        cbits = [(candidate >> (p.candidate_bits - 1 - i)) & 1 for i in range(p.candidate_bits)]
        return np.concatenate(
            [np.array(cbits, dtype=bool), np.asarray(flags, dtype=bool), self.bits]
        )

    def to_bytes(self, candidate: int = 0, region_flags: np.ndarray | None = None) -> bytes:
        p = self.params
        header = _HEADER.pack(p.m, p.k, p.candidate_bits, p.r)
        return header + pack_bits(self.envelope(candidate, region_flags))

    @staticmethod
    def parse(data: bytes) -> tuple["BloomFilter", int, np.ndarray]:
        """Decode :meth:`to_bytes` output into ``(filter, candidate, flags)``."""
        if len(data) < _HEADER.size:
            raise ConfigurationError("truncated filter header")
        m, k, cbits, r = _HEADER.unpack_from(data)
        params = FilterParams(m=m, k=k, d_choices=1 << cbits, r=r)
        body = data[_HEADER.size:]
        if len(body) != math.ceil(m / 8):
            raise ConfigurationError(
                f"filter body has {len(body)} bytes, expected {math.ceil(m / 8)}"
            )
        env = unpack_bits(body, m)
        candidate = 0
        for bit in env[:cbits]:
            candidate = (candidate << 1) | int(bit)
        flags = env[cbits:cbits + r]
        return BloomFilter(params, env[cbits + r:].copy()), candidate, flags.copy()

    @classmethod
    def from_bytes(cls, data: bytes) -> "BloomFilter":
        return cls.parse(data)[0]


def measure_fpr(filt: BloomFilter, non_members: Sequence[Footprint] | np.ndarray) -> FprReport:
    """Count how many non-member footprints the filter wrongly accepts."""
    matrix = np.asarray(non_members, dtype=np.int64)
    if matrix.size == 0:
        raise ValueError("measure_fpr needs at least one non-member")
    if matrix.ndim == 1:
        matrix = matrix[None, :]
    hits = int(np.count_nonzero(filt.query_many(matrix)))
    return FprReport(tested=matrix.shape[0], false_positives=hits)
