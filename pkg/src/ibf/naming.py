"""Element naming: from raw byte strings to footprints.

Two index-derivation schemes are provided:

* double hashing, ``g_i(x) = (h1(x) + i * h2(x)) mod m`` with ``h1`` the
  leading 64 bits of SHA1 and ``h2`` the leading 64 bits of MD5 (both read
  big-endian), and
* hash segmentation, where one digest is cut into ``log2(m)``-bit windows.

Digests shorter than needed are extended with ``digest(element || c)`` for a
32-bit big-endian counter ``c = 1, 2, ...``.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import zlib
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import ConfigurationError, FilterParams, SizeError

__all__ = [
    "HASH_SUITES",
    "HashSuite",
    "lookup3",
    "hash_pair",
    "hash_pairs",
    "double_hash_indices",
    "double_hash_matrix",
    "segmented_indices",
    "segmented_matrix",
    "ETagSet",
    "generate_etags",
    "etag_matrices",
    "candidate_offsets",
    "combination_etags",
    "BitHistogram",
    "bit_distribution_variance",
]

_MASK32 = 0xFFFFFFFF


def _rot(x: int, k: int) -> int:
    return ((x << k) | (x >> (32 - k))) & _MASK32


def lookup3(data: bytes, initval: int = 0) -> int:
    """Bob Jenkins' lookup3 ``hashlittle`` (byte-wise portable variant)."""
    length = len(data)
    a = b = c = (0xDEADBEEF + length + initval) & _MASK32
    pos = 0
    while length - pos > 12:
        a = (a + int.from_bytes(data[pos:pos + 4], "little")) & _MASK32
        b = (b + int.from_bytes(data[pos + 4:pos + 8], "little")) & _MASK32
        c = (c + int.from_bytes(data[pos + 8:pos + 12], "little")) & _MASK32
        a = (a - c) & _MASK32; a ^= _rot(c, 4); c = (c + b) & _MASK32
        b = (b - a) & _MASK32; b ^= _rot(a, 6); a = (a + c) & _MASK32
        c = (c - b) & _MASK32; c ^= _rot(b, 8); b = (b + a) & _MASK32
        a = (a - c) & _MASK32; a ^= _rot(c, 16); c = (c + b) & _MASK32
        b = (b - a) & _MASK32; b ^= _rot(a, 19); a = (a + c) & _MASK32
        c = (c - b) & _MASK32; c ^= _rot(b, 4); b = (b + a) & _MASK32
        pos += 12
    tail = data[pos:]
    if not tail:
        return c
    tail = tail + bytes(12 - len(tail))
    a = (a + int.from_bytes(tail[0:4], "little")) & _MASK32
    b = (b + int.from_bytes(tail[4:8], "little")) & _MASK32
    c = (c + int.from_bytes(tail[8:12], "little")) & _MASK32
    c ^= b; c = (c - _rot(b, 14)) & _MASK32
    a ^= c; a = (a - _rot(c, 11)) & _MASK32
    b ^= a; b = (b - _rot(a, 25)) & _MASK32
    c ^= b; c = (c - _rot(b, 16)) & _MASK32
    a ^= c; a = (a - _rot(c, 4)) & _MASK32
    b ^= a; b = (b - _rot(a, 14)) & _MASK32
    c ^= b; c = (c - _rot(b, 24)) & _MASK32
    return c


HASH_SUITES: dict[str, Callable[[bytes], bytes]] = {
    "md5": lambda x: hashlib.md5(x).digest(),
    "sha1": lambda x: hashlib.sha1(x).digest(),
    "sha256": lambda x: hashlib.sha256(x).digest(),
    "crc32": lambda x: zlib.crc32(x).to_bytes(4, "big"),
    "bob": lambda x: lookup3(x).to_bytes(4, "big"),
}


@dataclass(frozen=True)
class HashSuite:
    """A named digest with the counter-suffix extension rule."""

    algorithm: str = "sha1"

    def __post_init__(self) -> None:
        if self.algorithm not in HASH_SUITES:
            raise ConfigurationError(
                f"unknown hash algorithm {self.algorithm!r}; "
                f"choose from {sorted(HASH_SUITES)}"
            )

    def digest(self, data: bytes, salt: int = 0) -> bytes:
        fn = HASH_SUITES[self.algorithm]
        if salt:
            return fn(data + salt.to_bytes(4, "big"))
        return fn(data)

    def extended(self, data: bytes, nbits: int) -> bytes:
        """At least ``nbits`` of digest material for ``data``."""
        out = self.digest(data)
        counter = 1
        while len(out) * 8 < nbits:
            out += self.digest(data, counter)
            counter += 1
        return out


def hash_pair(element: bytes) -> tuple[int, int]:
    """``(h1, h2)``: leading 64 bits of SHA1 and of MD5, big-endian."""
    h1 = int.from_bytes(hashlib.sha1(element).digest()[:8], "big")
    h2 = int.from_bytes(hashlib.md5(element).digest()[:8], "big")
    return h1, h2


def hash_pairs(elements: Iterable[bytes]) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`hash_pair`; returns two ``uint64`` arrays."""
    sha1, md5 = hashlib.sha1, hashlib.md5
    h1 = [int.from_bytes(sha1(x).digest()[:8], "big") for x in elements]
    h2 = [int.from_bytes(md5(x).digest()[:8], "big") for x in elements]
    return np.array(h1, dtype=np.uint64), np.array(h2, dtype=np.uint64)


def double_hash_indices(element: bytes, k: int, m: int, base: int = 0) -> tuple[int, ...]:
    """Indices ``g_i`` for ``i`` in ``[base*k, base*k + k)``."""
    h1, h2 = hash_pair(element)
    return tuple((h1 + i * h2) % m for i in range(base * k, base * k + k))


def double_hash_matrix(
    h1: np.ndarray, h2: np.ndarray, k: int, m: int, start: int = 0
) -> np.ndarray:
    """Footprint matrix ``(len(h1), k)`` using ``i`` in ``[start, start + k)``."""
    a = (np.asarray(h1, dtype=np.uint64) % np.uint64(m)).astype(np.int64)
    b = (np.asarray(h2, dtype=np.uint64) % np.uint64(m)).astype(np.int64)
    i = np.arange(start, start + k, dtype=np.int64)
    return (a[:, None] + i[None, :] * b[:, None]) % m


def _window_bits(m: int) -> int:
    if m < 2 or m & (m - 1):
        raise ConfigurationError(f"segmentation needs a power-of-two m, got {m}")
    return m.bit_length() - 1


def segmented_indices(
    element: bytes, k: int, m: int, suite: HashSuite = HashSuite("crc32")
) -> tuple[int, ...]:
    """Cut the (extended) digest into ``k`` consecutive ``log2(m)``-bit windows."""
    w = _window_bits(m)
    material = suite.extended(element, k * w)
    value = int.from_bytes(material, "big")
    total = len(material) * 8
    mask = (1 << w) - 1
    return tuple((value >> (total - (j + 1) * w)) & mask for j in range(k))


def segmented_matrix(
    elements: Sequence[bytes], k: int, m: int, suite: HashSuite = HashSuite("crc32")
) -> np.ndarray:
    return np.array(
        [segmented_indices(x, k, m, suite) for x in elements], dtype=np.int64
    ).reshape(len(elements), k)


@dataclass(frozen=True)
class ETagSet:
    """The ``d`` alternative footprints of one element."""

    element: bytes
    candidates: tuple[tuple[int, ...], ...]

    @property
    def d(self) -> int:
        return len(self.candidates)

    @property
    def k_per_candidate(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.candidates)


def candidate_offsets(k_list: Sequence[int]) -> list[int]:
    """First double-hashing index ``i`` of each candidate (disjoint ranges)."""
    return [0, *itertools.accumulate(k_list)][:-1]


def _resolve_k_list(params: FilterParams, k_list: Sequence[int] | None) -> list[int]:
    ks = [params.k] * params.d_choices if k_list is None else list(k_list)
    if len(ks) != params.d_choices:
        raise ConfigurationError(
            f"k_list has {len(ks)} entries but d_choices={params.d_choices}"
        )
    if any(k < 1 or k > params.m_prime for k in ks):
        raise ConfigurationError(f"invalid k_list {ks}")
    return ks


def generate_etags(
    element: bytes, params: FilterParams, k_list: Sequence[int] | None = None
) -> ETagSet:
    """Derive ``d`` eTags over ``m_prime`` bits by double hashing.

    Candidate ``j`` uses the ``k_list[j]`` hash indices that follow those of
    candidate ``j - 1``, so only ``sum(k_list)`` integers are shared.  With a
    constant ``k`` this equals ``double_hash_indices(element, k, m', j)``.
    """
    ks = _resolve_k_list(params, k_list)
    h1, h2 = hash_pair(element)
    m = params.m_prime
    cands = tuple(
        tuple((h1 + i * h2) % m for i in range(start, start + k))
        for start, k in zip(candidate_offsets(ks), ks)
    )
    return ETagSet(element, cands)


def etag_matrices(
    h1: np.ndarray,
    h2: np.ndarray,
    params: FilterParams,
    k_list: Sequence[int] | None = None,
) -> list[np.ndarray]:
    """Vectorized :func:`generate_etags`: one footprint matrix per candidate."""
    ks = _resolve_k_list(params, k_list)
    return [
        double_hash_matrix(h1, h2, k, params.m_prime, start)
        for start, k in zip(candidate_offsets(ks), ks)
    ]


def combination_etags(
    element: bytes, k: int, x: int, m: int, max_candidates: int = 4096
) -> ETagSet:
    """eTags as all ``k``-subsets of ``k + x`` double-hashed positions.

    Subsets come in lexicographic order of position slots, so candidate
    numbering is stable.
    """
    if x < 0:
        raise ConfigurationError("x must be non-negative")
    d = math.comb(k + x, k)
    if d > max_candidates:
        raise SizeError(f"C({k + x}, {k}) = {d} exceeds the cap of {max_candidates}")
    base = double_hash_indices(element, k + x, m)
    cands = tuple(tuple(c) for c in itertools.combinations(base, k))
    return ETagSet(element, cands)


@dataclass
class BitHistogram:
    """How often each bit position was produced by a naming scheme."""

    counts: np.ndarray

    @classmethod
    def from_footprints(cls, footprints: np.ndarray, m: int) -> "BitHistogram":
        idx = np.asarray(footprints, dtype=np.int64).ravel()
        return cls(np.bincount(idx, minlength=m).astype(np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def bit_distribution_variance(hist: BitHistogram) -> float:
    """Sample variance of the per-bit counts divided by their mean.

    Uniform multinomial counts give a value near ``1 - 1/m``; zero means
    perfectly even counts.
    """
    counts = np.asarray(hist.counts, dtype=float)
    if counts.size < 2 or counts.sum() == 0:
        raise ValueError("need at least one sample over two or more positions")
    return float(counts.var(ddof=1) / counts.mean())
