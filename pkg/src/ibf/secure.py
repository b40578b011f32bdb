"""Packet- and time-bound iBF construction.

An element is named by an ``m``-bit value ``K`` rather than a footprint.  To
set or check it in a packet with invariant ``I`` the two are mixed:

1. ``O = K xor I`` (``xor S_epoch`` as well in the keyed variant);
2. ``O`` is cut into ``k`` segments of about ``m/k`` bits;
3. each segment is laid out as ``c = ceil(m / (k log2 m))`` rows of
   ``log2 m`` bits, an incomplete last row being filled by cycling through
   the segment's own leading bits;
4. the rows are XOR-folded into one ``log2 m``-bit index, which is then
   rotated left by ``d mod log2 m`` bits.

The rotation in step 4 selects one of up to ``log2 m`` candidate namings.

Bit strings are read most-significant bit first: bit 0 of ``O`` is the top
bit of the integer.
"""

from __future__ import annotations

import hashlib
import hmac
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import BloomFilter, ConfigurationError, FilterParams
from .naming import HashSuite

__all__ = [
    "element_name",
    "secure_indices",
    "keyed_secure_indices",
    "SecretSchedule",
    "SecureVerifier",
    "build_secure_filter",
    "density_threshold",
    "density_check",
    "pairwise_hamming",
    "bit_matrix",
    "RandomnessReport",
    "randomness_report",
]


def _log2(m: int) -> int:
    if m < 2 or m & (m - 1):
        raise ConfigurationError(f"m must be a power of two, got {m}")
    return m.bit_length() - 1


def element_name(element: bytes, m: int, suite: HashSuite = HashSuite("sha256")) -> int:
    """The ``m``-bit element name ``K``: the leading ``m`` digest bits."""
    material = suite.extended(element, m)
    return int.from_bytes(material, "big") >> (len(material) * 8 - m)


def _rotl(x: int, s: int, width: int) -> int:
    s %= width
    mask = (1 << width) - 1
    return ((x << s) | (x >> (width - s))) & mask


def _fold_segment(seg: int, length: int, w: int, rows: int) -> int:
    total = rows * w
    padded, have = seg, length
    while have < total:
        take = min(length, total - have)
        padded = (padded << take) | (seg >> (length - take))
        have += take
    out = 0
    for row in range(rows):
        out ^= (padded >> (total - (row + 1) * w)) & ((1 << w) - 1)
    return out


def _mix(o: int, d: int, m: int, k: int) -> tuple[int, ...]:
    w = _log2(m)
    if not 1 <= k <= m:
        raise ConfigurationError(f"k must be in [1, m], got {k}")
    o &= (1 << m) - 1
    rows = math.ceil(m / (k * w))
    out = []
    for j in range(k):
        start, end = (j * m) // k, ((j + 1) * m) // k
        length = end - start
        seg = (o >> (m - end)) & ((1 << length) - 1)
        out.append(_rotl(_fold_segment(seg, length, w, rows), d, w))
    return tuple(out)


def secure_indices(K: int, I: int, d: int, m: int, k: int) -> tuple[int, ...]:
    """``k`` filter positions for name ``K`` bound to packet invariant ``I``."""
    return _mix(K ^ I, d, m, k)


@dataclass(frozen=True)
class SecretSchedule:
    """Epoch-indexed shared secrets ``S_i = HMAC-SHA256(seed, i)``.

    Epoch ``i`` covers ``[start + i * epoch_length, start + (i + 1) * epoch_length)``.
    """

    seed: bytes
    epoch_length: float = 60.0
    start: float = 0.0

    def epoch_at(self, timestamp: float) -> int:
        if timestamp < self.start:
            raise ValueError(f"timestamp {timestamp} precedes schedule start {self.start}")
        return int((timestamp - self.start) // self.epoch_length)

    def secret(self, epoch: int, m: int) -> int:
        if epoch < 0:
            raise ValueError(f"epoch {epoch} precedes the schedule start")
        material = b""
        counter = 0
        while len(material) * 8 < m:
            msg = epoch.to_bytes(8, "big") + counter.to_bytes(4, "big")
            material += hmac.new(self.seed, msg, hashlib.sha256).digest()
            counter += 1
        return int.from_bytes(material, "big") >> (len(material) * 8 - m)


def keyed_secure_indices(
    K: int, I: int, schedule: SecretSchedule, epoch: int, d: int, m: int, k: int
) -> tuple[int, ...]:
    return _mix(K ^ I ^ schedule.secret(epoch, m), d, m, k)


def build_secure_filter(
    names: Iterable[int],
    I: int,
    m: int,
    k: int,
    d: int = 0,
    schedule: SecretSchedule | None = None,
    epoch: int | None = None,
) -> BloomFilter:
    """Full-width ``m``-bit filter holding every name bound to ``I``."""
    filt = BloomFilter(FilterParams(m=m, k=k))
    for K in names:
        if schedule is None:
            filt.insert(secure_indices(K, I, d, m, k))
        else:
            if epoch is None:
                raise ValueError("a keyed filter needs an epoch")
            filt.insert(keyed_secure_indices(K, I, schedule, epoch, d, m, k))
    return filt


@dataclass(frozen=True)
class SecureVerifier:
    """Checks names against a keyed filter, accepting the current and previous epoch."""

    schedule: SecretSchedule
    m: int
    k: int
    d: int = 0

    def accepts(self, filt: BloomFilter, K: int, I: int, epoch: int) -> bool:
        for e in (epoch, epoch - 1):
            if e < 0:
                continue
            if filt.query(keyed_secure_indices(K, I, self.schedule, e, self.d, self.m, self.k)):
                return True
        return False

    def verify(
        self, filt: BloomFilter | bytes, I: int, names: Sequence[int], epoch: int
    ) -> list[bool]:
        if isinstance(filt, (bytes, bytearray)):
            filt = BloomFilter.from_bytes(bytes(filt))
        if filt.size != self.m:
            raise ConfigurationError(f"filter has {filt.size} bits, verifier expects {self.m}")
        return [self.accepts(filt, K, I, epoch) for K in names]


def density_threshold(m: int, k: int, n_max: int) -> tuple[float, float]:
    """``(rho_max, rho_max ** k)``: allowed fill and the forgery guessing bound."""
    rho_max = k * n_max / m
    return rho_max, rho_max**k


def density_check(filt: BloomFilter, k: int, n_max: int) -> bool:
    """True when the filter is no denser than ``n_max`` honest elements allow."""
    rho_max, _ = density_threshold(filt.size, k, n_max)
    return filt.fill_factor() <= rho_max


def bit_matrix(values: Sequence[int], m: int) -> np.ndarray:
    """Rows of ``m`` bits (most significant first) for a list of integers."""
    nbytes = (m + 7) // 8
    raw = b"".join(int(v).to_bytes(nbytes, "big") for v in values)
    arr = np.frombuffer(raw, dtype=np.uint8).reshape(len(values), nbytes)
    return np.unpackbits(arr, axis=1)[:, nbytes * 8 - m:].astype(bool)


def pairwise_hamming(rows: np.ndarray) -> np.ndarray:
    """Hamming distance of every unordered pair of boolean rows."""
    x = np.asarray(rows, dtype=np.float64)
    pop = x.sum(axis=1)
    dist = pop[:, None] + pop[None, :] - 2.0 * (x @ x.T)
    iu = np.triu_indices(x.shape[0], k=1)
    return np.rint(dist[iu]).astype(np.int64)


@dataclass(frozen=True)
class RandomnessReport:
    hamming_mean: float
    hamming_std: float
    bits_set_mean: float
    bits_set_std: float
    plain_bits_set: int
    correlation: float
    expected_bits_set: float


def randomness_report(
    secure_filters: Sequence[BloomFilter],
    plain_filter: BloomFilter,
    n: int,
    k: int,
    top: int | None = None,
) -> RandomnessReport:
    """Distribution statistics of securely built filters of one element set.

    ``correlation`` is the fraction of the ``top`` (default ``n * k``) most
    frequently set positions across the secure filters that are also set in
    the plain filter; ties in frequency go to the lower position.
    """
    if len(secure_filters) < 2:
        raise ValueError("need at least two secure filters")
    sizes = {f.size for f in secure_filters} | {plain_filter.size}
    if len(sizes) != 1:
        raise ConfigurationError(f"filters of mixed sizes {sorted(sizes)}")
    m = sizes.pop()
    rows = np.stack([f.bits for f in secure_filters])
    ham = pairwise_hamming(rows)
    pop = rows.sum(axis=1)
    top = n * k if top is None else top
    freq = rows.sum(axis=0)
    ranked = np.argsort(-freq, kind="stable")[:top]
    return RandomnessReport(
        hamming_mean=float(ham.mean()),
        hamming_std=float(ham.std()),
        bits_set_mean=float(pop.mean()),
        bits_set_std=float(pop.std()),
        plain_bits_set=plain_filter.popcount(),
        correlation=float(plain_filter.bits[ranked].mean()),
        expected_bits_set=m * (1.0 - (1.0 - 1.0 / m) ** (k * n)),
    )
