"""Element sources: random labels, expanded IP prefixes, dictionary words."""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "DEFAULT_PREFIXES",
    "gen_random_labels",
    "expand_ip_prefixes",
    "parse_prefix_lines",
    "load_prefix_file",
    "load_dictionary",
    "synthetic_words",
    "ElementSource",
]

DEFAULT_PREFIXES = [("10.0.0.0", 16), ("192.168.0.0", 16)]


def gen_random_labels(count: int, bits: int = 256, seed: int | np.random.Generator = 0) -> list[bytes]:
    """``count`` distinct uniformly random labels of ``bits`` bits."""
    if bits <= 0 or bits % 8:
        raise ValueError(f"bits must be a positive multiple of 8, got {bits}")
    if count > 2**bits:
        raise ValueError(f"cannot draw {count} unique {bits}-bit labels")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    width = bits // 8
    out: list[bytes] = []
    seen: set[bytes] = set()
    while len(out) < count:
        need = count - len(out)
        buf = rng.bytes(width * need)
        for i in range(need):
            label = buf[i * width:(i + 1) * width]
            if label not in seen:
                seen.add(label)
                out.append(label)
    return out


def expand_ip_prefixes(prefixes: Iterable[tuple[str, int]]) -> list[bytes]:
    """Every address of every prefix as 4-byte big-endian strings, first occurrence kept."""
    out: list[bytes] = []
    seen: set[int] = set()
    for address, length in prefixes:
        if not 0 <= length <= 32:
            raise ValueError(f"mask length {length} outside [0, 32]")
        net = ipaddress.IPv4Network(f"{address}/{length}", strict=False)
        base = int(net.network_address)
        for value in range(base, base + net.num_addresses):
            if value not in seen:
                seen.add(value)
                out.append(value.to_bytes(4, "big"))
    return out


def parse_prefix_lines(lines: Iterable[str]) -> list[tuple[str, int]]:
    """Parse ``a.b.c.d/len`` lines; ``#`` starts a comment."""
    prefixes = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            address, length = line.split("/")
            ipaddress.IPv4Address(address)
            mask = int(length)
            if not 0 <= mask <= 32:
                raise ValueError(mask)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: malformed prefix {raw.strip()!r}") from exc
        prefixes.append((address, mask))
    return prefixes


def load_prefix_file(path: str | Path) -> list[tuple[str, int]]:
    with open(path, encoding="utf-8") as fh:
        return parse_prefix_lines(fh)


def load_dictionary(path: str | Path) -> list[bytes]:
    """Trimmed, non-empty, de-duplicated lines in file order."""
    out: list[bytes] = []
    seen: set[bytes] = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip().encode("utf-8")
            if word and word not in seen:
                seen.add(word)
                out.append(word)
    return out


_CONSONANTS = "bcdfghjklmnprstvwz"
_VOWELS = "aeiou"


def synthetic_words(count: int = 50_000, seed: int = 0) -> list[bytes]:
    """Deterministic pseudo-words of one to four syllables.

    Stands in for a system word list when none is configured.
    """
    syllables = [c + v for c in _CONSONANTS for v in _VOWELS]
    rng = np.random.default_rng(seed)
    out: list[bytes] = []
    seen: set[bytes] = set()
    while len(out) < count:
        parts = rng.integers(0, len(syllables), size=int(rng.integers(1, 5)))
        word = "".join(syllables[i] for i in parts)
        if rng.random() < 0.3:
            word += _CONSONANTS[int(rng.integers(len(_CONSONANTS)))]
        raw = word.encode("ascii")
        if raw not in seen:
            seen.add(raw)
            out.append(raw)
    return out


@dataclass
class ElementSource:
    """Where experiment elements come from.

    ``labels`` draws fresh random labels per trial; ``ip`` and ``dictionary``
    sample without replacement from a fixed universe.  A dictionary source
    without a path uses :func:`synthetic_words`.
    """

    kind: str = "labels"
    label_bits: int = 256
    prefixes: Sequence[tuple[str, int]] = tuple(DEFAULT_PREFIXES)
    path: str | None = None
    _universe: list[bytes] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("labels", "ip", "dictionary"):
            raise ValueError(f"unknown element source {self.kind!r}")

    def universe(self) -> list[bytes]:
        if self._universe is None:
            if self.kind == "ip":
                self._universe = expand_ip_prefixes(self.prefixes)
            elif self.kind == "dictionary":
                self._universe = load_dictionary(self.path) if self.path else synthetic_words()
            else:
                raise ValueError("random labels have no finite universe")
        return self._universe

    def draw(self, count: int, rng: np.random.Generator) -> list[bytes]:
        """``count`` distinct elements for one trial."""
        if self.kind == "labels":
            return gen_random_labels(count, self.label_bits, rng)
        pool = self.universe()
        if count > len(pool):
            raise ValueError(f"need {count} elements, the {self.kind} universe has {len(pool)}")
        picks = rng.choice(len(pool), size=count, replace=False)
        return [pool[i] for i in picks]
