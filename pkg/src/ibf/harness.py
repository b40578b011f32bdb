"""Seeded Monte Carlo experiments over parameter grids, reported as CSV.

A config file is flat ``key = value`` text; list-valued keys take comma
separated values and span the grid.  Every trial gets its own generator seeded
from ``sha256(master seed, grid point, trial)``, so results do not depend on
the number of worker processes.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import IO, Callable, NamedTuple

import numpy as np

from .core import BloomFilter, ConfigurationError, FilterParams
from .datasets import ElementSource, load_prefix_file, DEFAULT_PREFIXES
from .deletable import deletable_fraction, deletability_probability
from .estimates import fpb_estimate
from .etags import (
    SelectionPolicy,
    build_candidates_from_matrices,
    k_distribution,
    select,
)
from .naming import (
    BitHistogram,
    HashSuite,
    bit_distribution_variance,
    double_hash_matrix,
    etag_matrices,
    hash_pairs,
    segmented_matrix,
)
from .secure import bit_matrix, element_name, pairwise_hamming, randomness_report, secure_indices

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "GridPoint",
    "ReportRow",
    "parse_config",
    "load_config",
    "bundled_config",
    "bundled_configs",
    "grid",
    "trial_seed",
    "run_point",
    "run_experiment",
    "emit_csv",
    "write_csv",
]

log = logging.getLogger(__name__)

EXPERIMENTS = ("fpr-sweep", "etag-sweep", "deletability", "secure-eval", "hash-compare")

_LIST_INT = {"m", "n", "k", "d", "r"}
_LIST_STR = {"source", "policies", "suites"}
_INT = {"trials", "test_size", "train_size", "seed", "runs", "label_bits"}
_STR = {"experiment", "naming", "dictionary", "prefix_file", "out", "k_dist"}


@dataclass
class ExperimentConfig:
    experiment: str
    m: list[int] = field(default_factory=lambda: [256])
    n: list[int] = field(default_factory=lambda: [24])
    k: list[int] = field(default_factory=lambda: [5])
    d: list[int] = field(default_factory=lambda: [1])
    r: list[int] = field(default_factory=lambda: [0])
    source: list[str] = field(default_factory=lambda: ["labels"])
    policies: list[str] = field(default_factory=lambda: ["fpa"])
    suites: list[str] = field(default_factory=lambda: ["crc32"])
    k_dist: str | None = None
    naming: str = "double"
    trials: int = 1000
    test_size: int = 10_000
    train_size: int = 10_000
    runs: int = 1000
    seed: int = 0
    label_bits: int = 256
    dictionary: str | None = None
    prefix_file: str | None = None
    out: str | None = None

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(
                f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}"
            )
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.test_size < 1:
            raise ConfigurationError("test_size must be >= 1")

    @property
    def k_range(self) -> tuple[int, int] | None:
        if not self.k_dist:
            return None
        lo, _, hi = self.k_dist.partition("-")
        return int(lo), int(hi or lo)


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep:
            raise ConfigurationError(f"config line {lineno}: expected 'key = value'")
        items = [v.strip() for v in value.split(",") if v.strip()]
        try:
            if key in _LIST_INT:
                values[key] = [int(v) for v in items]
            elif key in _LIST_STR:
                values[key] = items
            elif key in _INT:
                values[key] = int(value)
            elif key in _STR:
                values[key] = value
            else:
                raise ConfigurationError(f"config line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise ConfigurationError(f"config line {lineno}: bad value {value!r}") from exc
    if "experiment" not in values:
        raise ConfigurationError("config has no 'experiment' key")
    for key in ("dictionary", "prefix_file"):
        if base_dir is not None and values.get(key):
            path = Path(str(values[key]))
            if not path.is_absolute():
                values[key] = str(base_dir / path)
    return ExperimentConfig(**values)  # type: ignore[arg-type]


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


def bundled_configs() -> list[str]:
    root = resources.files("ibf") / "configs"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".cfg"))


def bundled_config(name: str) -> ExperimentConfig:
    text = (resources.files("ibf") / "configs" / name).read_text(encoding="utf-8")
    return parse_config(text)


class GridPoint(NamedTuple):
    m: int
    n: int
    k: int
    d: int
    r: int
    source: str


def grid(cfg: ExperimentConfig) -> list[GridPoint]:
    return [
        GridPoint(*p)
        for p in itertools.product(cfg.m, cfg.n, cfg.k, cfg.d, cfg.r, cfg.source)
    ]


def check_point(cfg: ExperimentConfig, pt: GridPoint) -> None:
    """Raise :class:`ConfigurationError` if the point cannot be run."""
    params = FilterParams(pt.m, pt.k, pt.d, pt.r)
    if pt.n < 1:
        raise ConfigurationError("n must be >= 1")
    if cfg.experiment == "deletability" and pt.r < 1:
        raise ConfigurationError("deletability needs r >= 1")
    if cfg.experiment == "etag-sweep" and "fpr" in cfg.policies and cfg.train_size < 1:
        raise ConfigurationError("fpr policy needs train_size >= 1")
    if cfg.k_range is not None:
        ks = k_distribution(*cfg.k_range, pt.d)
        if max(ks) > params.m_prime:
            raise ConfigurationError(f"k distribution {ks} exceeds m_prime")


def trial_seed(master: int, point_index: int, trial: int) -> int:
    digest = hashlib.sha256(f"ibf:{master}:{point_index}:{trial}".encode()).digest()
    return int.from_bytes(digest[:16], "big")


# -- element sources --------------------------------------------------------

_SOURCES: dict[tuple, ElementSource] = {}


def _source(cfg: ExperimentConfig, kind: str) -> ElementSource:
    key = (kind, cfg.label_bits, cfg.dictionary, cfg.prefix_file)
    if key not in _SOURCES:
        prefixes = load_prefix_file(cfg.prefix_file) if cfg.prefix_file else DEFAULT_PREFIXES
        _SOURCES[key] = ElementSource(
            kind=kind, label_bits=cfg.label_bits, prefixes=tuple(prefixes), path=cfg.dictionary
        )
    return _SOURCES[key]


def _name(cfg: ExperimentConfig, elements, k: int, m: int, h=None) -> np.ndarray:
    if cfg.naming == "double":
        h1, h2 = h if h is not None else hash_pairs(elements)
        return double_hash_matrix(h1, h2, k, m)
    scheme, _, alg = cfg.naming.partition(":")
    if scheme != "segment":
        raise ConfigurationError(f"unknown naming {cfg.naming!r}")
    return segmented_matrix(elements, k, m, HashSuite(alg or "crc32"))


def _rate(filt: BloomFilter, mat: np.ndarray) -> float:
    return float(filt.query_many(mat).mean())


# -- trials -----------------------------------------------------------------


def _fpr_sweep(cfg: ExperimentConfig, pt: GridPoint, rng: np.random.Generator) -> dict[str, float]:
    params = FilterParams(pt.m, pt.k, pt.d, pt.r)
    elems = _source(cfg, pt.source).draw(pt.n + cfg.test_size, rng)
    fp = _name(cfg, elems, pt.k, params.m_prime)
    filt = BloomFilter(params).insert_many(fp[: pt.n])
    return {
        "fpr": _rate(filt, fp[pt.n:]),
        "fpa": filt.fpa_estimate(),
        "fill": filt.fill_factor(),
        "fpb": fpb_estimate(params.m_prime, pt.n, pt.k),
    }


def _etag_sweep(cfg: ExperimentConfig, pt: GridPoint, rng: np.random.Generator) -> dict[str, float]:
    params = FilterParams(pt.m, pt.k, pt.d, pt.r)
    n, n_train = pt.n, cfg.train_size
    elems = _source(cfg, pt.source).draw(n + n_train + cfg.test_size, rng)
    h1, h2 = hash_pairs(elems)
    members, train, test = slice(0, n), slice(n, n + n_train), slice(n + n_train, None)

    std_fp = double_hash_matrix(h1, h2, pt.k, pt.m)
    std = BloomFilter(FilterParams(pt.m, pt.k)).insert_many(std_fp[members])
    out = {"fpr_std": _rate(std, std_fp[test]), "fpb": fpb_estimate(pt.m, n, pt.k)}

    modes = {"kcte": [pt.k] * pt.d}
    if cfg.k_range is not None:
        modes["kdst"] = k_distribution(*cfg.k_range, pt.d)
    for mode, ks in modes.items():
        mats = etag_matrices(h1, h2, params, ks)
        cands = build_candidates_from_matrices([mat[members] for mat in mats], params)
        rates = [_rate(f, mat[test]) for f, mat in zip(cands.filters, mats)]
        best = min(rates)
        out[f"fpr_c0_{mode}"] = rates[0]
        for kind in cfg.policies:
            held = [mat[train] for mat in mats]
            policy = SelectionPolicy(kind, training=held, forbidden=held)
            idx = select(cands, policy)
            out[f"fpr_{kind}_{mode}"] = rates[idx]
            out[f"fill_{kind}_{mode}"] = cands.filters[idx].fill_factor()
            out[f"best_{kind}_{mode}"] = float(rates[idx] == best)
            out[f"beats_std_{kind}_{mode}"] = float(rates[idx] < out["fpr_std"])
    return out


def _deletability(cfg: ExperimentConfig, pt: GridPoint, rng: np.random.Generator) -> dict[str, float]:
    params = FilterParams(pt.m, pt.k, pt.d, pt.r)
    n = pt.n
    elems = _source(cfg, pt.source).draw(n + cfg.test_size, rng)
    h1, h2 = hash_pairs(elems)

    std_fp = double_hash_matrix(h1, h2, pt.k, pt.m)
    std = BloomFilter(FilterParams(pt.m, pt.k)).insert_many(std_fp[:n])
    out = {
        "fpr_std": _rate(std, std_fp[n:]),
        "pdr_model": deletability_probability(pt.m - params.candidate_bits, n, pt.k, pt.r),
    }

    mats = etag_matrices(h1, h2, params)
    cands = build_candidates_from_matrices([mat[:n] for mat in mats], params)
    for kind in cfg.policies:
        idx = 0 if kind == "first" else select(cands, SelectionPolicy(kind))
        filt = cands.filters[idx]
        stats = deletable_fraction(filt, mats[idx][:n])
        before = _rate(filt, mats[idx][n:])
        after = _rate(filt.copy().delete_all_deletable(), mats[idx][n:])
        out[f"elements_{kind}"] = stats.elements
        out[f"bits_{kind}"] = stats.bits_deletable
        out[f"fpr_before_{kind}"] = before
        out[f"fpr_after_{kind}"] = after
        out[f"fpr_avg_{kind}"] = (before + after) / 2
    return out


def _hash_compare(cfg: ExperimentConfig, pt: GridPoint, rng: np.random.Generator) -> dict[str, float]:
    params = FilterParams(pt.m, pt.k, pt.d, pt.r)
    m = params.m_prime
    elems = _source(cfg, pt.source).draw(pt.n + cfg.test_size, rng)
    schemes = {"double": double_hash_matrix(*hash_pairs(elems), pt.k, m)}
    for alg in cfg.suites:
        schemes[f"segment_{alg}"] = segmented_matrix(elems, pt.k, m, HashSuite(alg))
    out = {}
    for name, fp in schemes.items():
        filt = BloomFilter(params).insert_many(fp[: pt.n])
        out[f"fpr_{name}"] = _rate(filt, fp[pt.n:])
        out[f"bitvar_{name}"] = bit_distribution_variance(BitHistogram.from_footprints(fp, m))
    return out


def _secure_eval(cfg: ExperimentConfig, pt: GridPoint, rng: np.random.Generator) -> dict[str, float]:
    m, k, n = pt.m, pt.k, pt.n
    labels = _source(cfg, pt.source).draw(n, rng)
    names = [element_name(x, m) for x in labels]
    params = FilterParams(m, k)
    plain = BloomFilter(params)
    for K in names:
        plain.insert(secure_indices(K, 0, 0, m, k))
    packets = [int.from_bytes(rng.bytes(m // 8), "big") for _ in range(cfg.runs)]
    secure = []
    for I in packets:
        filt = BloomFilter(params)
        for K in names:
            filt.insert(secure_indices(K, I, 0, m, k))
        secure.append(filt)
    rep = randomness_report(secure, plain, n, k)
    mixed = pairwise_hamming(bit_matrix([names[0] ^ I for I in packets], m))
    randoms = bit_matrix([int.from_bytes(rng.bytes(m // 8), "big") for _ in range(cfg.runs)], m)
    rand_ham = pairwise_hamming(randoms)
    return {
        "hamming_mean": rep.hamming_mean,
        "hamming_std": rep.hamming_std,
        "bits_set_mean": rep.bits_set_mean,
        "bits_set_std": rep.bits_set_std,
        "plain_bits_set": float(rep.plain_bits_set),
        "expected_bits_set": rep.expected_bits_set,
        "correlation": rep.correlation,
        "output_hamming_mean": float(mixed.mean()),
        "output_hamming_std": float(mixed.std()),
        "random_hamming_mean": float(rand_ham.mean()),
        "random_hamming_std": float(rand_ham.std()),
        "random_bits_set_mean": float(randoms.sum(axis=1).mean()),
    }


TRIALS: dict[str, Callable[[ExperimentConfig, GridPoint, np.random.Generator], dict[str, float]]] = {
    "fpr-sweep": _fpr_sweep,
    "etag-sweep": _etag_sweep,
    "deletability": _deletability,
    "hash-compare": _hash_compare,
    "secure-eval": _secure_eval,
}


def _run_trial(args: tuple[ExperimentConfig, GridPoint, int, int]) -> dict[str, float]:
    cfg, pt, index, trial = args
    rng = np.random.default_rng(trial_seed(cfg.seed, index, trial))
    return TRIALS[cfg.experiment](cfg, pt, rng)


def run_point(
    cfg: ExperimentConfig, pt: GridPoint, index: int = 0, jobs: int = 1
) -> dict[str, np.ndarray]:
    """Per-trial values of every metric at one grid point, in trial order."""
    check_point(cfg, pt)
    tasks = [(cfg, pt, index, t) for t in range(cfg.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_trial, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_run_trial(t) for t in tasks]
    return {key: np.array([res[key] for res in results]) for key in results[0]}


@dataclass(frozen=True)
class ReportRow:
    experiment: str
    m: int
    n: int
    k: int
    d: int
    r: int
    source: str
    metric: str
    mean: float
    std: float
    trials: int
    note: str = ""


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> list[ReportRow]:
    rows: list[ReportRow] = []
    for index, pt in enumerate(grid(cfg)):
        try:
            check_point(cfg, pt)
        except (ConfigurationError, ValueError) as exc:
            log.warning("skipping %s: %s", pt, exc)
            rows.append(ReportRow(cfg.experiment, *pt, "skipped", math.nan, math.nan, 0, str(exc)))
            continue
        values = run_point(cfg, pt, index, jobs)
        for metric in sorted(values):
            arr = values[metric]
            std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
            rows.append(ReportRow(cfg.experiment, *pt, metric, float(arr.mean()), std, int(arr.size)))
    if cfg.out:
        emit_csv(rows, cfg.out)
    return rows


def _fmt(value: object) -> str:
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def write_csv(rows: list[ReportRow], fh: IO[str]) -> None:
    if not rows:
        raise ValueError("no rows to write")
    names = [f.name for f in fields(ReportRow)]
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(names)
    for row in rows:
        writer.writerow([_fmt(getattr(row, name)) for name in names])


def emit_csv(rows: list[ReportRow], path: str | Path) -> Path:
    path = Path(path)
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        write_csv(rows, fh)
    return path


def with_overrides(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in changes.items() if v is not None})
