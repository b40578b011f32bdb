"""In-packet Bloom filters with element tags, deletable regions and secure constructs."""

from .core import (
    BloomFilter,
    ConfigurationError,
    FilterParams,
    FprReport,
    SizeError,
    measure_fpr,
)
from .deletable import DeletableFilter, DeleteResult, deletability_probability, deletable_fraction
from .estimates import exact_fp_probability, fpa_estimate, fpb_estimate, optimal_k
from .etags import CandidateSet, SelectionPolicy, build_candidates, min_fill_expectation, select
from .naming import ETagSet, HashSuite, double_hash_indices, generate_etags, segmented_indices
from .secure import SecretSchedule, SecureVerifier, build_secure_filter, secure_indices

__version__ = "0.1.0"

__all__ = [
    "BloomFilter",
    "CandidateSet",
    "ConfigurationError",
    "DeletableFilter",
    "DeleteResult",
    "ETagSet",
    "FilterParams",
    "FprReport",
    "HashSuite",
    "SecretSchedule",
    "SecureVerifier",
    "SelectionPolicy",
    "SizeError",
    "build_candidates",
    "build_secure_filter",
    "deletability_probability",
    "deletable_fraction",
    "double_hash_indices",
    "exact_fp_probability",
    "fpa_estimate",
    "fpb_estimate",
    "generate_etags",
    "measure_fpr",
    "min_fill_expectation",
    "optimal_k",
    "secure_indices",
    "segmented_indices",
    "select",
]
