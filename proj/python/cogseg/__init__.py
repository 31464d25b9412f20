"""Cognate span identification in undersegmented texts.

Thin wrapper over the native extension; see `cogseg._core` for the full
operation list.
"""

from cogseg._core import (
    ConfigError,
    DataError,
    NumericError,
    align_viterbi,
    apply_whitespace_ratio,
    closeness_auc_from_files,
    expected_coverage,
    expected_quality,
    generate_synthetic,
    mapping_from_snapshot,
    marginal_log_likelihood,
    precision_at_k,
    predict,
    span_likelihood,
    train,
)

__all__ = [
    "ConfigError",
    "DataError",
    "NumericError",
    "align_viterbi",
    "apply_whitespace_ratio",
    "closeness_auc_from_files",
    "expected_coverage",
    "expected_quality",
    "generate_synthetic",
    "mapping_from_snapshot",
    "marginal_log_likelihood",
    "precision_at_k",
    "predict",
    "span_likelihood",
    "train",
]
