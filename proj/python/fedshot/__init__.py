"""Federated few-shot EEG seizure-detection pipeline.

Thin re-export of the compiled core. The heavy lifting (preprocessing,
federated rounds, metrics) lives in the C++ extension `_fedshot`; this
package only gives it a stable import path.
"""

from _fedshot import (
    FedshotError,
    balanced_accuracy,
    blend,
    cohens_kappa,
    fedavg,
    mix_seed,
    normalize_percentile,
    pca2,
    resample_linear,
    run,
    weighted_f1,
)

__all__ = [
    "FedshotError",
    "balanced_accuracy",
    "blend",
    "cohens_kappa",
    "fedavg",
    "mix_seed",
    "normalize_percentile",
    "pca2",
    "resample_linear",
    "run",
    "weighted_f1",
]
