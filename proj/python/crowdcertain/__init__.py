"""Crowd label aggregation with classifier-ensemble uncertainty.

Thin wrapper over the C++ core. Arrays are numpy; crowd labels are
``(n_instances, n_workers, n_classes)`` uint8 tensors (a 2-D array is read as
a single class).
"""

from ._crowdcertain import (
    Error,
    __version__,
    accuracy,
    auc_roc,
    baseline,
    baseline_methods,
    beta_confidence,
    brier,
    bundled_datasets,
    crowd_certain,
    ece,
    f1,
    freq_confidence,
    load_dataset,
    run_benchmark,
    simulate,
)

__all__ = [
    "Error",
    "__version__",
    "accuracy",
    "auc_roc",
    "baseline",
    "baseline_methods",
    "beta_confidence",
    "brier",
    "bundled_datasets",
    "crowd_certain",
    "ece",
    "f1",
    "freq_confidence",
    "load_dataset",
    "run_benchmark",
    "simulate",
]
