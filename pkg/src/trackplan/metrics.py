"""Tracking-error metrics and runtime accounting.

OSPA combines an optimal-assignment localization term with a cardinality
penalty; the assignment is solved exactly with the Hungarian method.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class OspaParams:
    """Cutoff distance c (meters) and order p of the metric."""

    c: float = 50.0
    p: float = 2.0

    def __post_init__(self) -> None:
        if self.c <= 0:
            raise ValueError("cutoff c must be positive")
        if self.p < 1:
            raise ValueError("order p must be >= 1")


@dataclass(frozen=True)
class TimingRecord:
    """Per-epoch planner wall-clock seconds for one trial."""

    epoch_seconds: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if np.any(np.asarray(self.epoch_seconds) < 0):
            raise ValueError("wall-clock entries must be non-negative")

    @property
    def total(self) -> float:
        return float(np.sum(self.epoch_seconds))

    @property
    def mean(self) -> float:
        return float(np.mean(self.epoch_seconds))


def ospa(x: np.ndarray, y: np.ndarray, params: OspaParams) -> float:
    """Optimal subpattern assignment distance between two 2-D point sets.

    With b the larger and a the smaller cardinality:
    [(1/b) (min-assignment sum of min(c, d)^p + c^p (b - a))]^(1/p).
    Either set may be empty; two empty sets have distance 0.
    """
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    y = np.asarray(y, dtype=float).reshape(-1, 2)
    a, b = sorted((len(x), len(y)))
    if b == 0:
        return 0.0
    if a == 0:
        return params.c
    d = np.linalg.norm(x[:, None, :] - y[None, :, :], axis=-1)
    cost = np.minimum(d, params.c) ** params.p
    rows, cols = linear_sum_assignment(cost)
    total = cost[rows, cols].sum() + params.c**params.p * (b - a)
    return float((total / b) ** (1.0 / params.p))


def trial_ospa_series(log, params: OspaParams) -> np.ndarray:
    """OSPA between estimated and true target positions at every sensing step.

    Accepts any log exposing ``truth`` and ``est_mean`` arrays of shape
    (steps, targets, 4); only position components enter the metric.
    """
    truth = np.asarray(log.truth)
    est = np.asarray(log.est_mean)
    if truth.shape[0] != est.shape[0]:
        raise ValueError("truth and estimate series must share time indices")
    return np.array(
        [ospa(est[k, :, :2], truth[k, :, :2], params) for k in range(truth.shape[0])]
    )


def ecdf(values) -> list[tuple[float, float]]:
    """Right-continuous empirical CDF as sorted (value, frequency) pairs."""
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("ecdf of empty input")
    uniq, counts = np.unique(arr, return_counts=True)
    freqs = np.cumsum(counts) / arr.size
    return [(float(v), float(f)) for v, f in zip(uniq, freqs)]
