"""Peak-to-peak statistics and evoked-response comparison norms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EpochsTensor
from .errors import ContractError


@dataclass(frozen=True)
class AmplitudeMatrix:
    """Per-trial, per-sensor peak-to-peak amplitudes (N x Q)."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise ContractError("amplitude matrix must be 2-D")
        if np.any(values < 0):
            raise ContractError("peak-to-peak amplitudes cannot be negative")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class EvokedMatrix:
    """Sensors x time average (or median) with the contributing count."""

    values: np.ndarray
    n_contributing: int

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise ContractError("evoked matrix must be 2-D")
        if not np.all(np.isfinite(values)):
            raise ContractError("evoked matrix must be finite")
        if self.n_contributing < 0:
            raise ContractError("n_contributing cannot be negative")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def peak_to_peak(epochs: EpochsTensor) -> AmplitudeMatrix:
    """Max-minus-min of each sensor's series within each trial."""
    data = epochs.data
    return AmplitudeMatrix(values=data.max(axis=2) - data.min(axis=2))


def _check_indices(indices, n: int) -> np.ndarray:
    idx = np.asarray(sorted(indices), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError(f"trial index out of range [0, {n})")
    if len(np.unique(idx)) != len(idx):
        raise ContractError("duplicate trial indices")
    return idx


def trial_mean(epochs: EpochsTensor, indices) -> EvokedMatrix:
    """Element-wise mean over the selected trials.

    An empty selection returns the all-zero matrix: downstream
    cross-validation needs a finite error even when every training
    trial was rejected.
    """
    idx = _check_indices(indices, epochs.n_trials)
    if idx.size == 0:
        shape = (epochs.n_sensors, epochs.n_times)
        return EvokedMatrix(values=np.zeros(shape), n_contributing=0)
    return EvokedMatrix(
        values=epochs.data[idx].mean(axis=0), n_contributing=int(idx.size)
    )


def trial_median(epochs: EpochsTensor, indices) -> EvokedMatrix:
    """Element-wise median over the selected trials (midpoint on ties)."""
    idx = _check_indices(indices, epochs.n_trials)
    if idx.size == 0:
        raise ContractError("median of an empty trial set is undefined")
    return EvokedMatrix(
        values=np.median(epochs.data[idx], axis=0),
        n_contributing=int(idx.size),
    )


def _check_shapes(a: EvokedMatrix, b: EvokedMatrix):
    if a.values.shape != b.values.shape:
        raise ContractError(
            f"shape mismatch {a.values.shape} vs {b.values.shape}"
        )


def eval_linf(a: EvokedMatrix, b: EvokedMatrix) -> float:
    """Maximum absolute element-wise difference."""
    _check_shapes(a, b)
    return float(np.abs(a.values - b.values).max())


def eval_l2(a: EvokedMatrix, b: EvokedMatrix) -> float:
    """Frobenius norm of the difference."""
    _check_shapes(a, b)
    return float(np.linalg.norm(a.values - b.values))
