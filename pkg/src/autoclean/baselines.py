"""Competing bad-sensor methods: FASTER criteria, SNS, and RANSAC."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import periodogram
from scipy.stats import kurtosis

from .core import EpochsTensor, SensorLayout
from .errors import ContractError, NumericalError, ResampleError
from .interpolation import build_operator

FASTER_ZSCORE = 3.0
SNS_N_NEIGHBORS = 8
RANSAC_N_RESAMPLES = 50
RANSAC_FRACTION = 0.25
RANSAC_CORR_THRESHOLD = 0.75
RANSAC_UNBROKEN_TIME = 0.4

_CRITERIA = ("variance", "correlation", "hurst", "kurtosis", "line_noise")


@dataclass(frozen=True)
class FasterReport:
    """Per-sensor criterion values, z-scores, and flagged sets."""

    metrics: np.ndarray
    zscores: np.ndarray
    flagged: dict
    union: frozenset

    def __post_init__(self):
        union = frozenset().union(*self.flagged.values())
        if union != self.union:
            raise ContractError("union must combine the per-criterion sets")


def _concat(epochs: EpochsTensor) -> np.ndarray:
    """Q x (N*T) sensor series with trials concatenated in order."""
    return epochs.data.transpose(1, 0, 2).reshape(epochs.n_sensors, -1)


def _zscore_columns(table: np.ndarray) -> np.ndarray:
    mean = table.mean(axis=0)
    std = table.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return (table - mean) / std


def _hurst_rs(series: np.ndarray, window_sizes) -> float:
    """Rescaled-range Hurst exponent over non-overlapping windows."""
    log_w, log_rs = [], []
    for w in window_sizes:
        n_win = series.size // w
        chunks = series[: n_win * w].reshape(n_win, w)
        centered = chunks - chunks.mean(axis=1, keepdims=True)
        z = np.cumsum(centered, axis=1)
        r = z.max(axis=1) - z.min(axis=1)
        s = chunks.std(axis=1)
        ok = s > 0
        if not ok.any():
            continue
        log_w.append(np.log(w))
        log_rs.append(np.log((r[ok] / s[ok]).mean()))
    if len(log_w) < 2:
        return 0.5
    slope = np.polyfit(log_w, log_rs, 1)[0]
    return float(slope)


def _mean_abs_correlation(series: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        corr = np.corrcoef(series)
    corr = np.nan_to_num(corr, nan=0.0)
    np.fill_diagonal(corr, 0.0)
    return np.abs(corr).sum(axis=1) / (series.shape[0] - 1)


def faster_bad_sensors(epochs: EpochsTensor, layout: SensorLayout,
                       mains_hz: float = 50.0) -> FasterReport:
    """Flag sensors whose z-score on any of five criteria exceeds 3.

    Criteria per sensor, over the concatenated trials: variance, mean
    absolute correlation with the other sensors, rescaled-range Hurst
    exponent, excess kurtosis, and the power ratio in a +-2 Hz band
    around the mains frequency.
    """
    q, t = epochs.n_sensors, epochs.n_times
    if q < 4:
        raise ContractError("FASTER needs at least 4 sensors")
    if t < 32:
        raise ContractError(
            "Hurst estimation needs at least 32 samples per trial"
        )
    series = _concat(epochs)
    window_sizes = []
    w = 8
    while w <= t // 2:
        window_sizes.append(w)
        w *= 2
    table = np.empty((q, 5))
    table[:, 0] = series.var(axis=1)
    table[:, 1] = _mean_abs_correlation(series)
    table[:, 2] = [_hurst_rs(s, window_sizes) for s in series]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        kurt = kurtosis(series, axis=1, fisher=True, bias=True)
    table[:, 3] = np.nan_to_num(kurt, nan=0.0)  # flat sensors
    freqs, psd = periodogram(series, fs=epochs.sfreq_hz, axis=1)
    band = (freqs >= mains_hz - 2.0) & (freqs <= mains_hz + 2.0)
    total = psd.sum(axis=1)
    total = np.where(total > 0, total, 1.0)
    table[:, 4] = psd[:, band].sum(axis=1) / total
    z = _zscore_columns(table)
    flagged = {
        name: frozenset(np.flatnonzero(np.abs(z[:, c]) > FASTER_ZSCORE)
                        .tolist())
        for c, name in enumerate(_CRITERIA)
    }
    return FasterReport(
        metrics=table,
        zscores=z,
        flagged=flagged,
        union=frozenset().union(*flagged.values()),
    )


def sns_clean(epochs: EpochsTensor,
              n_neighbors: int = SNS_N_NEIGHBORS) -> EpochsTensor:
    """Project each sensor onto the span of its most-correlated neighbors.

    All projections are computed from the original data, so the result
    does not depend on sensor order.
    """
    q = epochs.n_sensors
    if n_neighbors >= q:
        raise ContractError("n_neighbors must be below the sensor count")
    series = _concat(epochs)
    with np.errstate(invalid="ignore"):
        corr = np.nan_to_num(np.corrcoef(series), nan=0.0)
    strength = np.abs(corr)
    np.fill_diagonal(strength, -1.0)  # a sensor is never its own neighbor
    out = np.empty_like(series)
    for j in range(q):
        neighbors = np.argsort(-strength[j], kind="stable")[:n_neighbors]
        block = series[neighbors].T
        try:
            u, s, _ = np.linalg.svd(block, full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                f"degenerate neighbor covariance for sensor {j}: {exc}"
            ) from exc
        rank = int((s > s[0] * 1e-12).sum()) if s.size and s[0] > 0 else 0
        basis = u[:, :rank]
        out[j] = basis @ (basis.T @ series[j])
    data = out.reshape(q, epochs.n_trials, epochs.n_times).transpose(1, 0, 2)
    return EpochsTensor(data=data, sfreq_hz=epochs.sfreq_hz,
                        unit=epochs.unit, origin_flags=epochs.origin_flags)


def _pearson_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise Pearson correlation; zero-variance rows score 0."""
    ac = a - a.mean(axis=-1, keepdims=True)
    bc = b - b.mean(axis=-1, keepdims=True)
    na = np.linalg.norm(ac, axis=-1)
    nb = np.linalg.norm(bc, axis=-1)
    denom = na * nb
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = (ac * bc).sum(axis=-1) / denom
    return np.where(denom > 0, corr, 0.0)


def ransac_bad_sensors(epochs: EpochsTensor, layout: SensorLayout,
                       n_resamples: int = RANSAC_N_RESAMPLES,
                       fraction: float = RANSAC_FRACTION,
                       corr_threshold: float = RANSAC_CORR_THRESHOLD,
                       unbroken_time: float = RANSAC_UNBROKEN_TIME,
                       seed: int = 0):
    """PREP-style RANSAC bad-sensor detection.

    Every sensor is predicted from random sensor subsets by spherical
    splines; a cell is bad when the actual series correlates below the
    threshold with the instant-wise median prediction. A sensor is
    globally bad when it is bad in more than ``unbroken_time`` of the
    trials. Returns (per_trial_bad, global_bad).
    """
    n, q = epochs.n_trials, epochs.n_sensors
    subset_size = int(np.ceil(fraction * q))
    if subset_size < 4:
        raise ContractError(
            "fraction of sensors too small: need ceil(fraction*Q) >= 4"
        )
    all_targets = np.arange(q)
    operators = []
    for r in range(n_resamples):
        op = None
        for attempt in range(10):
            rng = np.random.default_rng([seed, r, attempt])
            subset = np.sort(rng.choice(q, size=subset_size, replace=False))
            try:
                op = (build_operator(layout, subset, all_targets), subset)
                break
            except Exception:
                op = None
        if op is None:
            raise ResampleError(
                f"could not build an operator for resample {r}"
            )
        operators.append(op)
    # trials processed in blocks to bound the resample stack in memory
    corr = np.empty((n, q))
    block = max(1, int(2e7 // (n_resamples * q * epochs.n_times)))
    for start in range(0, n, block):
        stop = min(start + block, n)
        chunk = epochs.data[start:stop]
        stack = np.empty((n_resamples, stop - start, q, epochs.n_times))
        for r, (op, subset) in enumerate(operators):
            stack[r] = np.einsum("fs,nst->nft", op.weights,
                                 chunk[:, subset, :])
        median_pred = np.median(stack, axis=0)
        corr[start:stop] = _pearson_rows(chunk, median_pred)
    per_trial_bad = corr < corr_threshold
    bad_fraction = per_trial_bad.mean(axis=0)
    global_bad = frozenset(np.flatnonzero(bad_fraction > unbroken_time)
                           .tolist())
    return per_trial_bad, global_bad
