"""Spherical-spline interpolation over the sensor sphere.

Used for repairing flagged sensors, leave-one-sensor-out data
augmentation, and the RANSAC baseline's predictions. The kernel is a
truncated Legendre series; a bordered linear system carries the
constant term so constant fields are reproduced exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import legval

from .core import EpochsTensor, SensorLayout
from .errors import GeometryError, NumericalError, RepairError

DEFAULT_STIFFNESS = 4
DEFAULT_N_TERMS = 50
DEFAULT_REG = 1e-5

CLUSTER_DIAMETER_DEG = 20.0


@dataclass(frozen=True)
class InterpolationOperator:
    """Linear map predicting target sensors from source sensors."""

    source_ids: tuple
    target_ids: tuple
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, copy=True)
        if w.shape != (len(self.target_ids), len(self.source_ids)):
            raise NumericalError("weight matrix shape mismatch")
        w.flags.writeable = False
        object.__setattr__(self, "source_ids", tuple(self.source_ids))
        object.__setattr__(self, "target_ids", tuple(self.target_ids))
        object.__setattr__(self, "weights", w)

    def apply(self, source_series: np.ndarray) -> np.ndarray:
        """Predict target series from |sources| x T source samples."""
        return self.weights @ source_series


def _spline_kernel(cosang: np.ndarray, stiffness: int,
                   n_terms: int) -> np.ndarray:
    n = np.arange(1, n_terms + 1, dtype=np.float64)
    coeffs = np.zeros(n_terms + 1)
    coeffs[1:] = (2 * n + 1) / (n ** stiffness * (n + 1) ** stiffness
                                * 4 * np.pi)
    return legval(np.clip(cosang, -1.0, 1.0), coeffs)


def build_operator(layout: SensorLayout, sources, targets,
                   stiffness_order: int = DEFAULT_STIFFNESS,
                   n_terms: int = DEFAULT_N_TERMS,
                   reg: float = DEFAULT_REG) -> InterpolationOperator:
    """Solve the spherical-spline system for a source -> target map.

    ``sources`` and ``targets`` are sensor indices into the layout;
    self-targets are allowed (used by the RANSAC baseline).
    """
    src = np.asarray(list(sources), dtype=np.intp)
    tgt = np.asarray(list(targets), dtype=np.intp)
    if src.size < 4:
        raise GeometryError(f"need at least 4 source sensors, got {src.size}")
    pos = layout.positions
    g_ss = _spline_kernel(pos[src] @ pos[src].T, stiffness_order, n_terms)
    g_ts = _spline_kernel(pos[tgt] @ pos[src].T, stiffness_order, n_terms)
    s = src.size
    bordered = np.zeros((s + 1, s + 1))
    bordered[:s, :s] = g_ss + reg * np.eye(s)
    bordered[:s, s] = 1.0
    bordered[s, :s] = 1.0
    rhs = np.zeros((s + 1, s))
    rhs[:s, :] = np.eye(s)
    try:
        solved = np.linalg.solve(bordered, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"singular spline system for {s} sources: {exc}"
        ) from exc
    weights = np.hstack([g_ts, np.ones((tgt.size, 1))]) @ solved
    return InterpolationOperator(
        source_ids=tuple(layout.names[i] for i in src),
        target_ids=tuple(layout.names[i] for i in tgt),
        weights=weights,
    )


def angular_diameter_deg(layout: SensorLayout, indices) -> float:
    """Largest pairwise angular separation among the given sensors."""
    idx = np.asarray(list(indices), dtype=np.intp)
    if idx.size < 2:
        return 0.0
    pos = layout.positions[idx]
    cosang = np.clip(pos @ pos.T, -1.0, 1.0)
    return math.degrees(math.acos(float(cosang.min())))


def interpolate_sensors(epochs: EpochsTensor, layout: SensorLayout,
                        bad_per_trial: np.ndarray) -> EpochsTensor:
    """Replace flagged sensors' series by spline predictions.

    Predictions come from each trial's unflagged sensors; unflagged
    samples are returned bit-identical.
    """
    bad = np.asarray(bad_per_trial, dtype=bool)
    if bad.shape != (epochs.n_trials, epochs.n_sensors):
        raise RepairError("mask must be n_trials x n_sensors")
    if not bad.any():
        return epochs
    out = np.array(epochs.data, copy=True)
    cache: dict = {}
    # trials sharing a flag pattern reuse one operator
    patterns: dict = {}
    for i in range(epochs.n_trials):
        row = bad[i]
        if row.any():
            patterns.setdefault(row.tobytes(), []).append(i)
    for key, trials in patterns.items():
        row = np.frombuffer(key, dtype=bool)
        good = np.flatnonzero(~row)
        flagged = np.flatnonzero(row)
        if good.size < 4:
            raise RepairError(
                f"trial {trials[0]} has only {good.size} good sensors"
            )
        op = cache.get(key)
        if op is None:
            op = build_operator(layout, good, flagged)
            cache[key] = op
        block = epochs.data[np.asarray(trials)][:, good, :]
        out[np.asarray(trials)[:, None], flagged[None, :], :] = (
            np.einsum("fs,nst->nft", op.weights, block)
        )
    return EpochsTensor(
        data=out,
        sfreq_hz=epochs.sfreq_hz,
        unit=epochs.unit,
        origin_flags=epochs.origin_flags,
    )


def augment(epochs: EpochsTensor, layout: SensorLayout) -> EpochsTensor:
    """Double the trial count with leave-one-sensor-out copies.

    The first N trials are the originals; the next N replace each
    sensor by its prediction from the other Q - 1 sensors. One operator
    per held-out sensor is precomputed from the layout alone.
    """
    q = epochs.n_sensors
    if q < 5:
        raise GeometryError(f"augmentation needs Q >= 5 sensors, got {q}")
    aug = np.empty_like(epochs.data)
    for j in range(q):
        others = np.flatnonzero(np.arange(q) != j)
        op = build_operator(layout, others, [j])
        aug[:, j, :] = np.einsum(
            "fs,nst->nft", op.weights, epochs.data[:, others, :]
        )[:, 0, :]
    flags = np.concatenate([epochs.origin_flags, np.ones(epochs.n_trials,
                                                         dtype=bool)])
    return EpochsTensor(
        data=np.concatenate([epochs.data, aug], axis=0),
        sfreq_hz=epochs.sfreq_hz,
        unit=epochs.unit,
        origin_flags=flags,
    )
