"""Evoked-estimator wrappers used by the benchmark harness and the CLI.

Each method maps (corrupted epochs, layout) to an EvokedMatrix so they
can be compared on equal footing.
"""

from __future__ import annotations

import numpy as np

from .baselines import faster_bad_sensors, ransac_bad_sensors, sns_clean
from .core import EpochsTensor, SensorLayout
from .interpolation import interpolate_sensors
from .metrics import EvokedMatrix, trial_mean
from .reject_global import apply_global, fit_global
from .reject_local import LocalFitConfig, fit_local, transform


def _mean_all(epochs: EpochsTensor) -> EvokedMatrix:
    return trial_mean(epochs, range(epochs.n_trials))


def evoked_no_rejection(epochs, layout) -> EvokedMatrix:
    return _mean_all(epochs)


def evoked_autoreject_local(epochs, layout, seed: int = 0,
                            config: LocalFitConfig | None = None):
    config = config or LocalFitConfig(seed=seed)
    model = fit_local(epochs, layout, config)
    cleaned, _log = transform(epochs, layout, model)
    return _mean_all(cleaned)


def evoked_autoreject_global(epochs, layout, seed: int = 0):
    model, _ = fit_global(epochs, seed=seed)
    log = apply_global(epochs, model.global_tau)
    retained = np.flatnonzero(~log.rejected_mask)
    return trial_mean(epochs, retained)


def evoked_sns(epochs, layout) -> EvokedMatrix:
    return _mean_all(sns_clean(epochs))


def _interpolate_everywhere(epochs, layout, sensors) -> EpochsTensor:
    mask = np.zeros((epochs.n_trials, epochs.n_sensors), dtype=bool)
    mask[:, sorted(sensors)] = True
    if not mask.any():
        return epochs
    return interpolate_sensors(epochs, layout, mask)


def evoked_faster(epochs, layout, mains_hz: float = 50.0) -> EvokedMatrix:
    report = faster_bad_sensors(epochs, layout, mains_hz=mains_hz)
    return _mean_all(_interpolate_everywhere(epochs, layout, report.union))


def evoked_ransac(epochs, layout, seed: int = 0) -> EvokedMatrix:
    _per_trial, global_bad = ransac_bad_sensors(epochs, layout, seed=seed)
    return _mean_all(_interpolate_everywhere(epochs, layout, global_bad))


def standard_methods(names, seed: int = 0):
    """Resolve method names to (name, fn) pairs for the benchmark."""
    registry = {
        "autoreject-local": lambda e, l: evoked_autoreject_local(
            e, l, seed=seed),
        "autoreject-global": lambda e, l: evoked_autoreject_global(
            e, l, seed=seed),
        "sns": evoked_sns,
        "faster": evoked_faster,
        "ransac": lambda e, l: evoked_ransac(e, l, seed=seed),
    }
    out = []
    for name in names:
        if name == "no-rejection":
            continue  # benchmark adds the control itself
        if name not in registry:
            raise KeyError(f"unknown method {name!r}; "
                           f"choose from {sorted(registry)}")
        out.append((name, registry[name]))
    return out
