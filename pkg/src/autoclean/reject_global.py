"""Single-threshold trial rejection learned by robust cross-validation.

Per fold, the candidate threshold filters the training trials; the
mean of the surviving trials is compared against the median of all
validation trials (which never depends on the threshold). The mean CV
error is minimized by Bayesian optimization over the observed
amplitude range.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import EpochsTensor, RejectLog, ThresholdModel, _canon_dumps
from .errors import ContractError, FormatError, IoError
from .metrics import AmplitudeMatrix, peak_to_peak
from .optim import (
    N_INITIAL_DEFAULT,
    N_ITERATIONS_DEFAULT,
    SearchResult,
    minimize_scalar,
)

DEFAULT_K = 5


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of each trial to one of K cross-validation folds."""

    K: int
    assignments: np.ndarray

    def __post_init__(self):
        if self.K < 2:
            raise ContractError("need at least 2 folds")
        a = np.array(self.assignments, dtype=np.int64, copy=True)
        if a.ndim != 1 or np.any(a < 0) or np.any(a >= self.K):
            raise ContractError("fold indices must lie in [0, K)")
        counts = np.bincount(a, minlength=self.K)
        if counts.min() == 0:
            raise ContractError("every fold must be nonempty")
        a.flags.writeable = False
        object.__setattr__(self, "assignments", a)


def make_folds(n: int, K: int, seed=0, strata=None) -> FoldPlan:
    """Seeded shuffle + round-robin fold assignment.

    With ``strata`` (a boolean vector), the round-robin runs per
    stratum so each fold gets a near-equal share of both classes.
    """
    if K > n:
        raise ContractError(f"K={K} folds need at least {K} trials, got {n}")
    key = [seed] if np.isscalar(seed) else list(seed)
    rng = np.random.default_rng(key)
    assignments = np.empty(n, dtype=np.int64)
    if strata is None:
        groups = [np.arange(n)]
    else:
        strata = np.asarray(strata, dtype=bool)
        if strata.shape != (n,):
            raise ContractError("strata must have one entry per trial")
        groups = [np.flatnonzero(~strata), np.flatnonzero(strata)]
    for group in groups:
        if group.size == 0:
            continue
        perm = rng.permutation(group)
        assignments[perm] = np.arange(group.size) % K
    return FoldPlan(K=K, assignments=assignments)


class _GlobalObjective:
    """CV error as a function of tau, with per-fold stats precomputed.

    Works on raw arrays so single-sensor slices (used by the per-sensor
    fits) can reuse it.
    """

    def __init__(self, data: np.ndarray, max_amp: np.ndarray,
                 folds: FoldPlan):
        if max_amp.shape[0] != data.shape[0]:
            raise ContractError("amplitudes and data disagree on N")
        self.max_amp = max_amp
        self.data = data
        self.folds = folds
        self.train_masks = []
        self.val_medians = []
        for k in range(folds.K):
            val = folds.assignments == k
            self.train_masks.append(~val)
            self.val_medians.append(np.median(self.data[val], axis=0))

    def per_fold(self, tau: float) -> list:
        errors = []
        keep = self.max_amp <= tau
        for train, med in zip(self.train_masks, self.val_medians):
            good = train & keep
            if good.any():
                mean = self.data[good].mean(axis=0)
            else:
                mean = np.zeros_like(med)
            errors.append(float(np.linalg.norm(mean - med)))
        return errors

    def __call__(self, tau: float) -> float:
        return float(np.mean(self.per_fold(tau)))


def cv_error_global(epochs: EpochsTensor, amplitudes: AmplitudeMatrix,
                    folds: FoldPlan, tau: float):
    """Mean and per-fold mismatch between filtered mean and raw median."""
    if not np.isfinite(tau):
        raise ContractError("tau must be finite")
    obj = _GlobalObjective(epochs.data, amplitudes.values.max(axis=1), folds)
    per_fold = obj.per_fold(tau)
    return float(np.mean(per_fold)), per_fold


def fit_global(epochs: EpochsTensor, K: int = DEFAULT_K, seed: int = 0,
               budget=(N_INITIAL_DEFAULT, N_ITERATIONS_DEFAULT)):
    """Learn the single best peak-to-peak threshold.

    Bounds come from the per-trial maximum amplitudes; constant
    amplitudes short-circuit to a degenerate result.
    """
    if epochs.n_trials < K:
        raise ContractError("need at least K trials")
    amplitudes = peak_to_peak(epochs)
    max_amp = amplitudes.values.max(axis=1)
    lo, hi = float(max_amp.min()), float(max_amp.max())
    folds = make_folds(epochs.n_trials, K, seed=seed)
    objective = _GlobalObjective(epochs.data, max_amp, folds)
    if lo == hi:
        y = objective(lo)
        result = SearchResult(x_star=lo, y_star=y, trace=((lo, y),),
                              degenerate=True)
    else:
        n_initial, n_iterations = budget
        result = minimize_scalar(objective, (lo, hi), n_initial=n_initial,
                                 n_iterations=n_iterations, seed=seed)
    traces = tuple(
        (x, tuple(objective.per_fold(x)), y) for x, y in result.trace
    )
    model = ThresholdModel(
        global_tau=result.x_star,
        tau_bounds=(lo, hi),
        cv_traces=traces,
        degenerate=result.degenerate,
    )
    return model, result


def apply_global(epochs: EpochsTensor, tau: float) -> RejectLog:
    """Reject every trial whose worst sensor exceeds tau."""
    max_amp = peak_to_peak(epochs).values.max(axis=1)
    verdicts = tuple(
        "rejected" if a > tau else "retained" for a in max_amp
    )
    log = RejectLog.all_good(epochs.n_trials, epochs.n_sensors,
                             provenance={"method": "global",
                                         "tau": float(tau)})
    return RejectLog(
        trial_verdicts=verdicts,
        cell_state=log.cell_state,
        scores=log.scores,
        provenance=log.provenance,
    )


# -- ThresholdModel serialization ------------------------------------------

def save_threshold_model(model: ThresholdModel, path) -> None:
    doc = {
        "version": 1,
        "kind": "global",
        "global_tau": model.global_tau,
        "tau_bounds": list(model.tau_bounds) if model.tau_bounds else None,
        "degenerate": model.degenerate,
        "cv_traces": [[x, list(folds), y] for x, folds, y in
                      model.cv_traces],
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(_canon_dumps(doc))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_threshold_model(path) -> ThresholdModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"unparsable model file {path}: {exc}") from exc
    if doc.get("kind") != "global":
        raise FormatError(f"{path} is not a global model file")
    return ThresholdModel(
        global_tau=doc["global_tau"],
        tau_bounds=tuple(doc["tau_bounds"]) if doc["tau_bounds"] else None,
        degenerate=doc["degenerate"],
        cv_traces=tuple((x, tuple(folds), y)
                        for x, folds, y in doc["cv_traces"]),
    )
