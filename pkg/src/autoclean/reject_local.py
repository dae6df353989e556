"""Per-sensor threshold learning and reject-or-repair planning.

Thresholds are learned sensor by sensor on the augmented tensor (real
trials plus leave-one-sensor-out copies) with folds stratified so each
fold sees a near-equal share of both. The consensus parameter kappa
(trials with >= kappa bad sensors are rejected) and the repair budget
rho (at most rho worst sensors interpolated per retained trial) are
then picked by grid search on a second cross-validation over the
original trials only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    CELL_GOOD,
    CELL_INTERPOLATED,
    CELL_UNINTERPOLATED,
    EpochsTensor,
    RejectLog,
    SensorLayout,
    VERDICT_REJECTED,
    VERDICT_RETAINED,
    _canon_dumps,
)
from .errors import ContractError, FormatError, IoError, ModelMismatchError
from .interpolation import (
    CLUSTER_DIAMETER_DEG,
    angular_diameter_deg,
    augment,
    interpolate_sensors,
)
from .metrics import AmplitudeMatrix, peak_to_peak
from .optim import (
    N_INITIAL_DEFAULT,
    N_ITERATIONS_DEFAULT,
    SearchResult,
    grid_search_pairs,
    minimize_scalar,
)
from .reject_global import DEFAULT_K, FoldPlan, _GlobalObjective, make_folds

FLAT_RANGE_FRACTION = 1e-12


@dataclass(frozen=True)
class LocalModel:
    """Fitted per-sensor thresholds plus the selected (rho, kappa)."""

    sensor_names: tuple
    sensor_taus: np.ndarray
    rho_star: int
    kappa_star: int
    fold_seed: int
    cv_table: dict
    threshold_traces: tuple
    sensor_tau_bounds: tuple
    flat_sensors: tuple = ()

    def __post_init__(self):
        if not self.rho_star < self.kappa_star:
            raise ContractError("repair budget must be below the consensus")
        taus = np.array(self.sensor_taus, dtype=np.float64, copy=True)
        if taus.shape != (len(self.sensor_names),):
            raise ContractError("one threshold per sensor required")
        bounds = tuple((float(lo), float(hi))
                       for lo, hi in self.sensor_tau_bounds)
        for tau, (lo, hi) in zip(taus, bounds):
            if not lo <= tau <= hi:
                raise ContractError("sensor threshold outside its bounds")
        taus.flags.writeable = False
        object.__setattr__(self, "sensor_names", tuple(self.sensor_names))
        object.__setattr__(self, "sensor_taus", taus)
        object.__setattr__(self, "sensor_tau_bounds", bounds)
        object.__setattr__(self, "flat_sensors", tuple(self.flat_sensors))
        object.__setattr__(self, "cv_table", dict(self.cv_table))
        object.__setattr__(self, "threshold_traces",
                           tuple(self.threshold_traces))


@dataclass(frozen=True)
class LocalFitConfig:
    K: int = DEFAULT_K
    seed: int = 0
    budget: tuple = (N_INITIAL_DEFAULT, N_ITERATIONS_DEFAULT)
    rho_candidates: tuple | None = None
    kappa_candidates: tuple | None = None


def default_rho_candidates(n_sensors: int) -> tuple:
    return tuple(r for r in (1, 2, 4, 8, 16, 32) if r <= n_sensors - 1)


def default_kappa_candidates(n_sensors: int) -> tuple:
    return tuple(sorted({math.ceil(f / 10 * n_sensors)
                         for f in range(1, 11)}))


def fit_sensor_thresholds(epochs: EpochsTensor, layout: SensorLayout,
                          K: int = DEFAULT_K, seed: int = 0,
                          budget=(N_INITIAL_DEFAULT, N_ITERATIONS_DEFAULT)):
    """Learn one threshold per sensor on the augmented tensor.

    Random streams are keyed by (seed, sensor index) so per-sensor fits
    can run in any order, or concurrently, with identical results.
    Near-flat sensors (augmented amplitude range below 1e-12 of the
    median sensor range) are excluded from fitting and reported.

    Returns (sensor_taus, traces, bounds, flat_indices).
    """
    q = epochs.n_sensors
    if epochs.n_trials < K:
        raise ContractError("need at least K trials")
    aug = augment(epochs, layout)
    amps = peak_to_peak(aug).values
    # flatness is judged on the real trials: the leave-one-out copy of
    # a dead sensor picks up its neighbors' variation
    orig_amps = peak_to_peak(epochs).values
    ranges = orig_amps.max(axis=0)
    med_range = float(np.median(ranges))
    flat = np.flatnonzero(ranges < FLAT_RANGE_FRACTION * med_range)
    flat_set = set(flat.tolist())
    n_initial, n_iterations = budget
    taus = np.empty(q)
    traces: list = []
    bounds: list = []
    for j in range(q):
        lo, hi = float(amps[:, j].min()), float(amps[:, j].max())
        bounds.append((lo, hi))
        if j in flat_set or lo == hi:
            taus[j] = hi
            traces.append(SearchResult(x_star=hi, y_star=0.0,
                                       trace=(), degenerate=True))
            continue
        folds = make_folds(aug.n_trials, K, seed=[seed, j, 0],
                           strata=aug.origin_flags)
        objective = _GlobalObjective(aug.data[:, j:j + 1, :], amps[:, j],
                                     folds)
        result = minimize_scalar(objective, (lo, hi), n_initial=n_initial,
                                 n_iterations=n_iterations, seed=[seed, j, 1])
        taus[j] = result.x_star
        traces.append(result)
    return taus, tuple(traces), tuple(bounds), tuple(flat.tolist())


def indicator(amplitudes: AmplitudeMatrix, sensor_taus) -> np.ndarray:
    """Boolean N x Q matrix: amplitude strictly above its threshold."""
    taus = np.asarray(sensor_taus, dtype=np.float64)
    if not np.all(np.isfinite(taus)):
        raise ContractError("sensor thresholds must be finite")
    return amplitudes.values > taus[np.newaxis, :]


def score_sensors(amplitudes: AmplitudeMatrix, C: np.ndarray) -> np.ndarray:
    """Badness scores: the amplitude where flagged, -inf elsewhere."""
    if C.shape != amplitudes.values.shape:
        raise ContractError("indicator shape must match amplitudes")
    return np.where(C, amplitudes.values, -np.inf)


def repair_plan(C: np.ndarray, scores: np.ndarray, rho: int,
                kappa: int) -> RejectLog:
    """Decide reject-vs-repair per trial for fixed (rho, kappa).

    Trials with >= kappa bad sensors are rejected; in the rest, the
    min(rho, bad-count) highest-scoring bad sensors are marked for
    interpolation (ties broken by lower sensor index).
    """
    n, q = C.shape
    if not (0 <= rho < kappa <= q):
        raise ContractError(
            f"need 0 <= rho < kappa <= Q, got rho={rho}, kappa={kappa}"
        )
    n_bad = C.sum(axis=1)
    verdicts = []
    state = np.full((n, q), CELL_GOOD, dtype="U1")
    for i in range(n):
        bad = np.flatnonzero(C[i])
        if n_bad[i] >= kappa:
            verdicts.append(VERDICT_REJECTED)
            state[i, bad] = CELL_UNINTERPOLATED
            continue
        verdicts.append(VERDICT_RETAINED)
        if bad.size == 0:
            continue
        n_interp = min(rho, bad.size)
        order = np.lexsort((np.arange(q), -scores[i]))[:n_interp]
        state[i, order] = CELL_INTERPOLATED
        rest = np.setdiff1d(bad, order, assume_unique=True)
        state[i, rest] = CELL_UNINTERPOLATED
    return RejectLog(
        trial_verdicts=tuple(verdicts),
        cell_state=state,
        scores=scores,
        provenance={"method": "local", "rho_star": int(rho),
                    "kappa_star": int(kappa)},
    )


def cv_error_local(epochs: EpochsTensor, layout: SensorLayout, sensor_taus,
                   rho: int, kappa: int, folds: FoldPlan) -> float:
    """Mean CV error of the full reject-and-repair transform.

    Training trials are filtered and repaired under (rho, kappa); the
    validation median is never filtered.
    """
    amps = peak_to_peak(epochs)
    C = indicator(amps, sensor_taus)
    scores = score_sensors(amps, C)
    plan = repair_plan(C, scores, rho, kappa)
    repaired = interpolate_sensors(epochs, layout,
                                   plan.cell_state == CELL_INTERPOLATED)
    retained = ~plan.rejected_mask
    errors = []
    for k in range(folds.K):
        val = folds.assignments == k
        good = ~val & retained
        med = np.median(epochs.data[val], axis=0)
        if good.any():
            mean = repaired.data[good].mean(axis=0)
        else:
            mean = np.zeros_like(med)
        errors.append(float(np.linalg.norm(mean - med)))
    return float(np.mean(errors))


def fit_local(epochs: EpochsTensor, layout: SensorLayout,
              config: LocalFitConfig = LocalFitConfig()) -> LocalModel:
    """Full local fit: sensor thresholds, then (rho, kappa) grid search."""
    q = epochs.n_sensors
    rhos = config.rho_candidates or default_rho_candidates(q)
    kappas = config.kappa_candidates or default_kappa_candidates(q)
    taus, traces, bounds, flat = fit_sensor_thresholds(
        epochs, layout, K=config.K, seed=config.seed, budget=config.budget
    )
    amps = peak_to_peak(epochs)
    C = indicator(amps, taus)
    scores = score_sensors(amps, C)
    folds = make_folds(epochs.n_trials, config.K, seed=[config.seed, q])
    val_medians = [np.median(epochs.data[folds.assignments == k], axis=0)
                   for k in range(folds.K)]
    repaired_cache: dict = {}

    def objective(rho, kappa):
        plan = repair_plan(C, scores, rho, kappa)
        interp = plan.cell_state == CELL_INTERPOLATED
        key = (rho, interp.tobytes())
        data = repaired_cache.get(key)
        if data is None:
            data = interpolate_sensors(epochs, layout, interp).data
            repaired_cache[key] = data
        retained = ~plan.rejected_mask
        errors = []
        for k in range(folds.K):
            val = folds.assignments == k
            good = ~val & retained
            if good.any():
                mean = data[good].mean(axis=0)
            else:
                mean = np.zeros_like(val_medians[k])
            errors.append(float(np.linalg.norm(mean - val_medians[k])))
        return float(np.mean(errors))

    (rho_star, kappa_star), _, table = grid_search_pairs(
        objective, rhos, kappas
    )
    return LocalModel(
        sensor_names=layout.names,
        sensor_taus=taus,
        rho_star=int(rho_star),
        kappa_star=int(kappa_star),
        fold_seed=int(config.seed),
        cv_table=table,
        threshold_traces=traces,
        sensor_tau_bounds=bounds,
        flat_sensors=tuple(layout.names[j] for j in flat),
    )


def transform(epochs: EpochsTensor, layout: SensorLayout,
              model: LocalModel):
    """Apply a fitted local model: reject, repair, and log.

    Returns (cleaned epochs restricted to retained trials, RejectLog
    over all input trials).
    """
    if tuple(layout.names) != tuple(model.sensor_names):
        raise ModelMismatchError("layout sensor names differ from the model")
    amps = peak_to_peak(epochs)
    C = indicator(amps, model.sensor_taus)
    scores = score_sensors(amps, C)
    plan = repair_plan(C, scores, model.rho_star, model.kappa_star)
    interp = plan.cell_state == CELL_INTERPOLATED
    repaired = interpolate_sensors(epochs, layout, interp)
    retained = ~plan.rejected_mask
    clustered = []
    for i in np.flatnonzero(interp.sum(axis=1) >= 2):
        flagged = np.flatnonzero(interp[i])
        if angular_diameter_deg(layout, flagged) < CLUSTER_DIAMETER_DEG:
            clustered.append(int(i))
    provenance = dict(plan.provenance)
    if clustered:
        provenance["clustered_repair_trials"] = clustered
    log = RejectLog(
        trial_verdicts=plan.trial_verdicts,
        cell_state=plan.cell_state,
        scores=plan.scores,
        provenance=provenance,
    )
    if not retained.any():
        raise ContractError("no trials retained by the model")
    cleaned = EpochsTensor(
        data=repaired.data[retained],
        sfreq_hz=epochs.sfreq_hz,
        unit=epochs.unit,
        origin_flags=epochs.origin_flags[retained],
    )
    return cleaned, log


# -- LocalModel serialization ----------------------------------------------

def _trace_to_doc(t: SearchResult) -> dict:
    return {"x_star": t.x_star, "y_star": t.y_star,
            "trace": [[x, y] for x, y in t.trace],
            "degenerate": t.degenerate}


def _trace_from_doc(doc: dict) -> SearchResult:
    return SearchResult(x_star=doc["x_star"], y_star=doc["y_star"],
                        trace=tuple((x, y) for x, y in doc["trace"]),
                        degenerate=doc["degenerate"])


def save_local_model(model: LocalModel, path) -> None:
    doc = {
        "version": 1,
        "kind": "local",
        "sensor_names": list(model.sensor_names),
        "sensor_taus": [float(t) for t in model.sensor_taus],
        "rho_star": model.rho_star,
        "kappa_star": model.kappa_star,
        "fold_seed": model.fold_seed,
        "cv_table": {f"{r},{k}": v for (r, k), v in model.cv_table.items()},
        "threshold_traces": [_trace_to_doc(t) for t in
                             model.threshold_traces],
        "sensor_tau_bounds": [[lo, hi] for lo, hi in
                              model.sensor_tau_bounds],
        "flat_sensors": list(model.flat_sensors),
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(_canon_dumps(doc))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_local_model(path) -> LocalModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"unparsable model file {path}: {exc}") from exc
    if doc.get("kind") != "local":
        raise FormatError(f"{path} is not a local model file")
    table = {}
    for key, v in doc["cv_table"].items():
        r, k = key.split(",")
        table[(int(r), int(k))] = v
    return LocalModel(
        sensor_names=tuple(doc["sensor_names"]),
        sensor_taus=np.array(doc["sensor_taus"]),
        rho_star=doc["rho_star"],
        kappa_star=doc["kappa_star"],
        fold_seed=doc["fold_seed"],
        cv_table=table,
        threshold_traces=tuple(_trace_from_doc(t)
                               for t in doc["threshold_traces"]),
        sensor_tau_bounds=tuple((lo, hi)
                                for lo, hi in doc["sensor_tau_bounds"]),
        flat_sensors=tuple(doc["flat_sensors"]),
    )
