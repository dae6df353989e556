"""Seeded synthetic epochs with ground truth, and the benchmark harness."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import CELL_GOOD, EpochsTensor, RejectLog, SensorLayout
from .errors import ContractError, IoError
from .metrics import EvokedMatrix, eval_l2, eval_linf, trial_mean

_METRICS = {"linf": eval_linf, "l2": eval_l2}


@dataclass(frozen=True)
class SimConfig:
    """Knobs of the synthetic generator.

    The artifact amplitude must exceed 5x the combined evoked and noise
    amplitudes so planted artifacts are separable by construction.
    """

    n_trials: int = 100
    n_sensors: int = 32
    n_times: int = 200
    sfreq_hz: float = 200.0
    evoked_amplitude: float = 1e-6
    noise_amplitude: float = 1e-6
    artifact_amplitude: float = 1e-4
    p_cell_artifact: float = 0.0016
    global_bad_sensors: int = 0
    blink_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.artifact_amplitude <= 5 * (self.evoked_amplitude
                                           + self.noise_amplitude):
            raise ContractError(
                "artifact amplitude must exceed 5x (evoked + noise)"
            )
        for p in (self.p_cell_artifact, self.blink_rate):
            if not 0.0 <= p <= 1.0:
                raise ContractError("probabilities must lie in [0, 1]")
        if self.global_bad_sensors < 0:
            raise ContractError("global_bad_sensors cannot be negative")
        if self.global_bad_sensors > self.n_sensors:
            raise ContractError("more globally bad sensors than sensors")


@dataclass(frozen=True)
class GroundTruth:
    clean_epochs: EpochsTensor
    corruption_mask: np.ndarray
    clean_evoked: EvokedMatrix

    def __post_init__(self):
        mask = np.array(self.corruption_mask, dtype=bool, copy=True)
        mask.flags.writeable = False
        object.__setattr__(self, "corruption_mask", mask)


def fibonacci_sphere(n: int) -> np.ndarray:
    """n roughly equidistant points on the unit sphere."""
    i = np.arange(n, dtype=np.float64)
    z = 1.0 - (2.0 * i + 1.0) / n
    r = np.sqrt(np.maximum(1.0 - z ** 2, 0.0))
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _pink_noise(rng, n_times: int) -> np.ndarray:
    """Unit-scale 1/f noise trace (spectral exponent 1)."""
    n_freq = n_times // 2 + 1
    spectrum = (rng.standard_normal(n_freq)
                + 1j * rng.standard_normal(n_freq))
    freqs = np.arange(n_freq, dtype=np.float64)
    freqs[0] = 1.0
    spectrum *= freqs ** -0.5
    spectrum[0] = 0.0
    return np.fft.irfft(spectrum, n=n_times)


def _rescale_p2p(trace: np.ndarray, target: float) -> np.ndarray:
    span = trace.max() - trace.min()
    if span == 0:
        return trace
    return trace * (target / span)


def simulate(config: SimConfig):
    """Generate (corrupted epochs, layout, ground truth); seeded.

    Clean signal: a Gaussian-bump evoked template scaled per sensor by
    a degree-2 harmonic spatial pattern, plus per-cell 1/f noise
    rescaled to the configured peak-to-peak. Artifacts: per-cell square
    pulses, optional globally bad sensors (broadband noise every
    trial), and blink-like half-sine transients near the +z pole (not
    recorded in the corruption mask).
    """
    n, q, t = config.n_trials, config.n_sensors, config.n_times
    rng = np.random.default_rng(config.seed)
    positions = fibonacci_sphere(q)
    layout = SensorLayout(
        names=[f"S{j:03d}" for j in range(q)], positions=positions
    )
    times = np.arange(t, dtype=np.float64)
    bump = np.exp(-((times - t / 2.0) ** 2) / (2.0 * (t / 10.0) ** 2))
    spatial = 1.5 * positions[:, 2] ** 2 - 0.5
    signal = config.evoked_amplitude * spatial[:, None] * bump[None, :]
    clean = np.empty((n, q, t))
    for i in range(n):
        for j in range(q):
            noise = _rescale_p2p(_pink_noise(rng, t),
                                 config.noise_amplitude)
            clean[i, j] = signal[j] + noise
    corrupted = clean.copy()
    mask = np.zeros((n, q), dtype=bool)

    # per-cell square pulses
    cells = rng.random((n, q)) < config.p_cell_artifact
    for i, j in zip(*np.nonzero(cells)):
        start = int(rng.integers(1, t - t // 4))
        width = int(rng.integers(t // 8, t // 4))
        stop = min(start + width, t - 1)
        corrupted[i, j, start:stop] += config.artifact_amplitude
        mask[i, j] = True

    # globally bad sensors: broadband noise every trial
    if config.global_bad_sensors:
        bad_sensors = rng.choice(q, size=config.global_bad_sensors,
                                 replace=False)
        for j in bad_sensors:
            for i in range(n):
                burst = _rescale_p2p(rng.standard_normal(t),
                                     config.artifact_amplitude)
                corrupted[i, j] += burst
            mask[:, j] = True

    # blink-like transients on the 20% of sensors nearest the +z pole
    if config.blink_rate > 0:
        n_front = max(1, int(round(0.2 * q)))
        front = np.argsort(-positions[:, 2], kind="stable")[:n_front]
        width = max(2, int(round(0.3 * config.sfreq_hz)))
        width = min(width, t - 1)
        half_sine = np.sin(np.linspace(0.0, math.pi, width))
        blink_amp = 4.0 * config.noise_amplitude
        for i in range(n):
            if rng.random() < config.blink_rate:
                start = int(rng.integers(0, t - width))
                corrupted[i, front, start:start + width] += (
                    blink_amp * half_sine
                )

    flags = np.zeros(n, dtype=bool)
    clean_epochs = EpochsTensor(data=clean, sfreq_hz=config.sfreq_hz,
                                origin_flags=flags)
    corrupted_epochs = EpochsTensor(data=corrupted,
                                    sfreq_hz=config.sfreq_hz,
                                    origin_flags=flags)
    truth = GroundTruth(
        clean_epochs=clean_epochs,
        corruption_mask=mask,
        clean_evoked=trial_mean(clean_epochs, range(n)),
    )
    return corrupted_epochs, layout, truth


@dataclass(frozen=True)
class BenchReport:
    """Per-method distances to the clean evoked, sorted by method name."""

    metric: str
    rows: tuple  # (name, value or None, error message or None)

    def to_text(self) -> str:
        lines = [f"{'method':<24} {self.metric}"]
        for name, value, err in self.rows:
            shown = f"{value:.6e}" if value is not None else f"FAILED: {err}"
            lines.append(f"{name:<24} {shown}")
        return "\n".join(lines)

    def to_doc(self) -> dict:
        return {
            "version": 1,
            "metric": self.metric,
            "rows": [{"method": name, "value": value, "error": err}
                     for name, value, err in self.rows],
        }


def benchmark(dataset, methods, metric: str = "linf") -> BenchReport:
    """Score evoked estimates from each method against the ground truth.

    ``methods`` is a list of (name, fn) where fn maps (corrupted
    epochs, layout) to an EvokedMatrix. A no-rejection control is
    always included. Method failures are recorded, not fatal.
    """
    if metric not in _METRICS:
        raise ContractError(f"metric must be one of {sorted(_METRICS)}")
    epochs, layout, truth = dataset
    evaluate = _METRICS[metric]

    def no_rejection(ep, _layout):
        return trial_mean(ep, range(ep.n_trials))

    rows = []
    for name, fn in [("no-rejection", no_rejection)] + list(methods):
        try:
            evoked = fn(epochs, layout)
            rows.append((name, evaluate(evoked, truth.clean_evoked), None))
        except Exception as exc:
            rows.append((name, None, f"{type(exc).__name__}: {exc}"))
    rows.sort(key=lambda row: row[0])
    return BenchReport(metric=metric, rows=tuple(rows))


def save_bench_report(report: BenchReport, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(report.to_doc(), sort_keys=True,
                                separators=(",", ":")))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def detection_scores(log: RejectLog, truth: GroundTruth):
    """(precision, recall) of flagged cells against the planted mask.

    A cell counts as detected when its state is bad or its whole trial
    was rejected. Empty denominators follow the 0/0 := 1 convention.
    """
    mask = truth.corruption_mask
    if log.cell_state.shape != mask.shape:
        raise ContractError("log and ground truth shapes disagree")
    detected = (log.cell_state != CELL_GOOD) | log.rejected_mask[:, None]
    tp = int((detected & mask).sum())
    n_detected = int(detected.sum())
    n_true = int(mask.sum())
    precision = tp / n_detected if n_detected else 1.0
    recall = tp / n_true if n_true else 1.0
    return precision, recall
