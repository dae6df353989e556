"""Domain types and the on-disk epochs / reject-log formats.

All containers are immutable after construction: numpy payloads are
copied and marked read-only so instances can be shared freely across
threads.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContractError,
    DataError,
    FormatError,
    IoError,
    LayoutError,
    TruncationError,
)

ERB_MAGIC = b"ARJ1"
ERB_VERSION = 1

VERDICT_RETAINED = "retained"
VERDICT_REJECTED = "rejected"

CELL_GOOD = "g"
CELL_INTERPOLATED = "i"
CELL_UNINTERPOLATED = "b"
_CELL_STATES = {CELL_GOOD, CELL_INTERPOLATED, CELL_UNINTERPOLATED}

_UNITS = {"volt", "tesla"}


def _frozen(arr: np.ndarray, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class EpochsTensor:
    """Trials x sensors x time samples with sampling rate and unit.

    ``origin_flags[i]`` is True for trials that were synthesized by
    interpolation (data augmentation) rather than recorded.
    """

    data: np.ndarray
    sfreq_hz: float
    unit: str = "volt"
    origin_flags: np.ndarray | None = None

    def __post_init__(self):
        data = _frozen(self.data, np.float64)
        if data.ndim != 3:
            raise DataError(f"epochs data must be 3-D, got {data.ndim}-D")
        n, q, t = data.shape
        if n < 1 or q < 2 or t < 2:
            raise DataError(f"need N >= 1, Q >= 2, T >= 2, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise DataError("epochs data contains NaN or Inf")
        if not (self.sfreq_hz > 0 and math.isfinite(self.sfreq_hz)):
            raise DataError(f"sfreq_hz must be positive, got {self.sfreq_hz}")
        if self.unit not in _UNITS:
            raise DataError(f"unit must be one of {sorted(_UNITS)}")
        flags = self.origin_flags
        if flags is None:
            flags = np.zeros(n, dtype=bool)
        flags = _frozen(flags, bool)
        if flags.shape != (n,):
            raise DataError("origin_flags must have one entry per trial")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "origin_flags", flags)
        object.__setattr__(self, "sfreq_hz", float(self.sfreq_hz))

    @property
    def n_trials(self) -> int:
        return self.data.shape[0]

    @property
    def n_sensors(self) -> int:
        return self.data.shape[1]

    @property
    def n_times(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class SensorLayout:
    """Distinct sensor names with unit-sphere 3-D positions."""

    names: tuple
    positions: np.ndarray

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        if len(set(names)) != len(names):
            raise LayoutError("duplicate sensor names")
        pos = np.array(self.positions, dtype=np.float64, copy=True)
        if pos.shape != (len(names), 3):
            raise LayoutError(
                f"positions must be {len(names)} x 3, got {pos.shape}"
            )
        norms = np.linalg.norm(pos, axis=1)
        if np.any(norms < 0.999) or np.any(norms > 1.001):
            raise LayoutError(
                "sensor positions must lie on the unit sphere "
                "(norm within 0.1%)"
            )
        pos /= norms[:, np.newaxis]
        cosang = np.clip(pos @ pos.T, -1.0, 1.0)
        np.fill_diagonal(cosang, -1.0)
        min_sep = math.degrees(math.acos(float(cosang.max())))
        if min_sep <= 0.5:
            raise LayoutError(
                f"sensors closer than 0.5 degrees (min {min_sep:.4f})"
            )
        pos.flags.writeable = False
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "positions", pos)

    @property
    def n_sensors(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise LayoutError(f"unknown sensor name {name!r}") from None


@dataclass(frozen=True)
class RejectLog:
    """Per-trial verdicts plus the per-cell good/repaired/bad states."""

    trial_verdicts: tuple
    cell_state: np.ndarray
    scores: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        verdicts = tuple(self.trial_verdicts)
        for v in verdicts:
            if v not in (VERDICT_RETAINED, VERDICT_REJECTED):
                raise DataError(f"unknown trial verdict {v!r}")
        state = np.array(self.cell_state, dtype="U1", copy=True)
        if state.ndim != 2 or state.shape[0] != len(verdicts):
            raise DataError("cell_state must be N x Q with N verdicts")
        if not set(state.ravel().tolist()) <= _CELL_STATES:
            raise FormatError("unknown cell-state string")
        scores = np.array(self.scores, dtype=np.float64, copy=True)
        if scores.shape != state.shape:
            raise DataError("scores shape must match cell_state")
        if np.any(np.isnan(scores)) or np.any(scores == np.inf):
            raise DataError("scores must be finite or -inf")
        rejected = np.array([v == VERDICT_REJECTED for v in verdicts])
        if np.any(state[rejected] == CELL_INTERPOLATED):
            raise DataError("rejected trials cannot hold interpolated cells")
        rho = self.provenance.get("rho_star")
        if rho is not None and not self.provenance.get("manual"):
            n_interp = (state == CELL_INTERPOLATED).sum(axis=1)
            if np.any(n_interp > int(rho)):
                raise DataError(
                    "retained trial holds more interpolated cells than "
                    "the recorded repair budget"
                )
        state.flags.writeable = False
        scores.flags.writeable = False
        object.__setattr__(self, "trial_verdicts", verdicts)
        object.__setattr__(self, "cell_state", state)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "provenance", dict(self.provenance))

    @property
    def n_trials(self) -> int:
        return len(self.trial_verdicts)

    @property
    def rejected_mask(self) -> np.ndarray:
        return np.array(
            [v == VERDICT_REJECTED for v in self.trial_verdicts], dtype=bool
        )

    @classmethod
    def all_good(cls, n_trials: int, n_sensors: int, provenance=None):
        return cls(
            trial_verdicts=(VERDICT_RETAINED,) * n_trials,
            cell_state=np.full((n_trials, n_sensors), CELL_GOOD, dtype="U1"),
            scores=np.full((n_trials, n_sensors), -np.inf),
            provenance=provenance or {},
        )


@dataclass(frozen=True)
class ThresholdModel:
    """Fit result for a single global peak-to-peak threshold.

    ``cv_traces`` stores (threshold, per-fold errors, mean error) for
    every evaluated candidate.
    """

    global_tau: float | None = None
    sensor_taus: np.ndarray | None = None
    rho_star: int | None = None
    kappa_star: int | None = None
    cv_traces: tuple = ()
    tau_bounds: tuple | None = None
    degenerate: bool = False

    def __post_init__(self):
        if self.tau_bounds is not None and self.global_tau is not None:
            lo, hi = self.tau_bounds
            if not (lo <= self.global_tau <= hi):
                raise DataError("global threshold outside recorded bounds")
        if self.rho_star is not None and self.kappa_star is not None:
            if not self.rho_star < self.kappa_star:
                raise DataError("repair budget must be below the consensus")


# -- canonical JSON helpers -------------------------------------------------

def _canon_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _encode_scores(scores: np.ndarray) -> list:
    out = []
    for row in scores:
        out.append(["-inf" if v == -np.inf else float(v) for v in row])
    return out


def _decode_scores(rows) -> np.ndarray:
    arr = np.empty((len(rows), len(rows[0]) if rows else 0))
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            if v == "-inf":
                arr[i, j] = -np.inf
            elif isinstance(v, (int, float)):
                arr[i, j] = float(v)
            else:
                raise FormatError(f"bad score entry {v!r}")
    return arr


# -- ERB container ----------------------------------------------------------

def save_epochs(epochs: EpochsTensor, layout: SensorLayout,
                events, path) -> None:
    """Write an epochs recording bundle (ERB) file.

    Byte-deterministic for identical inputs: magic, little-endian
    header length, canonical JSON header, then the float64
    little-endian sample blob in trial-major order.
    """
    events = np.asarray(events, dtype=np.int64)
    if events.shape != (epochs.n_trials,):
        raise ContractError("need one integer event code per trial")
    if layout.n_sensors != epochs.n_sensors:
        raise ContractError("layout and epochs disagree on sensor count")
    header = {
        "version": ERB_VERSION,
        "n_trials": epochs.n_trials,
        "n_sensors": epochs.n_sensors,
        "n_times": epochs.n_times,
        "sfreq_hz": epochs.sfreq_hz,
        "unit": epochs.unit,
        "sensor_names": list(layout.names),
        "sensor_positions": [[float(x) for x in p] for p in layout.positions],
        "event_codes": [int(e) for e in events],
        "origin_flags": [bool(f) for f in epochs.origin_flags],
    }
    hbytes = _canon_dumps(header).encode("utf-8")
    blob = np.ascontiguousarray(epochs.data, dtype="<f8").tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(ERB_MAGIC)
            fh.write(struct.pack("<I", len(hbytes)))
            fh.write(hbytes)
            fh.write(blob)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_epochs(path):
    """Read an ERB file back into (epochs, layout, event_codes)."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if raw[:4] != ERB_MAGIC:
        raise FormatError(f"bad magic bytes in {path}")
    if len(raw) < 8:
        raise TruncationError(f"{path} truncated before header length")
    (hlen,) = struct.unpack("<I", raw[4:8])
    if len(raw) < 8 + hlen:
        raise TruncationError(f"{path} truncated inside header")
    try:
        header = json.loads(raw[8:8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unparsable header in {path}: {exc}") from exc
    required = {"version", "n_trials", "n_sensors", "n_times", "sfreq_hz",
                "unit", "sensor_names", "sensor_positions", "event_codes",
                "origin_flags"}
    missing = required - set(header)
    if missing:
        raise FormatError(f"header missing keys {sorted(missing)}")
    if header["version"] != ERB_VERSION:
        raise FormatError(f"unsupported ERB version {header['version']}")
    n, q, t = header["n_trials"], header["n_sensors"], header["n_times"]
    blob = raw[8 + hlen:]
    expected = n * q * t * 8
    if len(blob) < expected:
        raise TruncationError(
            f"{path}: header declares {expected} payload bytes, "
            f"got {len(blob)}"
        )
    data = np.frombuffer(blob[:expected], dtype="<f8").reshape(n, q, t)
    names = header["sensor_names"]
    if len(set(names)) != len(names):
        raise LayoutError("duplicate sensor names")
    layout = SensorLayout(names=names, positions=header["sensor_positions"])
    epochs = EpochsTensor(
        data=data,
        sfreq_hz=header["sfreq_hz"],
        unit=header["unit"],
        origin_flags=np.array(header["origin_flags"], dtype=bool),
    )
    events = np.array(header["event_codes"], dtype=np.int64)
    if events.shape != (n,):
        raise FormatError("event_codes length does not match n_trials")
    return epochs, layout, events


# -- RejectLog serialization ------------------------------------------------

def save_reject_log(log: RejectLog, path) -> None:
    doc = {
        "version": 1,
        "trial_verdicts": list(log.trial_verdicts),
        "cell_state": ["".join(row) for row in log.cell_state],
        "scores": _encode_scores(log.scores),
        "provenance": log.provenance,
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(_canon_dumps(doc))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_reject_log(path) -> RejectLog:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"unparsable reject log {path}: {exc}") from exc
    try:
        rows = [list(s) for s in doc["cell_state"]]
        return RejectLog(
            trial_verdicts=tuple(doc["trial_verdicts"]),
            cell_state=np.array(rows, dtype="U1").reshape(
                len(rows), len(rows[0]) if rows else 0
            ),
            scores=_decode_scores(doc["scores"]),
            provenance=doc.get("provenance", {}),
        )
    except KeyError as exc:
        raise FormatError(f"reject log missing key {exc}") from exc
