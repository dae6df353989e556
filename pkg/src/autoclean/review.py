"""Human review loop: bundle export, override application, HTTP server.

The review loop edits the RejectLog only, never raw samples, so every
human decision stays auditable in the log's provenance.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

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
from .errors import ContractError, FormatError, IoError, OverrideError

_ACTIONS = {"keep", "reject", "interpolate"}

BUNDLE_BYTE_BUDGET = 50_000_000


@dataclass(frozen=True)
class OverrideEntry:
    trial: int
    sensor: str | None
    action: str

    def __post_init__(self):
        if self.action not in _ACTIONS:
            raise OverrideError(f"unknown action {self.action!r}")
        if self.action == "interpolate" and self.sensor is None:
            raise OverrideError("interpolate requires a sensor name")
        if self.action == "reject" and self.sensor is not None:
            raise OverrideError("reject applies to whole trials only")


@dataclass(frozen=True)
class OverrideSet:
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    def to_doc(self) -> dict:
        return {
            "version": 1,
            "entries": [
                {"trial": e.trial, "sensor": e.sensor, "action": e.action}
                for e in self.entries
            ],
        }

    @classmethod
    def from_doc(cls, doc) -> "OverrideSet":
        if not isinstance(doc, dict) or "entries" not in doc:
            raise OverrideError("override document needs an 'entries' list")
        entries = []
        for pos, raw in enumerate(doc["entries"]):
            if not isinstance(raw, dict):
                raise OverrideError(f"entries[{pos}] must be an object")
            try:
                trial = int(raw["trial"])
            except (KeyError, TypeError, ValueError):
                raise OverrideError(
                    f"entries[{pos}].trial must be an integer"
                ) from None
            sensor = raw.get("sensor")
            if sensor is not None:
                sensor = str(sensor)
            action = raw.get("action")
            if action not in _ACTIONS:
                raise OverrideError(
                    f"entries[{pos}].action must be one of {sorted(_ACTIONS)}"
                )
            entries.append(OverrideEntry(trial=trial, sensor=sensor,
                                         action=action))
        return cls(entries=tuple(entries))


def save_overrides(overrides: OverrideSet, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(_canon_dumps(overrides.to_doc()))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_overrides(path) -> OverrideSet:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"unparsable overrides {path}: {exc}") from exc
    return OverrideSet.from_doc(doc)


def _validate_overrides(overrides: OverrideSet, n_trials: int,
                        sensor_names) -> None:
    names = set(sensor_names)
    for pos, e in enumerate(overrides.entries):
        if not 0 <= e.trial < n_trials:
            raise OverrideError(
                f"entries[{pos}].trial {e.trial} outside [0, {n_trials})"
            )
        if e.sensor is not None and e.sensor not in names:
            raise OverrideError(
                f"entries[{pos}].sensor {e.sensor!r} is unknown"
            )


def apply_overrides(log: RejectLog, overrides: OverrideSet,
                    sensor_names) -> RejectLog:
    """Fold human decisions back into a reject log.

    Entries apply in order, so later entries shadow earlier ones for
    the same target. Trial-scope keep clears the whole trial; reject
    demotes interpolated cells so the log invariants keep holding.
    """
    names = list(sensor_names)
    if len(names) != log.cell_state.shape[1]:
        raise ContractError("sensor names must match the log width")
    _validate_overrides(overrides, log.n_trials, names)
    verdicts = list(log.trial_verdicts)
    state = np.array(log.cell_state, copy=True)
    for e in overrides.entries:
        if e.action == "keep":
            if e.sensor is None:
                verdicts[e.trial] = VERDICT_RETAINED
                state[e.trial, :] = CELL_GOOD
            else:
                state[e.trial, names.index(e.sensor)] = CELL_GOOD
        elif e.action == "reject":
            verdicts[e.trial] = VERDICT_REJECTED
            row = state[e.trial]
            row[row == CELL_INTERPOLATED] = CELL_UNINTERPOLATED
            state[e.trial] = row
        else:  # interpolate
            verdicts[e.trial] = VERDICT_RETAINED
            state[e.trial, names.index(e.sensor)] = CELL_INTERPOLATED
    provenance = dict(log.provenance)
    if overrides.entries:
        provenance["manual"] = True
    return RejectLog(
        trial_verdicts=tuple(verdicts),
        cell_state=state,
        scores=log.scores,
        provenance=provenance,
    )


def default_decimate(n_trials: int, n_sensors: int, n_times: int,
                     budget: int = BUNDLE_BYTE_BUDGET) -> int:
    # ~12 rendered bytes per decimated sample
    per_sample = 12
    full = n_trials * n_sensors * n_times * per_sample
    return max(1, -(-full // budget))


def make_review_bundle(epochs: EpochsTensor, layout: SensorLayout,
                       log: RejectLog, decimate: int = 1,
                       event_codes=None) -> dict:
    """Browser-renderable document mirroring the reject log verbatim."""
    if decimate < 1:
        raise ContractError("decimate must be >= 1")
    if log.n_trials != epochs.n_trials:
        raise ContractError("log and epochs disagree on trial count")
    if event_codes is None:
        event_codes = np.zeros(epochs.n_trials, dtype=np.int64)
    series = epochs.data[:, :, ::decimate]
    return {
        "version": 1,
        "n_trials": epochs.n_trials,
        "n_sensors": epochs.n_sensors,
        "n_times": series.shape[2],
        "decimate": int(decimate),
        "sfreq_hz": epochs.sfreq_hz,
        "sensor_names": list(layout.names),
        "event_codes": [int(e) for e in event_codes],
        "trial_verdicts": list(log.trial_verdicts),
        "cell_state": ["".join(row) for row in log.cell_state],
        "series": series.tolist(),
    }


class ReviewServer:
    """Serves the review bundle and persists posted overrides.

    Override writes are serialized through a single lock; the last
    successful POST wins.
    """

    def __init__(self, bundle: dict, bind_address, overrides_path,
                 static_dir=None):
        self.bundle = bundle
        self.overrides_path = Path(overrides_path)
        self.static_dir = Path(static_dir) if static_dir else None
        self._write_lock = threading.Lock()
        self._bundle_bytes = _canon_dumps(bundle).encode("utf-8")
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def _send(self, code, body: bytes,
                      ctype="application/json"):
                self.send_response(code)
                self.send_header("Content-Type", ctype)
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def do_GET(self):
                if self.path == "/api/health":
                    self._send(200, b"ok", "text/plain")
                elif self.path == "/api/bundle":
                    self._send(200, server._bundle_bytes)
                else:
                    server._serve_static(self)

            def do_POST(self):
                if self.path != "/api/overrides":
                    self._send(404, b'{"error":"not found"}')
                    return
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length)
                try:
                    overrides = OverrideSet.from_doc(json.loads(raw))
                    _validate_overrides(overrides, server.bundle["n_trials"],
                                        server.bundle["sensor_names"])
                except (json.JSONDecodeError, OverrideError) as exc:
                    body = _canon_dumps({"error": str(exc)}).encode()
                    self._send(400, body)
                    return
                with server._write_lock:
                    save_overrides(overrides, server.overrides_path)
                self._send(200, b'{"status":"ok"}')

        self.httpd = ThreadingHTTPServer(bind_address, Handler)
        self._thread = None

    def _serve_static(self, handler):
        path = handler.path
        if path == "/":
            path = "/index.html"
        if self.static_dir is not None:
            target = (self.static_dir / path.lstrip("/")).resolve()
            if (target.is_file()
                    and self.static_dir.resolve() in target.parents):
                ctype = {
                    ".html": "text/html",
                    ".js": "text/javascript",
                    ".css": "text/css",
                }.get(target.suffix, "application/octet-stream")
                handler._send(200, target.read_bytes(), ctype)
                return
        handler._send(404, b'{"error":"not found"}')

    @property
    def address(self):
        return self.httpd.server_address

    def start(self):
        self._thread = threading.Thread(target=self.httpd.serve_forever,
                                        daemon=True)
        self._thread.start()

    def serve_forever(self):
        self.httpd.serve_forever()

    def stop(self):
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join()


def serve_review(bundle: dict, bind_address, overrides_path,
                 static_dir=None) -> ReviewServer:
    """Construct (but do not start) the review server."""
    return ReviewServer(bundle, bind_address, overrides_path,
                        static_dir=static_dir)
