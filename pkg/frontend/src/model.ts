// Review-bundle data model and override editing.
//
// Mirrors the server's reject-log semantics: overrides apply in order,
// later entries shadowing earlier ones for the same target, and a
// rejected trial can never keep interpolated cells.

export type CellState = "g" | "i" | "b";
export type Verdict = "retained" | "rejected";
export type OverrideAction = "keep" | "reject" | "interpolate";

export interface Bundle {
  version: number;
  n_trials: number;
  n_sensors: number;
  n_times: number;
  decimate: number;
  sfreq_hz: number;
  sensor_names: string[];
  event_codes: number[];
  trial_verdicts: Verdict[];
  /** one string of g/i/b characters per trial, sensor-ordered */
  cell_state: string[];
  series: number[][][];
}

export interface OverrideEntry {
  trial: number;
  sensor: string | null;
  action: OverrideAction;
}

export interface CellRef {
  trial: number;
  /** sensor index; null targets the whole trial */
  sensor: number | null;
}

export interface ViewState {
  sensorStart: number;
  sensorCount: number;
  trialStart: number;
  trialCount: number;
  selected: CellRef | null;
  pending: OverrideEntry[];
  dirty: boolean;
  notice: string | null;
}

export interface EffectiveState {
  verdicts: Verdict[];
  cells: CellState[][];
  /** true where a pending entry touched the trial */
  pendingTrials: boolean[];
}

function clamp(value: number, lo: number, hi: number): number {
  return Math.max(lo, Math.min(hi, value));
}

export function createView(
  bundle: Bundle,
  sensorCount: number,
  trialCount: number,
): ViewState {
  return {
    sensorStart: 0,
    sensorCount: clamp(sensorCount, 0, bundle.n_sensors),
    trialStart: 0,
    trialCount: clamp(trialCount, 0, bundle.n_trials),
    selected: null,
    pending: [],
    dirty: false,
    notice: null,
  };
}

/** Move the visible windows; never touches pending overrides. */
export function scrollTo(
  bundle: Bundle,
  view: ViewState,
  sensorStart: number,
  trialStart: number,
): ViewState {
  return {
    ...view,
    sensorStart: clamp(
      sensorStart, 0, Math.max(0, bundle.n_sensors - view.sensorCount)),
    trialStart: clamp(
      trialStart, 0, Math.max(0, bundle.n_trials - view.trialCount)),
  };
}

function inBounds(bundle: Bundle, target: CellRef): boolean {
  if (target.trial < 0 || target.trial >= bundle.n_trials) return false;
  if (target.sensor === null) return true;
  return target.sensor >= 0 && target.sensor < bundle.n_sensors;
}

/**
 * Record a pending override. A later toggle on the same target
 * replaces the earlier one, so the POST body stays minimal while the
 * ordering semantics match the server's sequential application.
 */
export function toggleOverride(
  bundle: Bundle,
  view: ViewState,
  target: CellRef,
  action: OverrideAction,
): ViewState {
  if (!inBounds(bundle, target)) {
    return {
      ...view,
      notice: `target trial ${target.trial} / sensor ${target.sensor} `
        + "is outside the bundle",
    };
  }
  if (action === "interpolate" && target.sensor === null) {
    return { ...view, notice: "interpolate needs a sensor" };
  }
  const sensor =
    target.sensor === null ? null : bundle.sensor_names[target.sensor];
  const entry: OverrideEntry =
    action === "reject"
      ? { trial: target.trial, sensor: null, action }
      : { trial: target.trial, sensor, action };
  const pending = view.pending.filter(
    (e) => !(e.trial === entry.trial && e.sensor === entry.sensor),
  );
  pending.push(entry);
  return { ...view, pending, dirty: true, notice: null };
}

/** Bundle state with the pending overrides folded in, server-style. */
export function effectiveState(
  bundle: Bundle,
  pending: OverrideEntry[],
): EffectiveState {
  const verdicts = bundle.trial_verdicts.slice();
  const cells: CellState[][] = bundle.cell_state.map(
    (row) => row.split("") as CellState[],
  );
  const pendingTrials = new Array<boolean>(bundle.n_trials).fill(false);
  for (const entry of pending) {
    pendingTrials[entry.trial] = true;
    const row = cells[entry.trial];
    if (entry.action === "keep") {
      if (entry.sensor === null) {
        verdicts[entry.trial] = "retained";
        row.fill("g");
      } else {
        row[bundle.sensor_names.indexOf(entry.sensor)] = "g";
      }
    } else if (entry.action === "reject") {
      verdicts[entry.trial] = "rejected";
      for (let j = 0; j < row.length; j++) {
        if (row[j] === "i") row[j] = "b";
      }
    } else {
      verdicts[entry.trial] = "retained";
      row[bundle.sensor_names.indexOf(entry.sensor as string)] = "i";
    }
  }
  return { verdicts, cells, pendingTrials };
}

export function validateBundle(doc: unknown): Bundle {
  const b = doc as Bundle;
  if (
    !b || typeof b.n_trials !== "number"
    || typeof b.n_sensors !== "number"
    || !Array.isArray(b.sensor_names)
    || !Array.isArray(b.cell_state)
    || b.cell_state.length !== b.n_trials
    || b.sensor_names.length !== b.n_sensors
  ) {
    throw new Error("malformed review bundle");
  }
  for (const row of b.cell_state) {
    if (row.length !== b.n_sensors || /[^gib]/.test(row)) {
      throw new Error("malformed cell_state row");
    }
  }
  return b;
}
