// Pure viewport renderer: (bundle, view) -> draw command list.
//
// Only the visible trial/sensor windows produce trace commands, so a
// 1000 x 300 grid costs no more than the viewport. The caller (a
// canvas shell, or a test) executes the commands.

import {
  Bundle,
  CellState,
  ViewState,
  effectiveState,
} from "./model.js";

export type TraceColor = "black" | "blue" | "red";

export interface TraceCommand {
  kind: "trace";
  trial: number;
  sensor: number;
  color: TraceColor;
  /** unsaved override on this trial: draw hatched */
  hatched: boolean;
  points: number[];
}

export interface ColumnShadeCommand {
  kind: "column-shade";
  trial: number;
  color: "red";
  hatched: boolean;
}

export interface SeparatorCommand {
  kind: "separator";
  afterTrial: number;
}

export interface LabelCommand {
  kind: "trial-label" | "event-label";
  trial: number;
  text: string;
}

export interface ScrollMarkerCommand {
  kind: "scroll-marker";
  trial: number;
}

export type DrawCommand =
  | TraceCommand
  | ColumnShadeCommand
  | SeparatorCommand
  | LabelCommand
  | ScrollMarkerCommand;

export function cellColor(state: CellState): TraceColor {
  switch (state) {
    case "g":
      return "black";
    case "i":
      return "blue";
    case "b":
      return "red";
  }
}

export function renderGrid(bundle: Bundle, view: ViewState): DrawCommand[] {
  const commands: DrawCommand[] = [];
  const { verdicts, cells, pendingTrials } = effectiveState(
    bundle, view.pending);

  // scroll markers cover every rejected trial, visible or not, so the
  // horizontal bar doubles as an overview strip
  for (let i = 0; i < bundle.n_trials; i++) {
    if (verdicts[i] === "rejected") {
      commands.push({ kind: "scroll-marker", trial: i });
    }
  }

  const trialEnd = Math.min(
    view.trialStart + view.trialCount, bundle.n_trials);
  const sensorEnd = Math.min(
    view.sensorStart + view.sensorCount, bundle.n_sensors);
  for (let i = view.trialStart; i < trialEnd; i++) {
    const hatched = pendingTrials[i];
    if (verdicts[i] === "rejected") {
      commands.push({ kind: "column-shade", trial: i, color: "red",
                      hatched });
    }
    commands.push({
      kind: "event-label", trial: i,
      text: String(bundle.event_codes[i]),
    });
    for (let j = view.sensorStart; j < sensorEnd; j++) {
      commands.push({
        kind: "trace",
        trial: i,
        sensor: j,
        color: cellColor(cells[i][j]),
        hatched,
        points: bundle.series[i][j],
      });
    }
    commands.push({ kind: "trial-label", trial: i, text: String(i) });
    if (i < trialEnd - 1) {
      commands.push({ kind: "separator", afterTrial: i });
    }
  }
  return commands;
}
