import { describe, expect, it } from "vitest";

import { createView, toggleOverride } from "../src/model.js";
import {
  TraceCommand,
  cellColor,
  renderGrid,
} from "../src/render.js";
import { randomBundle } from "./helpers.js";

function traces(cmds: ReturnType<typeof renderGrid>): TraceCommand[] {
  return cmds.filter((c): c is TraceCommand => c.kind === "trace");
}

describe("cellColor", () => {
  it("matches the reject-log palette", () => {
    expect(cellColor("g")).toBe("black");
    expect(cellColor("i")).toBe("blue");
    expect(cellColor("b")).toBe("red");
  });
});

describe("renderGrid", () => {
  it("an all-good bundle renders only black traces, no red columns",
     () => {
    const bundle = randomBundle({ seed: 2 });
    bundle.trial_verdicts = bundle.trial_verdicts.map(() => "retained");
    bundle.cell_state = bundle.cell_state.map(
      (r) => "g".repeat(r.length));
    const cmds = renderGrid(
      bundle, createView(bundle, bundle.n_sensors, bundle.n_trials));
    expect(traces(cmds).every((t) => t.color === "black")).toBe(true);
    expect(cmds.some((c) => c.kind === "column-shade")).toBe(false);
    expect(cmds.some((c) => c.kind === "scroll-marker")).toBe(false);
  });

  it("one rejected trial gives one red column and one marker", () => {
    const bundle = randomBundle({ seed: 2 });
    bundle.trial_verdicts = bundle.trial_verdicts.map(() => "retained");
    bundle.cell_state = bundle.cell_state.map(
      (r) => "g".repeat(r.length));
    bundle.trial_verdicts[3] = "rejected";
    const cmds = renderGrid(
      bundle, createView(bundle, bundle.n_sensors, bundle.n_trials));
    const shades = cmds.filter((c) => c.kind === "column-shade");
    const markers = cmds.filter((c) => c.kind === "scroll-marker");
    expect(shades).toEqual([
      { kind: "column-shade", trial: 3, color: "red", hatched: false },
    ]);
    expect(markers).toEqual([{ kind: "scroll-marker", trial: 3 }]);
  });

  it("colors match cell_state on a randomized bundle", () => {
    for (let seed = 0; seed < 100; seed++) {
      const bundle = randomBundle({ seed });
      const view = createView(bundle, bundle.n_sensors,
                              bundle.n_trials);
      for (const t of traces(renderGrid(bundle, view))) {
        const state = bundle.cell_state[t.trial][t.sensor];
        expect(t.color).toBe(cellColor(state as "g" | "i" | "b"));
      }
    }
  });

  it("only the visible window produces traces", () => {
    const bundle = randomBundle({ nTrials: 30, nSensors: 12, seed: 5 });
    let view = createView(bundle, 3, 4);
    view = { ...view, sensorStart: 2, trialStart: 10 };
    const ts = traces(renderGrid(bundle, view));
    expect(ts.length).toBe(3 * 4);
    for (const t of ts) {
      expect(t.trial).toBeGreaterThanOrEqual(10);
      expect(t.trial).toBeLessThan(14);
      expect(t.sensor).toBeGreaterThanOrEqual(2);
      expect(t.sensor).toBeLessThan(5);
    }
  });

  it("is a pure function of bundle and view", () => {
    const bundle = randomBundle({ seed: 9 });
    const view = createView(bundle, 4, 4);
    expect(renderGrid(bundle, view)).toEqual(renderGrid(bundle, view));
  });

  it("pending overrides render hatched and recolored", () => {
    const bundle = randomBundle({ seed: 4 });
    bundle.trial_verdicts[1] = "rejected";
    let view = createView(bundle, bundle.n_sensors, bundle.n_trials);
    view = toggleOverride(bundle, view, { trial: 1, sensor: null },
                          "keep");
    const cmds = renderGrid(bundle, view);
    const trial1 = traces(cmds).filter((t) => t.trial === 1);
    expect(trial1.every((t) => t.hatched)).toBe(true);
    expect(trial1.every((t) => t.color === "black")).toBe(true);
    expect(cmds.some((c) => c.kind === "column-shade"
                     && c.trial === 1)).toBe(false);
  });

  it("separators sit between visible trials, labels on each", () => {
    const bundle = randomBundle({ nTrials: 4, seed: 6 });
    const view = createView(bundle, bundle.n_sensors, 4);
    const cmds = renderGrid(bundle, view);
    const seps = cmds.filter((c) => c.kind === "separator");
    expect(seps.length).toBe(3);
    const labels = cmds.filter((c) => c.kind === "trial-label");
    const events = cmds.filter((c) => c.kind === "event-label");
    expect(labels.length).toBe(4);
    expect(events.length).toBe(4);
  });
});
