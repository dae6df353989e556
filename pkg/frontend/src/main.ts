// Canvas shell: wires the pure model/render modules to the browser.

import { applySaveResult, fetchBundle, saveOverrides } from "./api.js";
import {
  Bundle,
  OverrideAction,
  ViewState,
  createView,
  scrollTo,
  toggleOverride,
} from "./model.js";
import { DrawCommand, TraceCommand, renderGrid } from "./render.js";

const CELL_W = 120;
const CELL_H = 48;
const MARGIN_TOP = 24;
const MARGIN_BOTTOM = 24;

interface App {
  bundle: Bundle;
  view: ViewState;
  canvas: HTMLCanvasElement;
  hbar: HTMLInputElement;
  vbar: HTMLInputElement;
  status: HTMLElement;
  saveButton: HTMLButtonElement;
  action: () => OverrideAction;
  saving: boolean;
}

function traceRange(points: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of points) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return hi > lo ? [lo, hi] : [lo - 1, hi + 1];
}

function drawTrace(ctx: CanvasRenderingContext2D, cmd: TraceCommand,
                   x: number, y: number): void {
  const [lo, hi] = traceRange(cmd.points);
  ctx.strokeStyle = cmd.color;
  ctx.setLineDash(cmd.hatched ? [4, 3] : []);
  ctx.beginPath();
  cmd.points.forEach((v, t) => {
    const px = x + (t / Math.max(1, cmd.points.length - 1)) * CELL_W;
    const py = y + CELL_H - ((v - lo) / (hi - lo)) * CELL_H;
    if (t === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();
  ctx.setLineDash([]);
}

function execute(app: App, commands: DrawCommand[]): void {
  const ctx = app.canvas.getContext("2d");
  if (!ctx) return;
  const { view } = app;
  ctx.clearRect(0, 0, app.canvas.width, app.canvas.height);
  const colX = (trial: number) => (trial - view.trialStart) * CELL_W;
  const rowY = (sensor: number) =>
    MARGIN_TOP + (sensor - view.sensorStart) * CELL_H;
  const gridH = view.sensorCount * CELL_H;
  for (const cmd of commands) {
    switch (cmd.kind) {
      case "column-shade":
        ctx.fillStyle = cmd.hatched
          ? "rgba(220,40,40,0.10)" : "rgba(220,40,40,0.18)";
        ctx.fillRect(colX(cmd.trial), MARGIN_TOP, CELL_W, gridH);
        break;
      case "trace":
        drawTrace(ctx, cmd, colX(cmd.trial), rowY(cmd.sensor));
        break;
      case "separator":
        ctx.strokeStyle = "#999";
        ctx.setLineDash([2, 4]);
        ctx.beginPath();
        ctx.moveTo(colX(cmd.afterTrial) + CELL_W, MARGIN_TOP);
        ctx.lineTo(colX(cmd.afterTrial) + CELL_W, MARGIN_TOP + gridH);
        ctx.stroke();
        ctx.setLineDash([]);
        break;
      case "trial-label":
        ctx.fillStyle = "#333";
        ctx.fillText(cmd.text, colX(cmd.trial) + CELL_W / 2,
                     MARGIN_TOP + gridH + 16);
        break;
      case "event-label":
        ctx.fillStyle = "#333";
        ctx.fillText(cmd.text, colX(cmd.trial) + CELL_W / 2, 16);
        break;
      case "scroll-marker": {
        // painted onto the horizontal bar track as an overview strip
        const frac = cmd.trial / Math.max(1, app.bundle.n_trials - 1);
        ctx.fillStyle = "red";
        ctx.fillRect(frac * app.canvas.width,
                     MARGIN_TOP + gridH + MARGIN_BOTTOM - 4,
                     3, 4);
        break;
      }
    }
  }
}

function redraw(app: App): void {
  execute(app, renderGrid(app.bundle, app.view));
  app.saveButton.disabled = !app.view.dirty || app.saving;
  app.status.textContent = app.view.notice
    ?? (app.view.dirty
        ? `${app.view.pending.length} unsaved override(s)`
        : "all changes saved");
}

function onClick(app: App, ev: MouseEvent): void {
  const rect = app.canvas.getBoundingClientRect();
  const x = ev.clientX - rect.left;
  const y = ev.clientY - rect.top;
  const trial = app.view.trialStart + Math.floor(x / CELL_W);
  const gridY = y - MARGIN_TOP;
  const wholeTrial = gridY < 0
    || gridY >= app.view.sensorCount * CELL_H;
  const sensor = wholeTrial
    ? null
    : app.view.sensorStart + Math.floor(gridY / CELL_H);
  app.view = toggleOverride(app.bundle, app.view, { trial, sensor },
                            app.action());
  redraw(app);
}

async function onSave(app: App): Promise<void> {
  if (!app.view.dirty || app.saving) return;
  app.saving = true;
  redraw(app);
  try {
    const result = await saveOverrides(app.view.pending);
    app.view = applySaveResult(app.view, result);
  } catch (err) {
    app.view = { ...app.view,
                 notice: `save failed: ${err}; changes kept` };
  } finally {
    app.saving = false;
    redraw(app);
  }
}

export async function boot(): Promise<void> {
  const bundle = await fetchBundle();
  const canvas =
    document.getElementById("grid") as HTMLCanvasElement;
  const hbar =
    document.getElementById("hscroll") as HTMLInputElement;
  const vbar =
    document.getElementById("vscroll") as HTMLInputElement;
  const status = document.getElementById("status") as HTMLElement;
  const saveButton =
    document.getElementById("save") as HTMLButtonElement;
  const actionSelect =
    document.getElementById("action") as HTMLSelectElement;

  const trialCount = Math.max(
    1, Math.floor(canvas.width / CELL_W));
  const sensorCount = Math.max(1, Math.floor(
    (canvas.height - MARGIN_TOP - MARGIN_BOTTOM) / CELL_H));
  const app: App = {
    bundle,
    view: createView(bundle, sensorCount, trialCount),
    canvas, hbar, vbar, status, saveButton,
    action: () => actionSelect.value as OverrideAction,
    saving: false,
  };
  hbar.max = String(Math.max(0, bundle.n_trials - trialCount));
  vbar.max = String(Math.max(0, bundle.n_sensors - sensorCount));
  hbar.addEventListener("input", () => {
    app.view = scrollTo(bundle, app.view, app.view.sensorStart,
                        Number(hbar.value));
    redraw(app);
  });
  vbar.addEventListener("input", () => {
    app.view = scrollTo(bundle, app.view, Number(vbar.value),
                        app.view.trialStart);
    redraw(app);
  });
  canvas.addEventListener("click", (ev) => onClick(app, ev));
  saveButton.addEventListener("click", () => void onSave(app));
  redraw(app);
}

if (typeof document !== "undefined"
    && document.getElementById("grid")) {
  void boot();
}
