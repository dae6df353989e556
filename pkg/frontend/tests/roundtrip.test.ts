// End-to-end check against the real review server: simulate a bundle,
// serve it, flip a rejected trial back through the HTTP API, then fold
// the overrides into the log with the command-line tool.

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { fetchBundle, saveOverrides } from "../src/api.js";
import { createView, toggleOverride } from "../src/model.js";

const PY = "python3";
const TIMEOUT = 120_000;

function run(args: string[]): string {
  return execFileSync(PY, ["-m", "autoclean.cli", ...args], {
    encoding: "utf-8",
    timeout: TIMEOUT,
  });
}

function startServer(args: string[]): Promise<{
  proc: ChildProcess;
  base: string;
}> {
  return new Promise((resolve, reject) => {
    const proc = spawn(PY, ["-m", "autoclean.cli", ...args], {
      stdio: ["ignore", "ignore", "pipe"],
    });
    let err = "";
    proc.stderr!.on("data", (chunk: Buffer) => {
      err += chunk.toString();
      const m = err.match(/serving on (http:\/\/[\d.]+:\d+)/);
      if (m) resolve({ proc, base: m[1] });
    });
    proc.on("exit", (code) =>
      reject(new Error(`server exited early (${code}): ${err}`)));
    setTimeout(() => reject(new Error(`server never came up: ${err}`)),
               TIMEOUT).unref();
  });
}

describe("review server round trip", () => {
  const dir = mkdtempSync(join(tmpdir(), "review-ui-"));
  const sim = join(dir, "sim.erb");
  const log = join(dir, "log.json");
  const overrides = join(dir, "overrides.json");
  const outLog = join(dir, "reviewed.json");
  let server: ChildProcess | null = null;
  let base = "";

  beforeAll(async () => {
    run(["simulate", "--seed", "3", "--trials", "20", "--sensors", "8",
         "--times", "32", "--out", sim]);
    // a global threshold at the median per-trial amplitude is sure to
    // reject some trials, giving the reviewer something to override
    execFileSync(PY, ["-c", [
      "import numpy as np",
      "from autoclean.core import load_epochs, save_reject_log",
      "from autoclean.metrics import peak_to_peak",
      "from autoclean.reject_global import apply_global",
      `epochs, layout, events = load_epochs(${JSON.stringify(sim)})`,
      "worst = peak_to_peak(epochs).values.max(axis=1)",
      "log = apply_global(epochs, float(np.median(worst)))",
      `save_reject_log(log, ${JSON.stringify(log)})`,
    ].join("\n")], { timeout: TIMEOUT });
    ({ proc: server, base } = await startServer(
      ["review", "serve", sim, "--log", log, "--overrides", overrides,
       "--port", "0"]));
  }, TIMEOUT);

  afterAll(() => {
    server?.kill();
    rmSync(dir, { recursive: true, force: true });
  });

  it("keep-override saved over HTTP survives review apply", async () => {
    const bundle = await fetchBundle(base);
    expect(bundle.n_trials).toBe(20);
    const target = bundle.trial_verdicts.indexOf("rejected");
    expect(target).toBeGreaterThanOrEqual(0);

    let view = createView(bundle, bundle.n_sensors, bundle.n_trials);
    view = toggleOverride(bundle, view, { trial: target, sensor: null },
                          "keep");
    const result = await saveOverrides(view.pending, base);
    expect(result.ok).toBe(true);

    run(["review", "apply", "--log", log, "--overrides", overrides,
         "--names", sim, "--out", outLog]);
    const reviewed = JSON.parse(readFileSync(outLog, "utf-8"));
    expect(reviewed.trial_verdicts[target]).toBe("retained");
    // untouched trials keep their original verdicts
    for (let i = 0; i < bundle.n_trials; i++) {
      if (i !== target) {
        expect(reviewed.trial_verdicts[i]).toBe(bundle.trial_verdicts[i]);
      }
    }
  }, TIMEOUT);

  it("an invalid override is refused and leaves no file behind", async () => {
    const resp = await fetch(`${base}/api/overrides`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        version: 1,
        entries: [{ trial: 999, sensor: null, action: "keep" }],
      }),
    });
    expect(resp.status).toBe(400);
    const doc = await resp.json();
    expect(typeof doc.error).toBe("string");
  });
});
