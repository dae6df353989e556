import { Bundle, CellState, Verdict } from "../src/model.js";

export interface RandomBundleOptions {
  nTrials?: number;
  nSensors?: number;
  nTimes?: number;
  seed?: number;
}

/** Small deterministic PRNG (mulberry32) so tests can replay failures. */
export function rng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function randomBundle(opts: RandomBundleOptions = {}): Bundle {
  const nTrials = opts.nTrials ?? 6;
  const nSensors = opts.nSensors ?? 5;
  const nTimes = opts.nTimes ?? 8;
  const rand = rng(opts.seed ?? 1);
  const verdicts: Verdict[] = [];
  const cellState: string[] = [];
  const series: number[][][] = [];
  for (let i = 0; i < nTrials; i++) {
    const rejected = rand() < 0.3;
    verdicts.push(rejected ? "rejected" : "retained");
    let row = "";
    for (let j = 0; j < nSensors; j++) {
      const r = rand();
      let state: CellState = "g";
      if (r < 0.15) state = "b";
      else if (r < 0.3 && !rejected) state = "i";
      row += state;
    }
    cellState.push(row);
    series.push(
      Array.from({ length: nSensors }, () =>
        Array.from({ length: nTimes }, () => rand() * 2 - 1)),
    );
  }
  return {
    version: 1,
    n_trials: nTrials,
    n_sensors: nSensors,
    n_times: nTimes,
    decimate: 1,
    sfreq_hz: 100,
    sensor_names: Array.from({ length: nSensors },
                             (_, j) => `S${String(j).padStart(3, "0")}`),
    event_codes: Array.from({ length: nTrials }, () => 0),
    trial_verdicts: verdicts,
    cell_state: cellState,
    series,
  };
}
