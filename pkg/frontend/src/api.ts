// Server plumbing: bundle fetch and override persistence.

import { Bundle, OverrideEntry, ViewState, validateBundle } from "./model.js";

export interface SaveResult {
  ok: boolean;
  status: number;
  error: string | null;
}

export async function fetchBundle(base = ""): Promise<Bundle> {
  const resp = await fetch(`${base}/api/bundle`);
  if (!resp.ok) {
    throw new Error(`bundle request failed with ${resp.status}`);
  }
  return validateBundle(await resp.json());
}

export async function saveOverrides(
  pending: OverrideEntry[],
  base = "",
): Promise<SaveResult> {
  const resp = await fetch(`${base}/api/overrides`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ version: 1, entries: pending }),
  });
  if (resp.ok) {
    return { ok: true, status: resp.status, error: null };
  }
  let message = `save failed with ${resp.status}`;
  try {
    const doc = await resp.json();
    if (doc && typeof doc.error === "string") message = doc.error;
  } catch {
    // keep the generic message when the body is not JSON
  }
  return { ok: false, status: resp.status, error: message };
}

/**
 * Fold a save outcome into the view: success clears the dirty flag,
 * failure keeps every pending entry so nothing the reviewer did is
 * lost, and surfaces the server's message.
 */
export function applySaveResult(
  view: ViewState,
  result: SaveResult,
): ViewState {
  if (result.ok) {
    return { ...view, dirty: false, notice: null };
  }
  return { ...view, notice: result.error ?? "save failed" };
}
