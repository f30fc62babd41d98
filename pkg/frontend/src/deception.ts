// Side-by-side comparison of what the HMI believes against the physical
// truth: the trainee-facing proof that a man-in-the-middle is active.
// Every displayed number comes from the server; nothing is simulated here.

import type { PointEntry, Snapshot } from "./types.js";

export interface ComparisonRow {
  pointId: string;
  display: string;
  hmiValue: unknown;
  truthValue: number | string | null;
  diverged: boolean;
}

const RELATIVE_TOLERANCE = 1e-6;

/**
 * Match measurement points to ground-truth quantities. A point is
 * comparable when its path names a bus voltage or branch current the
 * truth endpoint exposes, or when its recorded value can be compared to
 * the matching element directly by binding metadata.
 */
export function compareViews(
  points: PointEntry[],
  hmi: Snapshot["points"],
  truth: { bus_voltage: Snapshot["bus_voltage"]; branch_flow: Snapshot["branch_flow"]; switch_state: Snapshot["switch_state"] },
  bindings: Record<string, { element: string; quantity: string }>,
): ComparisonRow[] {
  const rows: ComparisonRow[] = [];
  for (const point of points) {
    if (point.kind === "control") continue;
    const hmiEntry = hmi[point.id];
    const binding = bindings[point.id];
    if (hmiEntry === undefined || binding === undefined) continue;
    let truthValue: number | string | null = null;
    if (binding.quantity === "v_pu") {
      truthValue = truth.bus_voltage[binding.element]?.v_pu ?? null;
    } else if (binding.quantity === "i_a") {
      truthValue = truth.branch_flow[binding.element]?.i_a ?? null;
    } else if (binding.quantity === "p_mw") {
      truthValue = truth.branch_flow[binding.element]?.p_mw ?? null;
    } else if (binding.quantity === "state") {
      truthValue = truth.switch_state[binding.element] ?? null;
    }
    rows.push({
      pointId: point.id,
      display: point.display_name,
      hmiValue: hmiEntry.value,
      truthValue,
      diverged: isDiverged(hmiEntry.value, truthValue),
    });
  }
  return rows;
}

export function isDiverged(hmiValue: unknown, truthValue: number | string | null): boolean {
  if (truthValue === null || hmiValue === null || hmiValue === undefined) return false;
  if (typeof truthValue === "number" && typeof hmiValue === "number") {
    const scale = Math.max(Math.abs(truthValue), 1e-9);
    return Math.abs(hmiValue - truthValue) / scale > RELATIVE_TOLERANCE;
  }
  return String(hmiValue) !== String(truthValue);
}

export function divergedCount(rows: ComparisonRow[]): number {
  return rows.filter((row) => row.diverged).length;
}
