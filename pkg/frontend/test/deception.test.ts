import { describe, expect, it } from "vitest";

import { compareViews, divergedCount, isDiverged } from "../src/deception.js";
import type { PointEntry, Snapshot } from "../src/types.js";

const points: PointEntry[] = [
  { id: "v_tb2", display_name: "TB2 Voltage", unit: "pu", kind: "measurement",
    writable: false, source: "cplc", host: "S1/CPLC", protocol: "plc_gateway",
    path: "v_tb2", element: "S1/TB2", quantity: "v_pu" },
  { id: "cb_pos", display_name: "CB", unit: "", kind: "status",
    writable: false, source: "ied", host: "S1/IED2", protocol: "mms",
    path: "XCBR1.Pos", element: "S1/CB_SH", quantity: "state" },
  { id: "cb_cmd", display_name: "CB cmd", unit: "", kind: "control",
    writable: true, source: "ied", host: "S1/IED2", protocol: "mms",
    path: "XCBR1.Pos", element: "S1/CB_SH", quantity: "state" },
];

const bindings = {
  v_tb2: { element: "S1/TB2", quantity: "v_pu" },
  cb_pos: { element: "S1/CB_SH", quantity: "state" },
  cb_cmd: { element: "S1/CB_SH", quantity: "state" },
};

function truth(v: number, state = "closed") {
  return {
    bus_voltage: { "S1/TB2": { v_pu: v, angle_rad: 0 } },
    branch_flow: {},
    switch_state: { "S1/CB_SH": state },
  };
}

function hmi(v: number, state = "closed"): Snapshot["points"] {
  return {
    v_tb2: { value: v, tick: 10 },
    cb_pos: { value: state, tick: 10 },
  };
}

describe("deception panel", () => {
  it("agrees when the views match", () => {
    const rows = compareViews(points, hmi(0.999), truth(0.999), bindings);
    expect(divergedCount(rows)).toBe(0);
  });

  it("flags a halved measurement", () => {
    const rows = compareViews(points, hmi(0.4995), truth(0.999), bindings);
    const row = rows.find((r) => r.pointId === "v_tb2")!;
    expect(row.diverged).toBe(true);
    expect(divergedCount(rows)).toBe(1);
  });

  it("flags forged breaker status", () => {
    const rows = compareViews(points, hmi(0.999, "closed"), truth(0.999, "open"), bindings);
    const row = rows.find((r) => r.pointId === "cb_pos")!;
    expect(row.diverged).toBe(true);
  });

  it("ignores control points and unbound values", () => {
    const rows = compareViews(points, hmi(0.999), truth(0.999), bindings);
    expect(rows.find((r) => r.pointId === "cb_cmd")).toBeUndefined();
  });

  it("tolerates numeric noise below the threshold", () => {
    expect(isDiverged(0.999, 0.999 + 1e-12)).toBe(false);
    expect(isDiverged(0.5, 1.0)).toBe(true);
    expect(isDiverged(null, 1.0)).toBe(false);
  });
});
