import { describe, expect, it } from "vitest";

import { busColor, computeLayout, flowColor, modelHash } from "../src/layout.js";
import type { PhysicalTopology } from "../src/types.js";

function topology(): PhysicalTopology {
  return {
    segments: [
      { voltage_level: "S1/VLTX", nominal_kv: 66, buses: ["S1/TB1", "S1/TB2"] },
      { voltage_level: "S1/VLGEN", nominal_kv: 11, buses: ["S1/GB1"] },
      { voltage_level: "S1/VLMG", nominal_kv: 11, buses: ["S1/MB1"] },
      { voltage_level: "S1/VLSH", nominal_kv: 0.4, buses: ["S1/HB1", "S1/HB2", "S1/HB3"] },
    ],
    buses: [
      { id: "S1/TB1", voltage_level: "S1/VLTX", nominal_kv: 66 },
      { id: "S1/TB2", voltage_level: "S1/VLTX", nominal_kv: 66 },
      { id: "S1/GB1", voltage_level: "S1/VLGEN", nominal_kv: 11 },
      { id: "S1/MB1", voltage_level: "S1/VLMG", nominal_kv: 11 },
      { id: "S1/HB1", voltage_level: "S1/VLSH", nominal_kv: 0.4 },
      { id: "S1/HB2", voltage_level: "S1/VLSH", nominal_kv: 0.4 },
      { id: "S1/HB3", voltage_level: "S1/VLSH", nominal_kv: 0.4 },
    ],
    branches: [
      { id: "S1/LT1", from: "S1/TB1", to: "S1/TB2", kind: "line", rating_a: 120 },
      { id: "S1/T1", from: "S1/GB1", to: "S1/TB1", kind: "transformer", rating_a: 300 },
    ],
    switches: [{ id: "S1/CB1", from: "S1/HB1", to: "S1/HB2", kind: "CBR" }],
    loads: [{ id: "S1/LD1", bus: "S1/HB2" }],
    sources: [{ id: "S1/GRID", bus: "S1/GB1", kind: "grid_slack" }],
    tie_lines: [],
  };
}

describe("layout", () => {
  it("groups buses into one column per segment", () => {
    const layout = computeLayout(topology());
    expect(layout.segments.length).toBe(4);
    const byBus = new Map(layout.nodes.map((n) => [n.id, n]));
    expect(byBus.get("S1/TB1")!.x).toBe(byBus.get("S1/TB2")!.x);
    expect(byBus.get("S1/TB1")!.x).not.toBe(byBus.get("S1/GB1")!.x);
  });

  it("orders columns by descending voltage", () => {
    const layout = computeLayout(topology());
    const byBus = new Map(layout.nodes.map((n) => [n.id, n]));
    expect(byBus.get("S1/TB1")!.x).toBeLessThan(byBus.get("S1/GB1")!.x);
    expect(byBus.get("S1/GB1")!.x).toBeLessThan(byBus.get("S1/HB1")!.x);
  });

  it("is deterministic: same topology, same coordinates and hash", () => {
    const a = computeLayout(topology());
    const b = computeLayout(topology());
    expect(a).toEqual(b);
    expect(a.modelHash).toBe(modelHash(topology()));
  });

  it("hash changes when the model changes", () => {
    const changed = topology();
    changed.branches[0].id = "S1/LT9";
    expect(modelHash(changed)).not.toBe(modelHash(topology()));
  });

  it("keeps every element mapped to a model id", () => {
    const layout = computeLayout(topology());
    const busIds = new Set(topology().buses.map((b) => b.id));
    for (const node of layout.nodes) expect(busIds.has(node.id)).toBe(true);
    const elementIds = new Set([
      ...topology().branches.map((b) => b.id),
      ...topology().switches.map((s) => s.id),
    ]);
    for (const edge of layout.edges) expect(elementIds.has(edge.id)).toBe(true);
  });
});

describe("coloring", () => {
  it("de-energized elements are gray regardless of numbers", () => {
    expect(flowColor(false, 2.0)).toBe("#777777");
    expect(busColor(false, 1.0)).toBe("#777777");
  });

  it("loading moves hue from green toward red", () => {
    expect(flowColor(true, 0)).toBe("hsl(120, 70%, 45%)");
    expect(flowColor(true, 1)).toBe("hsl(0, 70%, 45%)");
  });

  it("voltage excursions flag amber", () => {
    expect(busColor(true, 1.06)).toBe("#e6a23c");
    expect(busColor(true, 0.94)).toBe("#e6a23c");
    expect(busColor(true, 1.0)).toBe("#2f8f4e");
  });
});
