import { describe, expect, it } from "vitest";

import { BreakerControls } from "../src/controls.js";
import type { RangeEvent, Snapshot } from "../src/types.js";

function snapshotWith(states: Record<string, string>): Snapshot {
  return {
    tick: 0, converged: true, bus_voltage: {}, branch_flow: {},
    switch_state: states, energized: {}, source_p_mw: {}, load_p_mw: {},
    points: {},
  };
}

describe("breaker controls", () => {
  it("sends exactly one command per user action", async () => {
    const sent: string[] = [];
    const controls = new BreakerControls(async (id, action) => {
      sent.push(`${id}:${action}`);
      return { accepted: true };
    });
    expect(await controls.operate("S1/CB1", "open", 3)).toEqual({ accepted: true });
    expect(await controls.operate("S1/CB1", "open", 3)).toBe(false);  // pending
    expect(sent).toEqual(["S1/CB1:open"]);
    expect(controls.commandsIssued).toBe(1);
  });

  it("clears the pending marker when the stream confirms the state", async () => {
    const controls = new BreakerControls(async () => undefined);
    await controls.operate("S1/CB1", "open", 1);
    expect(controls.isPending("S1/CB1")).toBe(true);
    controls.onSnapshot(snapshotWith({ "S1/CB1": "closed" }));
    expect(controls.isPending("S1/CB1")).toBe(true);  // not yet confirmed
    controls.onSnapshot(snapshotWith({ "S1/CB1": "open" }));
    expect(controls.isPending("S1/CB1")).toBe(false);
  });

  it("releases the marker when a failed send throws", async () => {
    const controls = new BreakerControls(async () => {
      throw new Error("403");
    });
    await expect(controls.operate("S1/CB1", "open", 1)).rejects.toThrow("403");
    expect(controls.isPending("S1/CB1")).toBe(false);
  });

  it("surfaces interlock blocks citing the guard switch", async () => {
    const controls = new BreakerControls(async () => undefined);
    await controls.operate("S1/CB_MG", "close", 4);
    const events: RangeEvent[] = [{
      tick: 6, seq: 9, category: "protection",
      payload: { function: "CILO_BLOCK", switch: "S1/CB_MG",
                 guard: "S1/CB_T1", reason: "guard-open", acted: true },
    }];
    controls.onEvents(events);
    expect(controls.blocks.length).toBe(1);
    expect(controls.blocks[0].guard).toBe("S1/CB_T1");
    expect(controls.isPending("S1/CB_MG")).toBe(false);
  });
});
