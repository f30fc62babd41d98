import { describe, expect, it } from "vitest";

import { EventTimeline, describeEvent } from "../src/timeline.js";
import type { RangeEvent } from "../src/types.js";

function event(tick: number, seq: number, category: string,
               payload: Record<string, unknown> = {}): RangeEvent {
  return { tick, seq, category, payload };
}

describe("event timeline", () => {
  it("keeps server order and drops duplicates", () => {
    const timeline = new EventTimeline();
    timeline.ingest([event(1, 1, "control"), event(1, 2, "protection")]);
    timeline.ingest([event(1, 2, "protection"), event(2, 3, "attack")]);
    expect(timeline.entries.map((e) => e.seq)).toEqual([1, 2, 3]);
  });

  it("filters by category", () => {
    const timeline = new EventTimeline();
    timeline.ingest([event(1, 1, "control"), event(2, 2, "attack"),
                     event(3, 3, "solver")]);
    timeline.toggle("control");
    expect(timeline.visible().map((e) => e.seq)).toEqual([2, 3]);
    timeline.toggle("control");
    expect(timeline.visible().length).toBe(3);
  });

  it("exposes attack markers for the debrief", () => {
    const timeline = new EventTimeline();
    timeline.ingest([event(5, 1, "attack"), event(6, 2, "control"),
                     event(9, 3, "attack")]);
    expect(timeline.attackMarkers()).toEqual([5, 9]);
  });

  it("renders a readable one-liner", () => {
    const text = describeEvent(event(4, 1, "protection", {
      function: "PTOC", ied: "S1/IED1", switch: "S1/CB_T1", acted: true,
    }));
    expect(text).toContain("PTOC");
    expect(text).toContain("switch=S1/CB_T1");
  });
});
