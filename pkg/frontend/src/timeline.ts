// Exercise timeline: the event log in server order with category filters;
// attack entries are flagged so debriefs can jump between them.

import type { RangeEvent } from "./types.js";

export const CATEGORIES = ["protection", "alarm", "attack", "control", "solver"] as const;

export class EventTimeline {
  entries: RangeEvent[] = [];
  enabled = new Set<string>(CATEGORIES);
  private lastSeq = 0;

  /** Append new events, keeping (tick, seq) order; duplicates are ignored. */
  ingest(events: RangeEvent[]): void {
    for (const event of events) {
      if (event.seq <= this.lastSeq) continue;
      this.lastSeq = event.seq;
      this.entries.push(event);
    }
  }

  toggle(category: string): void {
    if (this.enabled.has(category)) this.enabled.delete(category);
    else this.enabled.add(category);
  }

  visible(): RangeEvent[] {
    return this.entries.filter((event) => this.enabled.has(event.category));
  }

  attackMarkers(): number[] {
    return this.entries.filter((event) => event.category === "attack")
      .map((event) => event.tick);
  }
}

export function describeEvent(event: RangeEvent): string {
  const payload = event.payload as Record<string, unknown>;
  const what = (payload["what"] as string) ?? (payload["function"] as string) ?? "";
  const parts = [what];
  for (const key of ["switch", "ied", "plc", "point", "target", "path", "value", "state", "reason"]) {
    if (payload[key] !== undefined) parts.push(`${key}=${payload[key]}`);
  }
  return parts.filter(Boolean).join(" ");
}
