// Breaker operation state machine: one API command per user action, an
// optimistic pending marker until the tick stream confirms the new state,
// and an explicit block notification when an interlock refuses the close.

import type { RangeEvent, Snapshot } from "./types.js";

export interface PendingOperation {
  switchId: string;
  action: "open" | "close";
  issuedTick: number;
}

export interface BlockNotice {
  switchId: string;
  guard: string;
  reason: string;
  tick: number;
}

export class BreakerControls<Ack = unknown> {
  private pending = new Map<string, PendingOperation>();
  blocks: BlockNotice[] = [];
  commandsIssued = 0;

  constructor(private send: (switchId: string, action: "open" | "close") => Promise<Ack>) {}

  /** One command per action; false when one is already in flight. */
  async operate(switchId: string, action: "open" | "close",
                tick: number): Promise<Ack | false> {
    if (this.pending.has(switchId)) return false;
    this.pending.set(switchId, { switchId, action, issuedTick: tick });
    this.commandsIssued += 1;
    try {
      return await this.send(switchId, action);
    } catch (error) {
      this.pending.delete(switchId);
      throw error;
    }
  }

  isPending(switchId: string): boolean {
    return this.pending.has(switchId);
  }

  /** Reconcile against a streamed snapshot: confirmed states clear markers. */
  onSnapshot(snapshot: Snapshot): void {
    const expected: Record<string, string> = { open: "open", close: "closed" };
    for (const [switchId, op] of [...this.pending]) {
      if (snapshot.switch_state[switchId] === expected[op.action]) {
        this.pending.delete(switchId);
      }
    }
  }

  /** Interlock refusals arrive as protection events; surface and unmark. */
  onEvents(events: RangeEvent[]): void {
    for (const event of events) {
      if (event.category !== "protection") continue;
      const payload = event.payload as Record<string, string>;
      if (payload["function"] !== "CILO_BLOCK") continue;
      const switchId = payload["switch"];
      this.blocks.push({
        switchId,
        guard: payload["guard"] ?? "?",
        reason: payload["reason"] ?? "blocked",
        tick: event.tick,
      });
      this.pending.delete(switchId);
    }
  }
}
