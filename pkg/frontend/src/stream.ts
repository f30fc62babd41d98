// Ordered consumption of the tick stream. The UI event loop renders
// whatever arrives here; frames older than the last rendered tick are
// discarded so a reconnect can never paint backwards.

import type { StreamFrame } from "./types.js";

export type FrameHandler = (frame: StreamFrame) => void;

export class TickStream {
  private lastRendered = -1;
  private handlers: FrameHandler[] = [];
  dropped = 0;

  onFrame(handler: FrameHandler): void {
    this.handlers.push(handler);
  }

  /** Feed one parsed frame; returns true when it was delivered. */
  accept(frame: StreamFrame): boolean {
    if (frame.tick <= this.lastRendered) {
      this.dropped += 1;
      return false;
    }
    this.lastRendered = frame.tick;
    for (const handler of this.handlers) handler(frame);
    return true;
  }

  get renderedTick(): number {
    return this.lastRendered;
  }

  /** Attach to a live EventSource. */
  connect(url: string): EventSource {
    const source = new EventSource(url);
    source.onmessage = (msg) => {
      try {
        this.accept(JSON.parse(msg.data) as StreamFrame);
      } catch {
        // malformed frame: ignore, the next tick repaints everything
      }
    };
    return source;
  }
}
