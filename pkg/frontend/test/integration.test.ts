// End-to-end console exercise against a real range service: segment
// grouping, breaker operate round trip within three streamed ticks, and
// the deception panel diverging during a scripted man-in-the-middle.
//
// Spawns `sgml serve` on the generated single-substation model; requires
// the python package installed (as `npm test` in this repo assumes).

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { BreakerControls } from "../src/controls.js";
import { compareViews, divergedCount } from "../src/deception.js";
import { computeLayout } from "../src/layout.js";
import { TickStream } from "../src/stream.js";
import type { PointEntry, Snapshot, StreamFrame } from "../src/types.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;
const TICK_MS = 25;

let service: ChildProcess | null = null;

async function waitForHealth(): Promise<void> {
  for (let attempt = 0; attempt < 200; attempt++) {
    try {
      const response = await fetch(`${BASE}/api/health`);
      if (response.ok) {
        const health = await response.json();
        if (health.tick >= 1) return;
      }
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error("range service did not come up");
}

/** Minimal SSE reader (node has no EventSource); feeds the TickStream. */
async function consumeStream(
  stream: TickStream, frames: number, signal: AbortSignal,
): Promise<void> {
  const response = await fetch(`${BASE}/api/stream?streams=ticks,events&limit=${frames}`,
                               { signal });
  const reader = response.body!.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  for (;;) {
    const { done, value } = await reader.read();
    if (done) break;
    buffer += decoder.decode(value, { stream: true });
    let index;
    while ((index = buffer.indexOf("\n\n")) >= 0) {
      const chunk = buffer.slice(0, index);
      buffer = buffer.slice(index + 2);
      if (chunk.startsWith("data: ")) {
        stream.accept(JSON.parse(chunk.slice(6)) as StreamFrame);
      }
    }
  }
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "console-it-"));
  const gen = spawn("python3", ["-m", "sgml.cli", "genfixture", "epic", dir],
                    { stdio: "ignore" });
  await new Promise((resolve, reject) => {
    gen.on("exit", (code) => (code === 0 ? resolve(null) : reject(new Error("genfixture failed"))));
  });
  service = spawn("python3", ["-m", "sgml.cli", "serve", dir,
                              "--port", String(PORT), "--tick-ms", String(TICK_MS)],
                  { stdio: "ignore" });
  await waitForHealth();
}, 60000);

afterAll(() => {
  service?.kill("SIGKILL");
});

describe("console against a live range", () => {
  it("renders the four segment groups from the topology", async () => {
    const api = new ApiClient(BASE);
    const topology = await api.topology();
    const layout = computeLayout(topology.physical);
    expect(layout.segments.length).toBe(4);
    expect(layout.nodes.length).toBe(topology.physical.buses.length);
  }, 20000);

  it("operates a breaker and sees the state change within 3 streamed ticks",
     async () => {
    const api = new ApiClient(BASE);
    await api.openSession("operator");
    const controls = new BreakerControls((id, action) => api.operateBreaker(id, action));

    const stream = new TickStream();
    let applyTick = -1;
    let changedTick = -1;
    stream.onFrame((frame) => {
      const snap = frame.snapshot as Snapshot | undefined;
      if (!snap || !snap.switch_state) return;
      controls.onSnapshot(snap);
      if (changedTick < 0 && snap.switch_state["S1/CB_MG"] === "open") {
        changedTick = frame.tick;
      }
    });

    const controller = new AbortController();
    const consuming = consumeStream(stream, 40, controller.signal);
    await new Promise((r) => setTimeout(r, 3 * TICK_MS));
    const ack = await controls.operate("S1/CB_MG", "open", stream.renderedTick);
    expect(ack).not.toBe(false);
    applyTick = (ack as { apply_tick: number }).apply_tick;
    expect(controls.commandsIssued).toBe(1);
    await consuming;

    expect(changedTick).toBeGreaterThanOrEqual(0);
    expect(changedTick - applyTick).toBeLessThanOrEqual(3);
    expect(controls.isPending("S1/CB_MG")).toBe(false);
  }, 30000);

  it("shows HMI-vs-ground-truth divergence during a scripted MITM", async () => {
    const api = new ApiClient(BASE);
    await api.openSession("attacker");
    const pointsDoc = await api.points();
    const points: PointEntry[] = pointsDoc.points;
    const bindings: Record<string, { element: string; quantity: string }> = {};
    for (const p of points) {
      if (p.element && p.quantity) bindings[p.id] = { element: p.element, quantity: p.quantity };
    }

    const scadaIp = "10.0.1.21";
    const cplcIp = "10.0.1.20";
    await api.fireAttackStep("S1/IED9", {
      action: "arp_poison", victim_a: scadaIp, victim_b: cplcIp });
    await new Promise((r) => setTimeout(r, 4 * TICK_MS));
    await api.fireAttackStep("S1/IED9", {
      action: "intercept",
      match: { protocol: "MMS", verb: "response", path: "v_tb2" },
      transform: { scale: 0.5 } });

    // wait for the manipulated flow to reach the gateway, then compare
    let diverged = 0;
    for (let attempt = 0; attempt < 80 && diverged === 0; attempt++) {
      await new Promise((r) => setTimeout(r, TICK_MS));
      const snapshot = await api.snapshot();
      const truth = await api.groundTruth();
      diverged = divergedCount(compareViews(points, snapshot.points, truth, bindings));
    }
    expect(diverged).toBeGreaterThan(0);

    // restore and watch the views reconverge
    await api.fireAttackStep("S1/IED9", { action: "stop_intercept" });
    await api.fireAttackStep("S1/IED9", { action: "restore_arp" });
    let converged = false;
    for (let attempt = 0; attempt < 120 && !converged; attempt++) {
      await new Promise((r) => setTimeout(r, TICK_MS));
      const snapshot = await api.snapshot();
      const truth = await api.groundTruth();
      converged = divergedCount(compareViews(points, snapshot.points, truth, bindings)) === 0;
    }
    expect(converged).toBe(true);
  }, 40000);
});
