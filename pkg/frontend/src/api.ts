// Thin typed client over the range service. Every user action maps to
// exactly one HTTP request; no retries that could duplicate commands.

import type { AttackStepBody, RangeEvent, Snapshot, Topology } from "./types.js";

export type Role = "operator" | "attacker" | "observer";

export class ApiClient {
  private session: string | null = null;

  constructor(public baseUrl: string = "") {}

  private headers(): Record<string, string> {
    const h: Record<string, string> = { "Content-Type": "application/json" };
    if (this.session) h["X-Session"] = this.session;
    return h;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      const detail = await response.text();
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  async openSession(role: Role): Promise<string> {
    const out = await this.request<{ session: string }>("POST", "/api/session", { role });
    this.session = out.session;
    return out.session;
  }

  topology(): Promise<Topology> {
    return this.request("GET", "/api/topology");
  }

  points(): Promise<{ points: import("./types.js").PointEntry[] }> {
    return this.request("GET", "/api/points");
  }

  snapshot(): Promise<Snapshot> {
    return this.request("GET", "/api/snapshot");
  }

  groundTruth(): Promise<{
    tick: number;
    bus_voltage: Snapshot["bus_voltage"];
    branch_flow: Snapshot["branch_flow"];
    switch_state: Snapshot["switch_state"];
  }> {
    return this.request("GET", "/api/debug/ground-truth");
  }

  events(since = 0): Promise<{ events: RangeEvent[] }> {
    return this.request("GET", `/api/events?since=${since}`);
  }

  operateBreaker(switchId: string, action: "open" | "close") {
    return this.request<{ accepted: boolean; apply_tick: number }>(
      "POST", "/api/control", { switch: switchId, action });
  }

  writePoint(pointId: string, value: unknown) {
    return this.request<{ accepted: boolean; apply_tick: number }>(
      "POST", "/api/control", { point: pointId, value });
  }

  fireAttackStep(attacker: string, step: AttackStepBody) {
    return this.request<{ accepted: boolean; apply_tick: number }>(
      "POST", "/api/attack/step", { attacker, step });
  }

  pause() {
    return this.request("POST", "/api/sim/pause");
  }

  resume() {
    return this.request("POST", "/api/sim/resume");
  }

  streamUrl(streams = "ticks,events"): string {
    return `${this.baseUrl}/api/stream?streams=${streams}`;
  }
}

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(`${status}: ${detail}`);
  }
}
