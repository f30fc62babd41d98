// Console wiring: fetch topology and points, attach the tick stream, and
// drive the diagram, point table, breaker controls, attack panel and the
// HMI-vs-ground-truth comparison. The page is a plain API client; all
// numbers shown come from the service.

import { ApiClient, ApiError, type Role } from "./api.js";
import { BreakerControls } from "./controls.js";
import { compareViews, type ComparisonRow } from "./deception.js";
import { Diagram } from "./diagram.js";
import { CATEGORIES, EventTimeline, describeEvent } from "./timeline.js";
import { TickStream } from "./stream.js";
import type { PointEntry, Snapshot, Topology } from "./types.js";

const api = new ApiClient("");
const stream = new TickStream();
const timeline = new EventTimeline();
let diagram: Diagram | null = null;
let controls: BreakerControls | null = null;
let pointTable: PointEntry[] = [];
let bindings: Record<string, { element: string; quantity: string }> = {};
let lastSnapshot: Snapshot | null = null;
let role: Role = "observer";

function element(id: string): HTMLElement {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found;
}

function setStatus(text: string): void {
  element("status").textContent = text;
}

async function start(selected: Role): Promise<void> {
  role = selected;
  await api.openSession(role);
  const topology: Topology = await api.topology();
  const pointsDoc = await api.points();
  pointTable = pointsDoc.points;
  bindings = {};
  for (const point of pointTable) {
    if (point.element && point.quantity) {
      bindings[point.id] = { element: point.element, quantity: point.quantity };
    }
  }

  diagram = new Diagram(
    element("diagram") as unknown as SVGSVGElement, topology.physical);
  diagram.onSelect = showInspector;
  element("model-hash").textContent =
    `layout ${diagram.segmentCount()} segments, model #${diagram.modelHash.toString(16)}`;

  controls = new BreakerControls((switchId, action) => api.operateBreaker(switchId, action));

  renderPointRows();
  renderAttackPanel();
  stream.onFrame((frame) => {
    if (frame.snapshot && frame.snapshot.bus_voltage) {
      lastSnapshot = frame.snapshot;
      diagram?.update(frame.snapshot);
      controls?.onSnapshot(frame.snapshot);
      updatePointValues(frame.snapshot);
      void updateDeceptionPanel(frame.snapshot);
    }
    if (frame.events && frame.events.length) {
      timeline.ingest(frame.events);
      controls?.onEvents(frame.events);
      renderTimeline();
      renderBlocks();
    }
    setStatus(`tick ${frame.tick}`);
  });
  stream.connect(api.streamUrl());
  setStatus("connected");
}

function showInspector(id: string, kind: string): void {
  const box = element("inspector");
  if (!lastSnapshot) {
    box.textContent = `${kind} ${id}`;
    return;
  }
  const lines = [`${kind}: ${id}`];
  const voltage = lastSnapshot.bus_voltage[id];
  if (voltage) lines.push(`V = ${voltage.v_pu.toFixed(4)} pu`);
  const flow = lastSnapshot.branch_flow[id];
  if (flow) {
    lines.push(`P = ${flow.p_mw.toFixed(3)} MW`);
    lines.push(`Q = ${flow.q_mvar.toFixed(3)} MVAr`);
    lines.push(`I = ${flow.i_a.toFixed(1)} A`);
  }
  const state = lastSnapshot.switch_state[id];
  if (state) lines.push(`state = ${state}`);
  box.textContent = lines.join("\n");
}

function renderPointRows(): void {
  const table = element("points");
  table.textContent = "";
  for (const point of pointTable) {
    const row = document.createElement("tr");
    const name = document.createElement("td");
    name.textContent = `${point.display_name} (${point.id})`;
    const value = document.createElement("td");
    value.id = `point-${point.id}`;
    value.textContent = "-";
    const actions = document.createElement("td");
    if (point.writable && point.element && role === "operator") {
      for (const action of ["open", "close"] as const) {
        const button = document.createElement("button");
        button.textContent = action;
        button.addEventListener("click", () => void operate(point, action));
        actions.appendChild(button);
      }
    }
    row.append(name, value, actions);
    table.appendChild(row);
  }
}

async function operate(point: PointEntry, action: "open" | "close"): Promise<void> {
  if (!controls || !point.element) return;
  try {
    const sent = await controls.operate(point.element, action, stream.renderedTick);
    if (!sent) setStatus(`operation already pending for ${point.element}`);
  } catch (error) {
    setStatus(error instanceof ApiError ? error.message : String(error));
  }
}

function updatePointValues(snapshot: Snapshot): void {
  for (const point of pointTable) {
    const cell = document.getElementById(`point-${point.id}`);
    if (!cell) continue;
    const entry = snapshot.points[point.id];
    let text = entry && entry.value !== null && entry.value !== undefined
      ? formatValue(entry.value, point.unit) : "-";
    if (point.element && controls?.isPending(point.element)) text += " (pending)";
    cell.textContent = text;
  }
}

function formatValue(value: unknown, unit: string): string {
  if (typeof value === "number") {
    return `${value.toFixed(Math.abs(value) < 10 ? 4 : 1)} ${unit}`.trim();
  }
  return String(value);
}

function renderTimeline(): void {
  const list = element("timeline");
  list.textContent = "";
  const rows = timeline.visible().slice(-80).reverse();
  for (const event of rows) {
    const item = document.createElement("li");
    item.className = `event event-${event.category}`;
    item.textContent = `#${event.tick} [${event.category}] ${describeEvent(event)}`;
    list.appendChild(item);
  }
}

function renderBlocks(): void {
  if (!controls || controls.blocks.length === 0) return;
  const latest = controls.blocks[controls.blocks.length - 1];
  const banner = element("block-banner");
  banner.textContent =
    `close of ${latest.switchId} blocked: guard ${latest.guard} (${latest.reason})`;
  banner.classList.add("visible");
  setTimeout(() => banner.classList.remove("visible"), 6000);
}

async function updateDeceptionPanel(snapshot: Snapshot): Promise<void> {
  const panel = element("deception");
  try {
    const truth = await api.groundTruth();
    const rows = compareViews(pointTable, snapshot.points, truth, bindings);
    renderComparison(panel, rows);
  } catch {
    panel.textContent = "ground truth unavailable";
  }
}

function renderComparison(panel: HTMLElement, rows: ComparisonRow[]): void {
  panel.textContent = "";
  const diverged = rows.filter((row) => row.diverged);
  const headline = document.createElement("div");
  headline.className = diverged.length ? "deception-active" : "deception-clear";
  headline.textContent = diverged.length
    ? `DECEPTION: ${diverged.length} point(s) deviate from ground truth`
    : "HMI view matches ground truth";
  panel.appendChild(headline);
  for (const row of rows) {
    const line = document.createElement("div");
    line.className = row.diverged ? "cmp-diverged" : "cmp-ok";
    const hmi = typeof row.hmiValue === "number" ? row.hmiValue.toFixed(4) : String(row.hmiValue);
    const truthText = typeof row.truthValue === "number"
      ? row.truthValue.toFixed(4) : String(row.truthValue);
    line.textContent = `${row.display}: HMI=${hmi} truth=${truthText}`;
    panel.appendChild(line);
  }
}

function renderAttackPanel(): void {
  const fire = element("attack-fire");
  fire.onclick = async () => {
    if (role !== "attacker") {
      setStatus("attacker role required");
      return;
    }
    const attacker = (element("attack-host") as HTMLInputElement).value;
    try {
      const step = JSON.parse((element("attack-step") as HTMLTextAreaElement).value);
      const ack = await api.fireAttackStep(attacker, step);
      setStatus(`attack step queued for tick ${ack.apply_tick}`);
    } catch (error) {
      setStatus(error instanceof ApiError ? error.message : String(error));
    }
  };
}

function installCategoryFilters(): void {
  const bar = element("filters");
  for (const category of CATEGORIES) {
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = true;
    box.addEventListener("change", () => {
      timeline.toggle(category);
      renderTimeline();
    });
    label.append(box, document.createTextNode(category));
    bar.appendChild(label);
  }
}

export function boot(): void {
  installCategoryFilters();
  element("connect").onclick = () => {
    const picked = (element("role") as HTMLSelectElement).value as Role;
    void start(picked).catch((error) => setStatus(String(error)));
  };
}

boot();
