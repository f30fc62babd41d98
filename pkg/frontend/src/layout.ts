// Deterministic single-line-diagram layout: one column per voltage-level
// segment, buses stacked within their segment in a stable hashed order.
// The same topology always produces the same coordinates, so screenshots
// from different runs are comparable.

import type { PhysicalTopology } from "./types.js";

export interface NodePosition {
  id: string;
  x: number;
  y: number;
  segment: string;
}

export interface DiagramEdge {
  id: string;
  from: string;
  to: string;
  kind: "branch" | "switch";
  branchKind?: string;
}

export interface DiagramLayout {
  nodes: NodePosition[];
  edges: DiagramEdge[];
  segments: { name: string; x: number; width: number }[];
  width: number;
  height: number;
  modelHash: number;
}

export const SEGMENT_WIDTH = 220;
export const ROW_HEIGHT = 64;
const MARGIN = 40;

/** FNV-1a over the topology's identifying strings. */
export function modelHash(topology: PhysicalTopology): number {
  let hash = 0x811c9dc5;
  const feed = (text: string) => {
    for (let i = 0; i < text.length; i++) {
      hash ^= text.charCodeAt(i);
      hash = Math.imul(hash, 0x01000193) >>> 0;
    }
  };
  for (const bus of topology.buses) feed(bus.id + "@" + bus.voltage_level);
  for (const branch of topology.branches) feed(branch.id + branch.from + branch.to);
  for (const sw of topology.switches) feed(sw.id + sw.from + sw.to);
  return hash >>> 0;
}

export function computeLayout(topology: PhysicalTopology): DiagramLayout {
  const hash = modelHash(topology);
  const segments = [...topology.segments].sort(
    (a, b) => b.nominal_kv - a.nominal_kv || (a.voltage_level < b.voltage_level ? -1 : 1));

  const nodes: NodePosition[] = [];
  const segmentBoxes: { name: string; x: number; width: number }[] = [];
  let maxRows = 1;
  segments.forEach((segment, column) => {
    const x0 = MARGIN + column * SEGMENT_WIDTH;
    segmentBoxes.push({ name: segment.voltage_level, x: x0, width: SEGMENT_WIDTH - 20 });
    const buses = [...segment.buses].sort();
    maxRows = Math.max(maxRows, buses.length);
    buses.forEach((bus, row) => {
      nodes.push({
        id: bus,
        x: x0 + (SEGMENT_WIDTH - 20) / 2,
        y: MARGIN + row * ROW_HEIGHT,
        segment: segment.voltage_level,
      });
    });
  });

  const edges: DiagramEdge[] = [];
  for (const branch of topology.branches) {
    edges.push({ id: branch.id, from: branch.from, to: branch.to,
                 kind: "branch", branchKind: branch.kind });
  }
  for (const sw of topology.switches) {
    edges.push({ id: sw.id, from: sw.from, to: sw.to, kind: "switch" });
  }
  edges.sort((a, b) => (a.id < b.id ? -1 : 1));

  return {
    nodes,
    edges,
    segments: segmentBoxes,
    width: MARGIN * 2 + segments.length * SEGMENT_WIDTH,
    height: MARGIN * 2 + maxRows * ROW_HEIGHT,
    modelHash: hash,
  };
}

/** Loading ratio -> stroke color: gray when dead, green to red by load. */
export function flowColor(energized: boolean, loadingRatio: number): string {
  if (!energized) return "#777777";
  const clamped = Math.max(0, Math.min(1, loadingRatio));
  const hue = 120 - Math.round(120 * clamped);
  return `hsl(${hue}, 70%, 45%)`;
}

export function busColor(energized: boolean, vPu: number): string {
  if (!energized) return "#777777";
  if (vPu > 1.05 || (vPu > 0 && vPu < 0.95)) return "#e6a23c";
  return "#2f8f4e";
}
