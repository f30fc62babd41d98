// SVG single-line diagram: segment-grouped buses, branch/switch edges,
// live coloring from streamed snapshots only, pan/zoom, click inspector.

import { busColor, computeLayout, flowColor, type DiagramLayout } from "./layout.js";
import type { PhysicalTopology, Snapshot } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export class Diagram {
  private layout: DiagramLayout;
  private positions = new Map<string, { x: number; y: number }>();
  private ratings = new Map<string, number>();
  private busElems = new Map<string, SVGCircleElement>();
  private edgeElems = new Map<string, SVGLineElement>();
  private switchBoxes = new Map<string, SVGRectElement>();
  private viewBox = { x: 0, y: 0, w: 0, h: 0 };
  onSelect: (id: string, kind: string) => void = () => undefined;

  constructor(private svg: SVGSVGElement, private topology: PhysicalTopology) {
    this.layout = computeLayout(topology);
    for (const node of this.layout.nodes) this.positions.set(node.id, node);
    for (const branch of topology.branches) this.ratings.set(branch.id, branch.rating_a);
    this.viewBox = { x: 0, y: 0, w: this.layout.width, h: this.layout.height };
    this.render();
    this.installPanZoom();
  }

  get modelHash(): number {
    return this.layout.modelHash;
  }

  segmentCount(): number {
    return this.layout.segments.length;
  }

  private applyViewBox(): void {
    const { x, y, w, h } = this.viewBox;
    this.svg.setAttribute("viewBox", `${x} ${y} ${w} ${h}`);
  }

  private render(): void {
    this.svg.textContent = "";
    this.applyViewBox();

    for (const segment of this.layout.segments) {
      const box = document.createElementNS(SVG_NS, "rect");
      box.setAttribute("x", String(segment.x - 18));
      box.setAttribute("y", "8");
      box.setAttribute("width", String(segment.width + 16));
      box.setAttribute("height", String(this.layout.height - 16));
      box.setAttribute("class", "segment-box");
      this.svg.appendChild(box);
      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("x", String(segment.x - 10));
      label.setAttribute("y", "26");
      label.setAttribute("class", "segment-label");
      label.textContent = segment.name;
      this.svg.appendChild(label);
    }

    for (const edge of this.layout.edges) {
      const from = this.positions.get(edge.from);
      const to = this.positions.get(edge.to);
      if (!from || !to) continue;
      const lineElem = document.createElementNS(SVG_NS, "line");
      lineElem.setAttribute("x1", String(from.x));
      lineElem.setAttribute("y1", String(from.y));
      lineElem.setAttribute("x2", String(to.x));
      lineElem.setAttribute("y2", String(to.y));
      lineElem.setAttribute("class", edge.kind === "switch" ? "edge-switch" : "edge-branch");
      if (edge.branchKind === "transformer") lineElem.setAttribute("stroke-dasharray", "6 3");
      if (edge.branchKind === "tie_line") lineElem.setAttribute("stroke-dasharray", "2 4");
      lineElem.addEventListener("click", () => this.onSelect(edge.id, edge.kind));
      this.svg.appendChild(lineElem);
      this.edgeElems.set(edge.id, lineElem);
      if (edge.kind === "switch") {
        const midX = (from.x + to.x) / 2;
        const midY = (from.y + to.y) / 2;
        const box = document.createElementNS(SVG_NS, "rect");
        box.setAttribute("x", String(midX - 6));
        box.setAttribute("y", String(midY - 6));
        box.setAttribute("width", "12");
        box.setAttribute("height", "12");
        box.setAttribute("class", "switch-box");
        box.addEventListener("click", () => this.onSelect(edge.id, "switch"));
        this.svg.appendChild(box);
        this.switchBoxes.set(edge.id, box);
      }
    }

    for (const node of this.layout.nodes) {
      const circle = document.createElementNS(SVG_NS, "circle");
      circle.setAttribute("cx", String(node.x));
      circle.setAttribute("cy", String(node.y));
      circle.setAttribute("r", "7");
      circle.setAttribute("class", "bus");
      circle.addEventListener("click", () => this.onSelect(node.id, "bus"));
      this.svg.appendChild(circle);
      this.busElems.set(node.id, circle);
      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("x", String(node.x + 10));
      label.setAttribute("y", String(node.y + 4));
      label.setAttribute("class", "bus-label");
      label.textContent = node.id.split("/").pop() ?? node.id;
      this.svg.appendChild(label);
    }
  }

  /** Recolor from a streamed snapshot; no physics happens client-side. */
  update(snapshot: Snapshot): void {
    for (const [busId, circle] of this.busElems) {
      const voltage = snapshot.bus_voltage[busId];
      const energized = snapshot.energized[busId] ?? false;
      circle.setAttribute("fill", busColor(energized, voltage ? voltage.v_pu : 0));
    }
    for (const [edgeId, lineElem] of this.edgeElems) {
      const flow = snapshot.branch_flow[edgeId];
      if (flow) {
        const rating = this.ratings.get(edgeId) ?? 1;
        const energizedEdge = Math.abs(flow.i_a) > 1e-9;
        lineElem.setAttribute("stroke", flowColor(energizedEdge, flow.i_a / rating));
      } else {
        const state = snapshot.switch_state[edgeId];
        lineElem.setAttribute("stroke", state === "closed" ? "#2f8f4e" : "#777777");
      }
    }
    for (const [switchId, box] of this.switchBoxes) {
      const state = snapshot.switch_state[switchId];
      box.setAttribute("fill", state === "closed" ? "#2f8f4e" : "#ffffff");
    }
  }

  private installPanZoom(): void {
    let dragging = false;
    let last = { x: 0, y: 0 };
    this.svg.addEventListener("mousedown", (event) => {
      dragging = true;
      last = { x: event.clientX, y: event.clientY };
    });
    window.addEventListener("mouseup", () => (dragging = false));
    window.addEventListener("mousemove", (event) => {
      if (!dragging) return;
      const scale = this.viewBox.w / this.svg.clientWidth;
      this.viewBox.x -= (event.clientX - last.x) * scale;
      this.viewBox.y -= (event.clientY - last.y) * scale;
      last = { x: event.clientX, y: event.clientY };
      this.applyViewBox();
    });
    this.svg.addEventListener("wheel", (event) => {
      event.preventDefault();
      const factor = event.deltaY > 0 ? 1.15 : 0.87;
      this.viewBox.w *= factor;
      this.viewBox.h *= factor;
      this.applyViewBox();
    }, { passive: false });
  }
}
