/**
 * Collapsible tree view: solid circles sized by footprint, depth columns,
 * single-click selects, double-click expands/collapses.
 */

import type { TreeNodeRecord } from "./api.js";
import type { TreeViewState } from "./state.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const COL_W = 90;
const ROW_H = 26;
const MARGIN = 24;

export interface TreePanelHandlers {
  onSelect: (node: TreeNodeRecord) => void;
  onToggle: (node: TreeNodeRecord) => void;
}

export class TreePanel {
  constructor(
    private readonly svg: SVGSVGElement,
    private readonly state: TreeViewState,
    private readonly handlers: TreePanelHandlers,
  ) {}

  render(): void {
    while (this.svg.firstChild) this.svg.removeChild(this.svg.firstChild);
    const visible = this.state.visibleNodes();
    const pos = new Map<number, [number, number]>();
    for (const v of visible) {
      pos.set(v.node.instance_id, [MARGIN + v.depth * COL_W, MARGIN + v.row * ROW_H]);
    }
    const maxDepth = visible.reduce((m, v) => Math.max(m, v.depth), 0);
    this.svg.setAttribute("width", String(MARGIN * 2 + (maxDepth + 1) * COL_W));
    this.svg.setAttribute("height", String(MARGIN * 2 + visible.length * ROW_H));

    const edges = document.createElementNS(SVG_NS, "g");
    edges.setAttribute("class", "tree-edges");
    for (const v of visible) {
      if (v.node.parent_instance === null) continue;
      const from = pos.get(v.node.parent_instance);
      if (!from) continue;
      const [x1, y1] = from;
      const [x2, y2] = pos.get(v.node.instance_id)!;
      const line = document.createElementNS(SVG_NS, "line");
      line.setAttribute("x1", String(x1));
      line.setAttribute("y1", String(y1));
      line.setAttribute("x2", String(x2));
      line.setAttribute("y2", String(y2));
      edges.appendChild(line);
    }
    this.svg.appendChild(edges);

    const nodes = document.createElementNS(SVG_NS, "g");
    nodes.setAttribute("class", "tree-nodes");
    for (const v of visible) {
      const [x, y] = pos.get(v.node.instance_id)!;
      const g = document.createElementNS(SVG_NS, "g");
      g.setAttribute("class", "tree-node");
      g.setAttribute("data-instance", String(v.node.instance_id));
      if (v.node.instance_id === this.state.selected) {
        g.classList.add("selected");
      }
      const circle = document.createElementNS(SVG_NS, "circle");
      circle.setAttribute("cx", String(x));
      circle.setAttribute("cy", String(y));
      circle.setAttribute("r", v.radius.toFixed(2));
      circle.setAttribute("class", this.circleClass(v.node));
      g.appendChild(circle);
      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("x", String(x));
      label.setAttribute("y", String(y - v.radius - 3));
      label.textContent = v.node.metacluster_id === null
        ? "volume"
        : `mc ${v.node.metacluster_id}`;
      g.appendChild(label);
      g.addEventListener("click", () => this.handlers.onSelect(v.node));
      g.addEventListener("dblclick", () => this.handlers.onToggle(v.node));
      nodes.appendChild(g);
    }
    this.svg.appendChild(nodes);
  }

  private circleClass(node: TreeNodeRecord): string {
    const parts = ["node-circle"];
    if (node.metacluster_id === null) parts.push("root");
    if (node.is_duplicate) parts.push("duplicate");
    if (node.children.length && !this.state.isExpanded(node.instance_id)) {
      parts.push("collapsed");
    }
    return parts.join(" ");
  }
}
