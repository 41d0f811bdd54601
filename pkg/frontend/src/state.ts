/**
 * Pure view state for the tree and the slice brush; no DOM, no fetches.
 */

import type { Axis, TreeDoc, TreeNodeRecord } from "./api.js";

export interface FilterState {
  minSize: number;
  maxBranch: number | null;
}

export interface LaidOutNode {
  node: TreeNodeRecord;
  depth: number;
  row: number;
  radius: number;
}

const MIN_RADIUS = 4;
const MAX_RADIUS = 18;

export class TreeViewState {
  nodes = new Map<number, TreeNodeRecord>();
  rootId: number | null = null;
  expanded = new Set<number>();
  selected: number | null = null;
  filter: FilterState = { minSize: 0, maxBranch: null };
  private maxSize = 1;

  load(doc: TreeDoc): void {
    this.nodes.clear();
    for (const n of doc.nodes) this.nodes.set(n.instance_id, n);
    const root = doc.nodes.find((n) => n.parent_instance === null);
    this.rootId = root ? root.instance_id : null;
    this.maxSize = Math.max(1, ...doc.nodes.map((n) => n.footprint_voxel_size));
    // visible set changed: drop stale expansions/selection, keep the rest
    this.expanded = new Set([...this.expanded].filter((i) => this.nodes.has(i)));
    if (this.rootId !== null) this.expanded.add(this.rootId);
    if (this.selected !== null && !this.nodes.has(this.selected)) {
      this.selected = null;
    }
  }

  isExpanded(instance: number): boolean {
    return this.expanded.has(instance);
  }

  toggle(instance: number): void {
    if (this.expanded.has(instance)) this.expanded.delete(instance);
    else this.expanded.add(instance);
  }

  collapseAll(): void {
    this.expanded.clear();
  }

  select(instance: number | null): void {
    this.selected = instance;
  }

  /** Radius grows monotonically with footprint size (area-proportional). */
  radiusFor(size: number): number {
    const frac = Math.sqrt(Math.max(0, size) / this.maxSize);
    return MIN_RADIUS + frac * (MAX_RADIUS - MIN_RADIUS);
  }

  /** Nodes visible under the current expansion, depth-first, with layout rows. */
  visibleNodes(): LaidOutNode[] {
    const out: LaidOutNode[] = [];
    if (this.rootId === null) return out;
    let row = 0;
    const walk = (instance: number, depth: number) => {
      const node = this.nodes.get(instance);
      if (!node) return;
      out.push({ node, depth, row: row++, radius: this.radiusFor(node.footprint_voxel_size) });
      if (this.expanded.has(instance)) {
        for (const c of node.children) walk(c, depth + 1);
      }
    };
    walk(this.rootId, 0);
    return out;
  }

  /** Expand ancestors so the instance is visible, then select it. */
  reveal(instance: number): void {
    let cur = this.nodes.get(instance);
    while (cur && cur.parent_instance !== null) {
      this.expanded.add(cur.parent_instance);
      cur = this.nodes.get(cur.parent_instance);
    }
    this.selected = instance;
  }
}

export class BrushState {
  axis: Axis = "z";
  index = 0;
  radius = 1;
  private voxels = new Set<string>();

  constructor(readonly dims: [number, number, number]) {}

  get size(): number {
    return this.voxels.size;
  }

  isEmpty(): boolean {
    return this.voxels.size === 0;
  }

  clear(): void {
    this.voxels.clear();
  }

  setSlice(axis: Axis, index: number): void {
    this.axis = axis;
    this.index = index;
  }

  /** Slice pixel (col, row) -> volume (x, y, z); columns follow the lower
   * remaining axis, rows the higher one. */
  voxelAt(col: number, row: number): [number, number, number] {
    if (this.axis === "z") return [col, row, this.index];
    if (this.axis === "y") return [col, this.index, row];
    return [this.index, col, row];
  }

  /** Accumulate a brush stroke: a disc of the current radius on the slice. */
  brushAt(col: number, row: number): void {
    const r = this.radius;
    for (let dr = -r + 1; dr < r; dr++) {
      for (let dc = -r + 1; dc < r; dc++) {
        if (dc * dc + dr * dr > (r - 1) * (r - 1)) continue;
        const [x, y, z] = this.voxelAt(col + dc, row + dr);
        if (x < 0 || y < 0 || z < 0 || x >= this.dims[0] ||
            y >= this.dims[1] || z >= this.dims[2]) continue;
        this.voxels.add(`${x},${y},${z}`);
      }
    }
  }

  /** Brushed voxels as coordinate triples, deterministically ordered. */
  list(): number[][] {
    return [...this.voxels]
      .map((k) => k.split(",").map(Number))
      .sort((a, b) => a[0] - b[0] || a[1] - b[1] || a[2] - b[2]);
  }

  /** Brushed voxels lying on the currently shown slice, as (col, row). */
  onSlice(): [number, number][] {
    const out: [number, number][] = [];
    for (const k of this.voxels) {
      const [x, y, z] = k.split(",").map(Number);
      if (this.axis === "z" && z === this.index) out.push([x, y]);
      else if (this.axis === "y" && y === this.index) out.push([x, z]);
      else if (this.axis === "x" && x === this.index) out.push([y, z]);
    }
    return out;
  }
}
