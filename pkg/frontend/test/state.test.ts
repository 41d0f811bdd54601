import { describe, expect, it } from "vitest";

import { LatestOnly } from "../src/api.js";
import type { TreeDoc, TreeNodeRecord } from "../src/api.js";
import { BrushState, TreeViewState } from "../src/state.js";

function node(id: number, parent: number | null, children: number[],
              size: number): TreeNodeRecord {
  return {
    instance_id: id,
    metacluster_id: id === 0 ? null : id - 1,
    parent_instance: parent,
    children,
    footprint_voxel_size: size,
    is_duplicate: false,
    canonical_instance: id,
  };
}

const smallDoc: TreeDoc = {
  min_size: 0,
  max_branching: null,
  nodes: [
    node(0, null, [1, 2], 1000),
    node(1, 0, [3], 600),
    node(2, 0, [], 300),
    node(3, 1, [], 200),
  ],
};

describe("TreeViewState", () => {
  it("loads a document and exposes the root expanded", () => {
    const s = new TreeViewState();
    s.load(smallDoc);
    expect(s.rootId).toBe(0);
    expect(s.isExpanded(0)).toBe(true);
    const visible = s.visibleNodes().map((v) => v.node.instance_id);
    expect(visible).toEqual([0, 1, 2]);
  });

  it("toggle expands and collapses", () => {
    const s = new TreeViewState();
    s.load(smallDoc);
    s.toggle(1);
    expect(s.visibleNodes().map((v) => v.node.instance_id)).toEqual([0, 1, 3, 2]);
    s.toggle(1);
    expect(s.visibleNodes().map((v) => v.node.instance_id)).toEqual([0, 1, 2]);
  });

  it("radius is monotone in footprint size", () => {
    const s = new TreeViewState();
    s.load(smallDoc);
    expect(s.radiusFor(1000)).toBeGreaterThan(s.radiusFor(600));
    expect(s.radiusFor(600)).toBeGreaterThan(s.radiusFor(200));
    expect(s.radiusFor(0)).toBeGreaterThan(0);
  });

  it("reveal expands every ancestor and selects", () => {
    const s = new TreeViewState();
    s.load(smallDoc);
    s.collapseAll();
    s.reveal(3);
    expect(s.selected).toBe(3);
    expect(s.visibleNodes().map((v) => v.node.instance_id)).toContain(3);
  });

  it("collapse-all leaves only the root visible", () => {
    const s = new TreeViewState();
    s.load(smallDoc);
    s.toggle(1);
    s.collapseAll();
    expect(s.visibleNodes().map((v) => v.node.instance_id)).toEqual([0]);
  });

  it("reload drops stale expansion and selection", () => {
    const s = new TreeViewState();
    s.load(smallDoc);
    s.toggle(1);
    s.select(3);
    s.load({ min_size: 500, max_branching: null,
             nodes: [node(0, null, [1], 1000), node(1, 0, [], 600)] });
    expect(s.selected).toBe(null);
    expect(s.visibleNodes().map((v) => v.node.instance_id)).toEqual([0, 1]);
  });
});

describe("BrushState", () => {
  it("accumulates strokes and stays in bounds", () => {
    const b = new BrushState([4, 4, 4]);
    b.setSlice("z", 1);
    b.brushAt(0, 0);
    b.brushAt(3, 3);
    b.brushAt(-1, 2);     // outside: ignored
    b.brushAt(4, 0);      // outside: ignored
    expect(b.list()).toEqual([[0, 0, 1], [3, 3, 1]]);
  });

  it("maps slice coordinates per axis", () => {
    const b = new BrushState([8, 8, 8]);
    b.setSlice("y", 2);
    expect(b.voxelAt(3, 5)).toEqual([3, 2, 5]);
    b.setSlice("x", 4);
    expect(b.voxelAt(1, 6)).toEqual([4, 1, 6]);
  });

  it("clear empties the set", () => {
    const b = new BrushState([4, 4, 4]);
    b.brushAt(1, 1);
    expect(b.isEmpty()).toBe(false);
    b.clear();
    expect(b.isEmpty()).toBe(true);
    expect(b.list()).toEqual([]);
  });

  it("wider radius brushes a disc", () => {
    const b = new BrushState([16, 16, 16]);
    b.radius = 2;
    b.brushAt(8, 8);
    const got = b.list();
    expect(got.length).toBe(5);   // center plus 4-neighborhood
    expect(got).toContainEqual([8, 8, 0]);
    expect(got).toContainEqual([7, 8, 0]);
  });

  it("reports on-slice voxels only", () => {
    const b = new BrushState([8, 8, 8]);
    b.setSlice("z", 0);
    b.brushAt(2, 2);
    b.setSlice("z", 5);
    b.brushAt(3, 3);
    expect(b.onSlice()).toEqual([[3, 3]]);
    expect(b.list().length).toBe(2);
  });
});

describe("LatestOnly", () => {
  it("discards responses that lost the race", async () => {
    const gate = new LatestOnly();
    let release1: (v: string) => void = () => {};
    const slow = gate.run(() => new Promise<string>((res) => { release1 = res; }));
    const fast = gate.run(() => Promise.resolve("second"));
    expect(await fast).toBe("second");
    release1("first");
    expect(await slow).toBe(null);
  });
});
