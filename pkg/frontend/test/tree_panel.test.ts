// @vitest-environment jsdom
import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import type { TreeDoc, TreeNodeRecord } from "../src/api.js";
import { TreeViewState } from "../src/state.js";
import { TreePanel } from "../src/tree_panel.js";

/** A 1,000-node tree: root with 37 children, each with 26 grandchildren. */
function bigDoc(): TreeDoc {
  const nodes: TreeNodeRecord[] = [];
  const mk = (id: number, parent: number | null, size: number): TreeNodeRecord => ({
    instance_id: id,
    metacluster_id: id === 0 ? null : id - 1,
    parent_instance: parent,
    children: [],
    footprint_voxel_size: size,
    is_duplicate: false,
    canonical_instance: id,
  });
  nodes.push(mk(0, null, 10_000_000));
  let next = 1;
  for (let i = 0; i < 37; i++) {
    const branch = mk(next++, 0, 1_000_000 - i * 1000);
    nodes[0].children.push(branch.instance_id);
    nodes.push(branch);
    for (let j = 0; j < 26; j++) {
      const leaf = mk(next++, branch.instance_id, 10_000 - j * 100);
      branch.children.push(leaf.instance_id);
      nodes.push(leaf);
    }
  }
  return { min_size: 500, max_branching: 40, nodes };
}

function makePanel(doc: TreeDoc) {
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  document.body.appendChild(svg);
  const state = new TreeViewState();
  state.load(doc);
  const events: string[] = [];
  const panel = new TreePanel(svg, state, {
    onSelect: (n) => events.push(`select:${n.instance_id}`),
    onToggle: (n) => {
      state.toggle(n.instance_id);
      panel.render();
      events.push(`toggle:${n.instance_id}`);
    },
  });
  return { svg, state, panel, events };
}

describe("TreePanel", () => {
  it("renders a fully expanded 1,000-node tree", () => {
    const doc = bigDoc();
    expect(doc.nodes.length).toBe(1000);
    const { svg, state, panel } = makePanel(doc);
    for (const n of doc.nodes) state.expanded.add(n.instance_id);
    panel.render();
    expect(svg.querySelectorAll("g.tree-node").length).toBe(1000);
    expect(svg.querySelectorAll("line").length).toBe(999);
  });

  it("sibling circles shrink with footprint size", () => {
    const { svg, panel } = makePanel(bigDoc());
    panel.render();
    const circles = [...svg.querySelectorAll("g.tree-node circle")];
    const first = Number(circles[1].getAttribute("r"));
    const last = Number(circles[circles.length - 1].getAttribute("r"));
    expect(first).toBeGreaterThan(last);
  });

  it("double-click toggles expansion, single click selects", () => {
    const { svg, panel, state, events } = makePanel(bigDoc());
    panel.render();
    const branch = [...svg.querySelectorAll("g.tree-node")]
      .find((g) => g.getAttribute("data-instance") === "1")!;
    branch.dispatchEvent(new window.MouseEvent("dblclick", { bubbles: true }));
    expect(events).toContain("toggle:1");
    expect(state.isExpanded(1)).toBe(true);
    expect(svg.querySelectorAll("g.tree-node").length).toBe(1 + 37 + 26);
    const clickable = [...svg.querySelectorAll("g.tree-node")]
      .find((g) => g.getAttribute("data-instance") === "2")!;
    clickable.dispatchEvent(new window.MouseEvent("click", { bubbles: true }));
    expect(events).toContain("select:2");
  });

  it("collapsing the root leaves only the root visible", () => {
    const { svg, panel, state } = makePanel(bigDoc());
    state.toggle(0);     // collapse the root itself
    panel.render();
    expect(svg.querySelectorAll("g.tree-node").length).toBe(1);
    state.toggle(0);
    state.collapseAll();
    panel.render();
    expect(svg.querySelectorAll("g.tree-node").length).toBe(1);
  });

  it("round-trips filter parameters to /api/tree", async () => {
    const doc = bigDoc();
    const urls: string[] = [];
    const api = new ApiClient("", async (input: string) => {
      urls.push(input);
      return new Response(JSON.stringify(doc),
                          { headers: { "content-type": "application/json" } });
    });
    const got = await api.tree(500, 40);
    expect(urls).toEqual(["/api/tree?minSize=500&maxBranch=40"]);
    expect(got.min_size).toBe(500);
    expect(got.max_branching).toBe(40);

    // unlimited branching omits the parameter entirely
    await api.tree(0, null);
    expect(urls[1]).toBe("/api/tree?minSize=0");

    // the filtered document renders in full
    const { state, panel, svg } = makePanel(got);
    for (const n of got.nodes) state.expanded.add(n.instance_id);
    panel.render();
    expect(svg.querySelectorAll("g.tree-node").length).toBe(1000);
  });
});
