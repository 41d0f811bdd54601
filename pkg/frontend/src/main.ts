/**
 * Single-page wiring: tree view + filter controls + node member previews,
 * slice brush panel, and bookmarks with the composite viewer.
 */

import { ApiClient, LatestOnly } from "./api.js";
import type { Axis, TreeNodeRecord } from "./api.js";
import { BookmarksPanel } from "./bookmarks_panel.js";
import { SlicePanel } from "./slice_panel.js";
import { BrushState, TreeViewState } from "./state.js";
import { TreePanel } from "./tree_panel.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

export async function bootstrap(base = ""): Promise<void> {
  const api = new ApiClient(base);
  const meta = await api.meta();
  const dims = meta.dims;

  const treeState = new TreeViewState();
  const brush = new BrushState(dims);
  const treeFetch = new LatestOnly();

  const minSizeInput = byId<HTMLInputElement>("filter-min-size");
  const maxBranchInput = byId<HTMLInputElement>("filter-max-branch");
  const membersEl = byId<HTMLElement>("node-members");
  const selectedLabel = byId<HTMLElement>("selected-node");

  let selection: [number, number[]][] | null = null;

  const treePanel = new TreePanel(
    byId<HTMLElement>("tree-svg") as unknown as SVGSVGElement, treeState, {
      onSelect: (node) => void selectNode(node),
      onToggle: (node) => {
        treeState.toggle(node.instance_id);
        treePanel.render();
      },
    });

  async function reloadTree(): Promise<void> {
    treeState.filter = {
      minSize: Number(minSizeInput.value) || 0,
      maxBranch: maxBranchInput.value.trim() === ""
        ? null : Number(maxBranchInput.value),
    };
    const doc = await treeFetch.run(
      () => api.tree(treeState.filter.minSize, treeState.filter.maxBranch));
    if (doc === null) return;    // a newer request superseded this one
    treeState.load(doc);
    treePanel.render();
  }

  async function selectNode(node: TreeNodeRecord): Promise<void> {
    treeState.select(node.instance_id);
    treePanel.render();
    selectedLabel.textContent = node.metacluster_id === null
      ? "whole volume"
      : `meta-cluster ${node.metacluster_id} — ${node.footprint_voxel_size} vox`;
    membersEl.textContent = "";
    if (node.metacluster_id === null) {
      selection = null;
      return;
    }
    selection = [[node.instance_id, []]];
    const detail = await api.node(node.instance_id);
    for (const axis of ["z", "y", "x"] as Axis[]) {
      const img = document.createElement("img");
      img.className = "member-preview";
      img.src = api.previewUrl(node.instance_id, axis);
      img.title = `${axis}-axis projection`;
      membersEl.appendChild(img);
    }
    const list = document.createElement("ul");
    list.className = "member-regions";
    for (const m of detail.members) {
      const li = document.createElement("li");
      li.textContent = `region ${m.region_id} (${m.voxel_size} vox)`;
      li.addEventListener("click", () => {
        selection = [[node.instance_id, [m.region_id]]];
        li.parentElement?.querySelectorAll("li").forEach(
          (o) => o.classList.remove("selected"));
        li.classList.add("selected");
      });
      list.appendChild(li);
    }
    membersEl.appendChild(list);
  }

  function navigateTo(instanceId: number): void {
    treeState.reveal(instanceId);
    treePanel.render();
    const node = treeState.nodes.get(instanceId);
    if (node) void selectNode(node);
  }

  minSizeInput.addEventListener("change", () => void reloadTree());
  maxBranchInput.addEventListener("change", () => void reloadTree());
  byId<HTMLButtonElement>("collapse-all").addEventListener("click", () => {
    treeState.collapseAll();
    treePanel.render();
  });

  const slicePanel = new SlicePanel({
    image: byId<HTMLImageElement>("slice-image"),
    overlay: byId<HTMLCanvasElement>("slice-overlay"),
    axisSelect: byId<HTMLSelectElement>("slice-axis"),
    indexInput: byId<HTMLInputElement>("slice-index"),
    windowLo: byId<HTMLInputElement>("window-lo"),
    windowHi: byId<HTMLInputElement>("window-hi"),
    minSize: byId<HTMLInputElement>("search-min"),
    maxSize: byId<HTMLInputElement>("search-max"),
    searchButton: byId<HTMLButtonElement>("search-button"),
    clearButton: byId<HTMLButtonElement>("clear-brush"),
    results: byId<HTMLElement>("search-results"),
  }, api, brush, dims, { onNavigate: navigateTo });

  const bookmarks = new BookmarksPanel({
    list: byId<HTMLElement>("bookmark-list"),
    addButton: byId<HTMLButtonElement>("add-bookmark"),
    composite: byId<HTMLImageElement>("composite-image"),
  }, api, () => selection);

  byId<HTMLInputElement>("window-lo").value = String(meta.scalar_range[0]);
  byId<HTMLInputElement>("window-hi").value = String(meta.scalar_range[1]);
  byId<HTMLInputElement>("slice-index").max = String(dims[2] - 1);

  const compositeSync = () => bookmarks.setCompositeSlice(
    brush.axis, brush.index,
    [Number(byId<HTMLInputElement>("window-lo").value),
     Number(byId<HTMLInputElement>("window-hi").value)]);
  byId<HTMLInputElement>("slice-index").addEventListener("change", compositeSync);
  byId<HTMLSelectElement>("slice-axis").addEventListener("change", compositeSync);

  await reloadTree();
  slicePanel.refresh();
  await bookmarks.load();
  compositeSync();
}

declare global {
  interface Window {
    voxtreeBootstrap: typeof bootstrap;
  }
}

if (typeof window !== "undefined") {
  window.voxtreeBootstrap = bootstrap;
  if (document.readyState !== "loading") {
    void bootstrap();
  } else {
    document.addEventListener("DOMContentLoaded", () => void bootstrap());
  }
}
