/**
 * 2D slice viewer with window controls, a voxel brush, and size-bounded
 * search. Brushed voxels accumulate across strokes; search posts exactly the
 * accumulated voxel set plus the min/max size fields.
 */

import type { ApiClient, Axis, SearchResult } from "./api.js";
import { LatestOnly } from "./api.js";
import type { BrushState } from "./state.js";

export interface SlicePanelHandlers {
  onNavigate: (instanceId: number) => void;
}

export interface SlicePanelElements {
  image: HTMLImageElement;
  overlay: HTMLCanvasElement;
  axisSelect: HTMLSelectElement;
  indexInput: HTMLInputElement;
  windowLo: HTMLInputElement;
  windowHi: HTMLInputElement;
  minSize: HTMLInputElement;
  maxSize: HTMLInputElement;
  searchButton: HTMLButtonElement;
  clearButton: HTMLButtonElement;
  results: HTMLElement;
}

export class SlicePanel {
  private readonly inflight = new LatestOnly();
  private scale = 8;

  constructor(
    private readonly el: SlicePanelElements,
    private readonly api: ApiClient,
    private readonly brush: BrushState,
    private readonly dims: [number, number, number],
    private readonly handlers: SlicePanelHandlers,
  ) {
    el.axisSelect.addEventListener("change", () => {
      this.brush.setSlice(el.axisSelect.value as Axis, 0);
      el.indexInput.value = "0";
      this.refresh();
    });
    el.indexInput.addEventListener("change", () => {
      this.brush.setSlice(this.brush.axis, Number(el.indexInput.value));
      this.refresh();
    });
    el.windowLo.addEventListener("change", () => this.refresh());
    el.windowHi.addEventListener("change", () => this.refresh());
    el.clearButton.addEventListener("click", () => {
      this.brush.clear();
      this.syncSearchButton();
      this.drawOverlay();
    });
    el.searchButton.addEventListener("click", () => void this.runSearch());
    el.overlay.addEventListener("pointerdown", (ev) => this.stroke(ev, true));
    el.overlay.addEventListener("pointermove", (ev) => this.stroke(ev, false));
    el.overlay.addEventListener("dblclick", () => void this.jumpToContaining());
    this.syncSearchButton();
  }

  sliceShape(): [number, number] {
    const [nx, ny, nz] = this.dims;
    if (this.brush.axis === "z") return [nx, ny];
    if (this.brush.axis === "y") return [nx, nz];
    return [ny, nz];
  }

  axisLength(): number {
    const [nx, ny, nz] = this.dims;
    return { x: nx, y: ny, z: nz }[this.brush.axis];
  }

  refresh(): void {
    const lo = Number(this.el.windowLo.value);
    const hi = Number(this.el.windowHi.value);
    this.el.image.src = this.api.sliceUrl(this.brush.axis, this.brush.index,
                                          hi > lo ? [lo, hi] : undefined);
    const [w, h] = this.sliceShape();
    this.el.overlay.width = w * this.scale;
    this.el.overlay.height = h * this.scale;
    this.drawOverlay();
  }

  private stroke(ev: PointerEvent, startOfStroke: boolean): void {
    if (!startOfStroke && ev.buttons === 0) return;
    const rect = this.el.overlay.getBoundingClientRect();
    const col = Math.floor((ev.clientX - rect.left) / this.scale);
    const row = Math.floor((ev.clientY - rect.top) / this.scale);
    this.brush.brushAt(col, row);
    this.syncSearchButton();
    this.drawOverlay();
  }

  private drawOverlay(): void {
    const ctx = this.el.overlay.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, this.el.overlay.width, this.el.overlay.height);
    ctx.fillStyle = "rgba(255, 64, 64, 0.55)";
    for (const [c, r] of this.brush.onSlice()) {
      ctx.fillRect(c * this.scale, r * this.scale, this.scale, this.scale);
    }
  }

  private syncSearchButton(): void {
    this.el.searchButton.disabled = this.brush.isEmpty();
  }

  searchBounds(): { min: number; max: number | null } {
    const min = Number(this.el.minSize.value) || 0;
    const raw = this.el.maxSize.value.trim();
    return { min, max: raw === "" ? null : Number(raw) };
  }

  async runSearch(): Promise<SearchResult[] | null> {
    if (this.brush.isEmpty()) return null;
    const { min, max } = this.searchBounds();
    const results = await this.inflight.run(
      () => this.api.search(this.brush.list(), min, max));
    if (results !== null) this.renderResults(results);
    return results;
  }

  private renderResults(results: SearchResult[]): void {
    this.el.results.textContent = "";
    if (!results.length) {
      const empty = document.createElement("li");
      empty.className = "empty";
      empty.textContent = "no matches";
      this.el.results.appendChild(empty);
      return;
    }
    for (const r of results) {
      const li = document.createElement("li");
      li.className = "search-result";
      li.dataset.instance = String(r.instance_id);
      li.textContent = `mc ${r.metacluster_id} (${r.footprint_voxel_size} vox)`;
      li.addEventListener("dblclick", () => this.handlers.onNavigate(r.instance_id));
      li.addEventListener("click", () => this.handlers.onNavigate(r.instance_id));
      this.el.results.appendChild(li);
    }
  }

  private async jumpToContaining(): Promise<void> {
    if (this.brush.isEmpty()) return;
    const doc = await this.api.containingNode(this.brush.list());
    this.handlers.onNavigate(doc.instance_id);
  }
}
