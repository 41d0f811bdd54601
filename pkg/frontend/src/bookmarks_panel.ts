/**
 * Bookmark list with per-item optical property editing and the composite
 * viewer. Every mutation goes through the bookmark API; reloading the page
 * restores the list from the server.
 */

import type { ApiClient, Axis, BookmarkBody, BookmarkRecord } from "./api.js";

export interface BookmarksPanelElements {
  list: HTMLElement;
  addButton: HTMLButtonElement;
  composite: HTMLImageElement;
}

export class BookmarksPanel {
  private bookmarks: BookmarkRecord[] = [];
  private checked = new Set<number>();
  private compositeAxis: Axis = "z";
  private compositeIndex = 0;
  private window: [number, number] | undefined;

  constructor(
    private readonly el: BookmarksPanelElements,
    private readonly api: ApiClient,
    private readonly selectionProvider: () => [number, number[]][] | null,
  ) {
    el.addButton.addEventListener("click", () => void this.addFromSelection());
  }

  async load(): Promise<void> {
    this.bookmarks = await this.api.listBookmarks();
    this.checked = new Set(
      [...this.checked].filter((id) => this.bookmarks.some((b) => b.id === id)));
    this.render();
  }

  setCompositeSlice(axis: Axis, index: number, window?: [number, number]): void {
    this.compositeAxis = axis;
    this.compositeIndex = index;
    this.window = window;
    this.refreshComposite();
  }

  private async addFromSelection(): Promise<void> {
    const selections = this.selectionProvider();
    if (!selections || !selections.length) return;
    await this.api.createBookmark({
      name: `feature ${this.bookmarks.length + 1}`,
      selections,
      render_mode: "flat",
      color: [230, 80, 60],
      opacity: 0.8,
    });
    await this.load();
  }

  private bodyFor(bm: BookmarkRecord): BookmarkBody {
    return {
      name: bm.name,
      selections: bm.selections,
      render_mode: bm.render_mode,
      color: bm.color,
      opacity: bm.opacity,
      transfer_function: bm.transfer_function,
    };
  }

  private async updateAndReload(bm: BookmarkRecord, patch: Partial<BookmarkBody>): Promise<void> {
    await this.api.updateBookmark(bm.id, { ...this.bodyFor(bm), ...patch });
    await this.load();
    this.refreshComposite();
  }

  refreshComposite(): void {
    const ids = [...this.checked].sort((a, b) => a - b);
    if (!ids.length) {
      this.el.composite.removeAttribute("src");
      return;
    }
    this.el.composite.src = this.api.compositeUrl(
      this.compositeAxis, this.compositeIndex, ids, this.window);
  }

  render(): void {
    this.el.list.textContent = "";
    for (const bm of this.bookmarks) {
      const li = document.createElement("li");
      li.className = "bookmark";
      li.dataset.bookmarkId = String(bm.id);

      const toggle = document.createElement("input");
      toggle.type = "checkbox";
      toggle.className = "bm-toggle";
      toggle.checked = this.checked.has(bm.id);
      toggle.addEventListener("change", () => {
        if (toggle.checked) this.checked.add(bm.id);
        else this.checked.delete(bm.id);
        this.refreshComposite();
      });
      li.appendChild(toggle);

      const name = document.createElement("span");
      name.className = "bm-name";
      name.textContent = bm.name;
      li.appendChild(name);

      const color = document.createElement("input");
      color.type = "color";
      color.className = "bm-color";
      color.value = rgbToHex(bm.color);
      color.addEventListener("change", () => {
        void this.updateAndReload(bm, { color: hexToRgb(color.value) });
      });
      li.appendChild(color);

      const opacity = document.createElement("input");
      opacity.type = "range";
      opacity.className = "bm-opacity";
      opacity.min = "0";
      opacity.max = "1";
      opacity.step = "0.05";
      opacity.value = String(bm.opacity);
      opacity.addEventListener("change", () => {
        void this.updateAndReload(bm, { opacity: Number(opacity.value) });
      });
      li.appendChild(opacity);

      const mode = document.createElement("select");
      mode.className = "bm-mode";
      for (const m of ["flat", "tf1d", "surface-outline"]) {
        const opt = document.createElement("option");
        opt.value = m;
        opt.textContent = m;
        opt.selected = m === bm.render_mode;
        mode.appendChild(opt);
      }
      mode.addEventListener("change", () => {
        void this.updateAndReload(bm, { render_mode: mode.value });
      });
      li.appendChild(mode);

      const remove = document.createElement("button");
      remove.className = "bm-delete";
      remove.textContent = "✕";
      remove.addEventListener("click", () => {
        void this.api.deleteBookmark(bm.id).then(() => this.load())
          .then(() => this.refreshComposite());
      });
      li.appendChild(remove);

      this.el.list.appendChild(li);
    }
  }
}

export function rgbToHex(rgb: number[]): string {
  return "#" + rgb.map((c) => Math.max(0, Math.min(255, c))
    .toString(16).padStart(2, "0")).join("");
}

export function hexToRgb(hex: string): number[] {
  const h = hex.replace("#", "");
  return [0, 2, 4].map((i) => parseInt(h.slice(i, i + 2), 16));
}
