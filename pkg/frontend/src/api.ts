/**
 * Typed client for the exploration service. All analysis results are fetched;
 * nothing is recomputed client-side.
 */

export type Axis = "x" | "y" | "z";

export interface TreeNodeRecord {
  instance_id: number;
  metacluster_id: number | null;
  parent_instance: number | null;
  children: number[];
  footprint_voxel_size: number;
  is_duplicate: boolean;
  canonical_instance: number;
}

export interface TreeDoc {
  min_size: number;
  max_branching: number | null;
  nodes: TreeNodeRecord[];
}

export interface NodeMember {
  region_id: number;
  voxel_size: number;
}

export interface NodeDetail extends TreeNodeRecord {
  members: NodeMember[];
}

export interface SearchResult {
  metacluster_id: number;
  instance_id: number;
  footprint_voxel_size: number;
}

export interface TransferFunctionDoc {
  domain: [number, number];
  control_points: { scalar: number; color: number[]; opacity: number }[];
}

export interface BookmarkRecord {
  id: number;
  name: string;
  selections: [number, number[]][];
  render_mode: "flat" | "tf1d" | "surface-outline";
  color: number[];
  opacity: number;
  transfer_function: TransferFunctionDoc | null;
  supervoxel_ids: number[];
}

export interface BookmarkBody {
  name: string;
  selections: [number, number[]][];
  render_mode: string;
  color: number[];
  opacity: number;
  transfer_function?: TransferFunctionDoc | null;
}

export interface MetaDoc {
  dims: [number, number, number];
  spacing: number[];
  scalar_range: [number, number];
  supervoxel_count: number;
  metacluster_count: number;
  instance_count: number;
  manifest: { parameters: Record<string, unknown> };
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const r = await this.fetchFn(this.base + path);
    if (!r.ok) throw new ApiError(r.status, `GET ${path}: ${r.status}`);
    return (await r.json()) as T;
  }

  private async sendJson<T>(method: string, path: string, body?: unknown): Promise<T> {
    const r = await this.fetchFn(this.base + path, {
      method,
      headers: { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!r.ok) throw new ApiError(r.status, `${method} ${path}: ${r.status}`);
    return (await r.json()) as T;
  }

  meta(): Promise<MetaDoc> {
    return this.getJson("/api/meta");
  }

  tree(minSize: number, maxBranch: number | null): Promise<TreeDoc> {
    const params = new URLSearchParams();
    params.set("minSize", String(minSize));
    if (maxBranch !== null) params.set("maxBranch", String(maxBranch));
    return this.getJson(`/api/tree?${params.toString()}`);
  }

  node(instance: number): Promise<NodeDetail> {
    return this.getJson(`/api/node/${instance}`);
  }

  async search(voxels: number[][], min: number, max: number | null): Promise<SearchResult[]> {
    const doc = await this.sendJson<{ results: SearchResult[] }>(
      "POST", "/api/search", { voxels, min, max });
    return doc.results;
  }

  containingNode(voxels: number[][]): Promise<{ instance_id: number }> {
    return this.sendJson("POST", "/api/containing-node", { voxels });
  }

  async listBookmarks(): Promise<BookmarkRecord[]> {
    const doc = await this.getJson<{ bookmarks: BookmarkRecord[] }>("/api/bookmarks");
    return doc.bookmarks;
  }

  createBookmark(body: BookmarkBody): Promise<BookmarkRecord> {
    return this.sendJson("POST", "/api/bookmarks", body);
  }

  updateBookmark(id: number, body: BookmarkBody): Promise<BookmarkRecord> {
    return this.sendJson("PUT", `/api/bookmarks/${id}`, body);
  }

  deleteBookmark(id: number): Promise<{ deleted: number }> {
    return this.sendJson("DELETE", `/api/bookmarks/${id}`);
  }

  sliceUrl(axis: Axis, index: number, window?: [number, number]): string {
    const w = window ? `?window=${window[0]},${window[1]}` : "";
    return `${this.base}/api/slice/${axis}/${index}${w}`;
  }

  previewUrl(instance: number, axis: Axis = "z"): string {
    return `${this.base}/api/node/${instance}/preview.png?axis=${axis}`;
  }

  compositeUrl(axis: Axis, index: number, bookmarkIds: number[],
               window?: [number, number]): string {
    const params = new URLSearchParams();
    params.set("bookmarks", bookmarkIds.join(","));
    if (window) params.set("window", `${window[0]},${window[1]}`);
    return `${this.base}/api/composite/${axis}/${index}?${params.toString()}`;
  }
}

/** Discards responses that finish after a newer request was issued. */
export class LatestOnly {
  private seq = 0;

  async run<T>(fn: () => Promise<T>): Promise<T | null> {
    const mine = ++this.seq;
    const result = await fn();
    return mine === this.seq ? result : null;
  }
}
