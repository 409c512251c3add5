import type { ClusterPage, ClusterRecord, Decision, ReviewStatus, Stats } from "./types.js";

export class ApiError extends Error {
  constructor(message: string, public readonly status: number | null = null) {
    super(message);
    this.name = "ApiError";
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // keep the status text
    }
    throw new ApiError(detail, response.status);
  }
  return (await response.json()) as T;
}

/** Typed client for the review service; all mutations flow through postVerdict. */
export class ReviewApi {
  constructor(private readonly base: string = "") {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  async stats(): Promise<Stats> {
    return asJson<Stats>(await fetch(this.url("/api/stats")));
  }

  async listClusters(
    status: ReviewStatus | null,
    page = 1,
    pageSize = 200,
  ): Promise<ClusterPage> {
    const params = new URLSearchParams({ page: String(page), page_size: String(pageSize) });
    if (status) params.set("status", status);
    return asJson<ClusterPage>(await fetch(this.url(`/api/clusters?${params}`)));
  }

  /** Pull every page of the filtered queue, in served order. */
  async fetchQueue(status: ReviewStatus | null): Promise<{ items: ClusterPage["items"]; stats: Stats }> {
    const items: ClusterPage["items"] = [];
    let page = 1;
    for (;;) {
      const chunk = await this.listClusters(status, page);
      items.push(...chunk.items);
      if (items.length >= chunk.total || chunk.items.length === 0) break;
      page += 1;
    }
    return { items, stats: await this.stats() };
  }

  async getCluster(id: string): Promise<ClusterRecord> {
    return asJson<ClusterRecord>(await fetch(this.url(`/api/clusters/${encodeURIComponent(id)}`)));
  }

  async postVerdict(id: string, decision: Decision, reviewer = ""): Promise<Stats> {
    const response = await fetch(this.url(`/api/clusters/${encodeURIComponent(id)}/verdict`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ decision, reviewer }),
    });
    return asJson<Stats>(response);
  }
}
