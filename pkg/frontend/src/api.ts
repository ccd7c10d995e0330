// Thin typed client over the KB service. The dashboard holds no KB logic:
// every number it shows comes from one of these calls.

import type {
  Hierarchy,
  IterationList,
  MutexList,
  Stats,
  Triple,
  TripleInsert,
  TripleList,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
  }
}

export interface TripleQuery {
  predicate?: string;
  min_confidence?: number;
  status?: string;
  include_invalidated?: boolean;
  cursor?: string;
  limit?: number;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token?: string,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const headers: Record<string, string> = {
      ...(init?.headers as Record<string, string> | undefined),
    };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    let resp: Response;
    try {
      resp = await fetch(this.baseUrl + path, { ...init, headers });
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`);
    }
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = (await resp.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  stats(): Promise<Stats> {
    return this.request("/api/stats");
  }

  iterations(): Promise<IterationList> {
    return this.request("/api/iterations");
  }

  hierarchy(): Promise<Hierarchy> {
    return this.request("/api/hierarchy");
  }

  mutex(): Promise<MutexList> {
    return this.request("/api/mutex");
  }

  triples(query: TripleQuery = {}): Promise<TripleList> {
    const params = new URLSearchParams();
    for (const [key, value] of Object.entries(query)) {
      if (value !== undefined) params.set(key, String(value));
    }
    const qs = params.toString();
    return this.request(`/api/triples${qs ? "?" + qs : ""}`);
  }

  annotate(tripleId: number, action: "validate" | "invalidate"): Promise<Triple> {
    return this.request(`/api/triples/${tripleId}/${action}`, { method: "POST" });
  }

  insert(body: TripleInsert): Promise<Triple> {
    return this.request("/api/triples", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }
}
