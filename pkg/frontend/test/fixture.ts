// In-memory stand-in for the KB service, installed as global fetch.
// Mirrors the server's contract: validate pins confidence to 1.0,
// invalidated triples vanish from the default list, viewers cannot write.

import type { Evidence, Triple } from "../src/types.js";

export interface FixtureAccount {
  actor: string;
  role: "viewer" | "curator";
}

function evidence(source: string, c: number): Evidence {
  return { source, local_confidence: c, frequency: 1, first_seen: 0, last_seen: 0 };
}

export class FixtureService {
  triples: Triple[] = [];
  tokens = new Map<string, FixtureAccount>();
  nextId = 1;
  requests: string[] = [];

  seed(rows: Array<[string, string, string, number]>): void {
    for (const [s, p, o, c] of rows) {
      this.triples.push({
        id: this.nextId++,
        subject: s,
        predicate: p,
        object: o,
        confidence: c,
        status: "candidate",
        inverse_of: null,
        evidence: [evidence("Extractor_mock", c)],
      });
    }
  }

  install(): void {
    globalThis.fetch = ((input: RequestInfo | URL, init?: RequestInit) =>
      Promise.resolve(this.handle(String(input), init))) as typeof fetch;
  }

  private json(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  private account(init?: RequestInit): FixtureAccount | null {
    if (this.tokens.size === 0) return { actor: "human_curator", role: "curator" };
    const headers = (init?.headers ?? {}) as Record<string, string>;
    const raw = headers["Authorization"] ?? "";
    return this.tokens.get(raw.replace("Bearer ", "")) ?? null;
  }

  private active(): Triple[] {
    return this.triples.filter((t) => t.status !== "invalidated");
  }

  handle(url: string, init?: RequestInit): Response {
    const parsed = new URL(url, "http://fixture");
    const path = parsed.pathname;
    this.requests.push(`${init?.method ?? "GET"} ${path}`);

    const account = this.account(init);
    if (account === null) return this.json({ detail: "missing or unknown token" }, 401);

    const mutation = (init?.method ?? "GET") === "POST";
    if (mutation && account.role !== "curator") {
      return this.json({ detail: "curator role required" }, 403);
    }

    if (path === "/api/stats") {
      const hist = new Array(10).fill(0);
      for (const t of this.active()) {
        hist[Math.min(9, Math.floor(t.confidence * 10))] += 1;
      }
      return this.json({
        triples_total: this.triples.length,
        triples_validated: this.triples.filter((t) => t.status === "validated").length,
        triples_invalidated: this.triples.filter((t) => t.status === "invalidated").length,
        concepts_total: 3,
        concepts_induced: 1,
        mutex_sets_total: 1,
        confidence_histogram: hist,
        per_source_counts: { Extractor_mock: this.triples.length },
      });
    }
    if (path === "/api/iterations") {
      return this.json({ iterations: [] });
    }
    if (path === "/api/hierarchy") {
      return this.json({
        roots: [
          {
            id: 1,
            label: "MISC",
            provenance: "extractor",
            kind: "class",
            children: [
              {
                id: 2,
                label: "Music Genre: Rock",
                provenance: "integrator",
                kind: "class",
                children: [],
              },
            ],
          },
        ],
      });
    }
    if (path === "/api/mutex") {
      return this.json({
        mutex_sets: [
          {
            id: 1,
            members: [
              { predicate: null, concept_id: 4, concept_label: "Sports Organizations" },
              { predicate: null, concept_id: 5, concept_label: "Religious Organizations" },
            ],
            provenance: "integrator",
            confidence: 0.95,
          },
        ],
      });
    }
    if (path === "/api/triples" && !mutation) {
      const includeInvalidated = parsed.searchParams.get("include_invalidated") === "true";
      const rows = includeInvalidated ? this.triples : this.active();
      return this.json({ triples: rows, next_cursor: null, total: rows.length });
    }
    if (path === "/api/triples" && mutation) {
      const body = JSON.parse(String(init?.body ?? "{}")) as {
        subject?: string;
        predicate?: string;
        object?: string;
      };
      if (!body.subject || !body.predicate || !body.object) {
        return this.json({ detail: "invalid triple body" }, 422);
      }
      const triple: Triple = {
        id: this.nextId++,
        subject: body.subject,
        predicate: body.predicate,
        object: body.object,
        confidence: 1.0,
        status: "candidate",
        inverse_of: null,
        evidence: [evidence(account.actor, 1.0)],
      };
      this.triples.push(triple);
      return this.json(triple, 201);
    }
    const transition = path.match(/^\/api\/triples\/(\d+)\/(validate|invalidate)$/);
    if (transition && mutation) {
      const triple = this.triples.find((t) => t.id === Number(transition[1]));
      if (!triple) return this.json({ detail: "unknown triple" }, 404);
      if (transition[2] === "validate") {
        triple.status = "validated";
        triple.confidence = 1.0;
      } else {
        triple.status = "invalidated";
      }
      return this.json(triple);
    }
    return this.json({ detail: `unknown path ${path}` }, 404);
  }
}
