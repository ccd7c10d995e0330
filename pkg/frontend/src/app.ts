// Dashboard state container. DOM-free by design: main.ts wires render()
// output and user events to a real page, tests drive the same methods
// directly.

import { ApiClient, ApiError } from "./api.js";
import type {
  Hierarchy,
  IterationList,
  MutexList,
  Role,
  Stats,
  TripleInsert,
  TripleList,
} from "./types.js";
import {
  renderBanner,
  renderHierarchy,
  renderIterations,
  renderMutex,
  renderQueue,
  renderStats,
} from "./views.js";

export const TABS = ["stats", "iterations", "hierarchy", "mutex", "queue"] as const;
export type Tab = (typeof TABS)[number];

interface AppState {
  tab: Tab;
  stats?: Stats;
  iterations?: IterationList;
  hierarchy?: Hierarchy;
  mutex?: MutexList;
  triples?: TripleList;
  banner?: string;
  notice?: string;
}

export class App {
  readonly state: AppState = { tab: "stats" };

  constructor(
    private readonly client: ApiClient,
    readonly role: Role,
  ) {}

  async refresh(): Promise<void> {
    try {
      const [stats, iterations, hierarchy, mutex, triples] = await Promise.all([
        this.client.stats(),
        this.client.iterations(),
        this.client.hierarchy(),
        this.client.mutex(),
        this.client.triples({ limit: 500 }),
      ]);
      Object.assign(this.state, { stats, iterations, hierarchy, mutex, triples });
      this.state.banner = undefined;
    } catch (err) {
      this.state.banner =
        err instanceof ApiError ? err.message : `refresh failed: ${String(err)}`;
    }
  }

  selectTab(tab: Tab): void {
    this.state.tab = tab;
  }

  async annotate(tripleId: number, action: "validate" | "invalidate"): Promise<void> {
    this.state.notice = undefined;
    try {
      await this.client.annotate(tripleId, action);
    } catch (err) {
      if (err instanceof ApiError && err.status === 403) {
        this.state.notice = `permission denied: ${err.message}`;
        return;
      }
      this.state.notice = err instanceof Error ? err.message : String(err);
      return;
    }
    // service is the single source of truth: refetch instead of patching rows
    await this.refresh();
  }

  async insert(body: TripleInsert): Promise<boolean> {
    this.state.notice = undefined;
    for (const field of ["subject", "predicate", "object"] as const) {
      if (!body[field] || !body[field].trim()) {
        this.state.notice = `${field} must not be empty`;
        return false;
      }
    }
    try {
      await this.client.insert(body);
    } catch (err) {
      this.state.notice = err instanceof Error ? err.message : String(err);
      return false;
    }
    await this.refresh();
    return true;
  }

  render(): string {
    const parts: string[] = [];
    if (this.state.banner) parts.push(renderBanner(this.state.banner));
    switch (this.state.tab) {
      case "stats":
        if (this.state.stats) parts.push(renderStats(this.state.stats));
        break;
      case "iterations":
        if (this.state.iterations)
          parts.push(renderIterations(this.state.iterations.iterations));
        break;
      case "hierarchy":
        if (this.state.hierarchy) parts.push(renderHierarchy(this.state.hierarchy));
        break;
      case "mutex":
        if (this.state.mutex) parts.push(renderMutex(this.state.mutex));
        break;
      case "queue":
        if (this.state.triples)
          parts.push(
            renderQueue(this.state.triples.triples, {
              role: this.role,
              notice: this.state.notice,
            }),
          );
        break;
    }
    return parts.join("\n");
  }
}
