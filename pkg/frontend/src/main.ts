// Browser entry point: reads the API base/token from the query string,
// mounts the app, and translates DOM events into App method calls.

import { ApiClient } from "./api.js";
import { App, TABS, type Tab } from "./app.js";
import type { Role } from "./types.js";

function mount(): void {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? "http://127.0.0.1:8000";
  const token = params.get("token") ?? undefined;
  const role = (params.get("role") as Role | null) ?? "curator";

  const client = new ApiClient(base, token);
  const app = new App(client, role);
  const root = document.getElementById("root");
  const nav = document.getElementById("nav");
  if (!root || !nav) throw new Error("missing #root or #nav element");

  nav.innerHTML = TABS.map(
    (t) => `<button data-tab="${t}">${t}</button>`,
  ).join("");

  const repaint = () => {
    root.innerHTML = app.render();
  };

  nav.addEventListener("click", (ev) => {
    const tab = (ev.target as HTMLElement).dataset?.tab as Tab | undefined;
    if (tab) {
      app.selectTab(tab);
      repaint();
    }
  });

  root.addEventListener("click", async (ev) => {
    const el = ev.target as HTMLElement;
    const action = el.dataset?.action;
    const id = el.dataset?.id;
    if ((action === "validate" || action === "invalidate") && id) {
      await app.annotate(Number(id), action);
      repaint();
    }
  });

  root.addEventListener("submit", async (ev) => {
    const form = ev.target as HTMLFormElement;
    if (form.dataset?.form !== "insert") return;
    ev.preventDefault();
    const data = new FormData(form);
    const ok = await app.insert({
      subject: String(data.get("subject") ?? ""),
      predicate: String(data.get("predicate") ?? ""),
      object: String(data.get("object") ?? ""),
    });
    if (ok) form.reset();
    repaint();
  });

  void app.refresh().then(repaint);
  window.setInterval(() => void app.refresh().then(repaint), 5000);
}

mount();
