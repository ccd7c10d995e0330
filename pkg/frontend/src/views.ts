// Pure render functions: state in, HTML string out. Keeping views free of
// fetch and DOM access lets tests assert on exact markup.

import type {
  Hierarchy,
  HierarchyNode,
  Iteration,
  MutexList,
  Role,
  Stats,
  Triple,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function formatConfidence(value: number): string {
  return value.toFixed(3);
}

function histogram(bins: number[]): string {
  const peak = Math.max(1, ...bins);
  const bars = bins
    .map((count, i) => {
      const height = Math.round((100 * count) / peak);
      const lo = (i / bins.length).toFixed(1);
      return `<div class="bar" data-bin="${lo}" style="height:${height}%" title="[${lo}, +0.1): ${count}"></div>`;
    })
    .join("");
  return `<div class="histogram">${bars}</div>`;
}

export function renderStats(stats: Stats): string {
  const sources = Object.entries(stats.per_source_counts)
    .sort(([a], [b]) => a.localeCompare(b))
    .map(
      ([name, count]) =>
        `<li><span class="source">${escapeHtml(name)}</span> ${count}</li>`,
    )
    .join("");
  return `
<section class="stats">
  <dl>
    <dt>Triples</dt><dd data-stat="triples_total">${stats.triples_total}</dd>
    <dt>Validated</dt><dd data-stat="triples_validated">${stats.triples_validated}</dd>
    <dt>Invalidated</dt><dd data-stat="triples_invalidated">${stats.triples_invalidated}</dd>
    <dt>Concepts</dt><dd data-stat="concepts_total">${stats.concepts_total}</dd>
    <dt>Induced concepts</dt><dd data-stat="concepts_induced">${stats.concepts_induced}</dd>
    <dt>Mutex sets</dt><dd data-stat="mutex_sets_total">${stats.mutex_sets_total}</dd>
  </dl>
  ${histogram(stats.confidence_histogram)}
  <ul class="sources">${sources}</ul>
</section>`;
}

export function renderIterations(iterations: Iteration[]): string {
  if (iterations.length === 0) {
    return `<section class="iterations"><p class="empty">No iterations recorded yet.</p></section>`;
  }
  const rows = iterations
    .map(
      (it) => `
    <tr>
      <td>${it.outer_index}.${it.inner_index}</td>
      <td>${it.triples_total}</td>
      <td>${it.triples_new}</td>
      <td>${it.concepts_total}</td>
      <td>${it.subconcepts_new}</td>
      <td>${it.mutex_sets_new}</td>
      <td>${it.invalidated_total}</td>
    </tr>`,
    )
    .join("");
  return `
<section class="iterations">
  <table>
    <thead><tr><th>Iter</th><th>Triples</th><th>New</th><th>Concepts</th>
    <th>New subconcepts</th><th>New mutex</th><th>Invalidated</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>
</section>`;
}

function renderNode(node: HierarchyNode): string {
  const badge = `<span class="badge badge-${node.provenance}">${escapeHtml(node.provenance)}</span>`;
  const label = `${escapeHtml(node.label)} ${badge}`;
  if (node.children.length === 0) {
    return `<li class="node kind-${node.kind}" data-concept="${node.id}">${label}</li>`;
  }
  const children = node.children.map(renderNode).join("");
  return `<li class="node kind-${node.kind}" data-concept="${node.id}">
<details open><summary>${label}</summary><ul>${children}</ul></details></li>`;
}

export function renderHierarchy(hierarchy: Hierarchy): string {
  const roots = hierarchy.roots.map(renderNode).join("");
  return `<section class="hierarchy"><ul class="tree">${roots}</ul></section>`;
}

export function renderMutex(mutex: MutexList): string {
  if (mutex.mutex_sets.length === 0) {
    return `<section class="mutex"><p class="empty">No mutually exclusive groups.</p></section>`;
  }
  const groups = mutex.mutex_sets
    .map((ms) => {
      const members = ms.members
        .map((m) => `<span class="member">${escapeHtml(m.concept_label)}</span>`)
        .join(" &#8860; ");
      return `<li data-mutex="${ms.id}">${members}
<span class="meta">${escapeHtml(ms.provenance)}, ${formatConfidence(ms.confidence)}</span></li>`;
    })
    .join("");
  return `<section class="mutex"><ul>${groups}</ul></section>`;
}

export interface QueueOptions {
  role: Role;
  notice?: string;
}

export function renderQueue(triples: Triple[], opts: QueueOptions): string {
  // lowest-confidence candidates first: those need a human the most
  const ordered = [...triples].sort(
    (a, b) => a.confidence - b.confidence || a.id - b.id,
  );
  const disabled = opts.role === "viewer" ? " disabled" : "";
  const rows = ordered
    .map((t) => {
      const top = [...t.evidence].sort(
        (a, b) => b.local_confidence * b.frequency - a.local_confidence * a.frequency,
      )[0];
      return `
    <tr data-triple="${t.id}" class="status-${t.status}">
      <td>${escapeHtml(t.subject)}</td>
      <td>${escapeHtml(t.predicate)}</td>
      <td>${escapeHtml(t.object)}</td>
      <td class="confidence">${formatConfidence(t.confidence)}</td>
      <td><span class="badge badge-${t.status}">${escapeHtml(t.status)}</span></td>
      <td>${top ? escapeHtml(top.source) : ""}</td>
      <td>
        <button data-action="validate" data-id="${t.id}"${disabled}>validate</button>
        <button data-action="invalidate" data-id="${t.id}"${disabled}>invalidate</button>
      </td>
    </tr>`;
    })
    .join("");
  const notice = opts.notice
    ? `<p class="notice">${escapeHtml(opts.notice)}</p>`
    : "";
  return `
<section class="queue">
  ${notice}
  <form class="insert" data-form="insert">
    <input name="subject" placeholder="subject" />
    <input name="predicate" placeholder="predicate" />
    <input name="object" placeholder="object" />
    <button type="submit" data-action="insert"${disabled}>insert</button>
  </form>
  <table>
    <thead><tr><th>Subject</th><th>Predicate</th><th>Object</th>
    <th>Confidence</th><th>Status</th><th>Top source</th><th></th></tr></thead>
    <tbody>${rows}</tbody>
  </table>
</section>`;
}

export function renderBanner(message: string): string {
  return `<div class="banner error">${escapeHtml(message)} <span class="stale">showing stale data</span></div>`;
}
