/** Pure HTML-string views; the DOM layer in main.ts only mounts these.
 *
 * Rendered content is exactly the API payload: no verdict state is ever
 * computed client-side.
 */

import { escapeHtml, highlightName } from "./highlight.js";
import { STEP_LABELS, type IxpSummary, type Progress, type QueueEntry } from "./types.js";

export function stepBadge(step: number): string {
  const label = STEP_LABELS[step] ?? `step-${step}`;
  return `<span class="badge step-${step}">${escapeHtml(label)}</span>`;
}

export function evidenceBadge(evidence: string): string {
  return `<span class="badge evidence-${escapeHtml(evidence)}">${escapeHtml(evidence)}</span>`;
}

export function renderEmptyQueue(): string {
  return '<p class="empty-state">No pending candidates match this filter. 🎉</p>';
}

export function renderQueue(entries: QueueEntry[], selected = 0): string {
  if (entries.length === 0) return renderEmptyQueue();
  const rows = entries
    .map((entry, index) => {
      const cand = entry.candidate;
      const name = cand.transformed_name || "(manual pairing)";
      const classes = index === selected ? "queue-row selected" : "queue-row";
      return `
<tr class="${classes}" data-candidate="${escapeHtml(cand.candidate_id)}">
  <td class="name">${escapeHtml(name)}</td>
  <td>${stepBadge(cand.heuristic_step)}</td>
  <td>${evidenceBadge(cand.location_evidence)}</td>
  <td class="pair">${escapeHtml(entry.pair)}</td>
  <td class="names">${escapeHtml(entry.left.names[0] ?? "")} ↔ ${escapeHtml(entry.right.names[0] ?? "")}</td>
</tr>`;
    })
    .join("");
  return `
<table class="queue">
  <thead><tr><th>matched name</th><th>step</th><th>location</th><th>pair</th><th>records</th></tr></thead>
  <tbody>${rows}</tbody>
</table>`;
}

function locationLine(ixp: IxpSummary): string {
  const parts = ixp.locations.map((loc) =>
    loc.city ? `${loc.city}, ${loc.country}` : loc.country,
  );
  return [...new Set(parts)].join(" · ");
}

function sidePanel(ixp: IxpSummary, matched: string): string {
  const names = ixp.names
    .map((name) => `<li>${highlightName(name, matched)}</li>`)
    .join("");
  const statuses = Object.entries(ixp.status_by_source)
    .map(([source, status]) => `${escapeHtml(source)}: ${escapeHtml(status)}`)
    .join(", ");
  const counts = Object.entries(ixp.participant_counts)
    .map(([source, count]) => `${escapeHtml(source)}: ${count}`)
    .join(", ");
  const urls = ixp.urls
    .map((url) => `<a href="${escapeHtml(url)}" target="_blank" rel="noopener">${escapeHtml(url)}</a>`)
    .join(" ");
  return `
<div class="panel" data-ixp="${escapeHtml(ixp.canonical_id)}">
  <h3>${escapeHtml(ixp.names[0] ?? ixp.canonical_id)}</h3>
  <p class="sources">${ixp.sources.map(escapeHtml).join(" + ")}</p>
  <ul class="names">${names}</ul>
  <p class="location">${escapeHtml(locationLine(ixp))}</p>
  <p class="status">status — ${statuses || "n/a"}</p>
  <p class="participants">participants — ${counts || "none"}</p>
  <p class="urls">${urls}</p>
</div>`;
}

export function renderCompare(entry: QueueEntry): string {
  const cand = entry.candidate;
  const evidence = entry.evidence
    .map((item) => `<li>${escapeHtml(item)}</li>`)
    .join("");
  return `
<section class="compare" data-candidate="${escapeHtml(cand.candidate_id)}">
  <header>
    ${stepBadge(cand.heuristic_step)}
    ${evidenceBadge(cand.location_evidence)}
    <ul class="evidence">${evidence}</ul>
  </header>
  <div class="side-by-side">
    ${sidePanel(entry.left, cand.transformed_name)}
    ${sidePanel(entry.right, cand.transformed_name)}
  </div>
  <footer class="shortcuts">
    <button data-action="accept" title="a">accept (a)</button>
    <button data-action="reject" title="r">reject (r)</button>
    <button data-action="skip" title="s">skip (s)</button>
  </footer>
</section>`;
}

export function renderProgress(progress: Progress): string {
  const rows = Object.entries(progress.pairs)
    .map(
      ([pair, p]) => `
<tr>
  <td>${escapeHtml(pair)}</td>
  <td>${p.pending}</td><td>${p.accepted}</td><td>${p.rejected}</td>
  <td>${p.working_left} / ${p.working_right}</td>
</tr>`,
    )
    .join("");
  const t = progress.totals;
  return `
<table class="progress">
  <thead><tr><th>pair</th><th>pending</th><th>accepted</th><th>rejected</th><th>working sets</th></tr></thead>
  <tbody>${rows}</tbody>
  <tfoot><tr>
    <td>total</td><td>${t.pending}</td><td>${t.accepted}</td><td>${t.rejected}</td><td></td>
  </tr></tfoot>
</table>`;
}

export function renderSearchResults(items: IxpSummary[], side: "left" | "right"): string {
  if (items.length === 0) return '<p class="empty-state">No unmatched IXPs found.</p>';
  const rows = items
    .map(
      (ixp) => `
<li class="search-hit" data-side="${side}" data-ixp="${escapeHtml(ixp.canonical_id)}">
  <strong>${escapeHtml(ixp.names[0] ?? "")}</strong>
  <span>${escapeHtml(ixp.sources.join("+"))}</span>
  <span>${escapeHtml(locationLine(ixp))}</span>
</li>`,
    )
    .join("");
  return `<ul class="search-results">${rows}</ul>`;
}

export function renderBanner(message: string, kind: "error" | "info" = "error"): string {
  return `<div class="banner ${kind}">${escapeHtml(message)}</div>`;
}
