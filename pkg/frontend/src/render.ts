/**
 * HTML-string renderers over the viewmodel rows.
 *
 * Each renderer returns markup; interactive elements carry data-action
 * attributes that the app layer dispatches on. Keeping these as pure
 * string functions makes them testable without a DOM.
 */

import type { Snapshot, StepOutcome } from "./protocol.js";
import {
  controlPoints,
  eventViews,
  formatOutcome,
  frameRows,
  joinViews,
  statusLine,
  treeRows,
} from "./viewmodel.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function renderTree(snap: Snapshot): string {
  const rows = treeRows(snap).map((row) => {
    const classes = ["state", `kind-${row.kind}`];
    if (row.active) classes.push("active");
    if (row.leaf) classes.push("leaf");
    return (
      `<div class="${classes.join(" ")}" style="--depth:${row.depth}"` +
      ` data-state="${escapeHtml(row.name)}">` +
      `<span class="state-kind">${escapeHtml(row.kind)}</span>` +
      `<span class="state-name">${escapeHtml(row.name)}</span>` +
      `</div>`
    );
  });
  return `<div class="tree">${rows.join("")}</div>`;
}

export function renderFrames(snap: Snapshot): string {
  const rows = frameRows(snap);
  if (rows.length === 0) return `<div class="frames empty">no variables</div>`;
  const body = rows
    .map(
      (row) =>
        `<tr class="frame-${row.storage}">` +
        `<td>${escapeHtml(row.state)}</td>` +
        `<td>${escapeHtml(row.storage)}</td>` +
        `<td>${escapeHtml(row.variable)}</td>` +
        `<td class="value">${escapeHtml(JSON.stringify(row.value))}</td>` +
        `</tr>`,
    )
    .join("");
  return (
    `<table class="frames"><thead><tr>` +
    `<th>state</th><th>storage</th><th>variable</th><th>value</th>` +
    `</tr></thead><tbody>${body}</tbody></table>`
  );
}

export function renderEvents(snap: Snapshot): string {
  const buttons = eventViews(snap).map((view) => {
    const enabled = view.enabled.length > 0;
    const disabled = snap.mid_step ? " disabled" : "";
    const title = view.error
      ? ` title="${escapeHtml(view.error)}"`
      : view.enabled.length
        ? ` title="enabled: ${escapeHtml(view.enabled.join(", "))}"`
        : ` title="no transition enabled (event would be lost)"`;
    const classes = ["event"];
    if (enabled) classes.push("enabled");
    if (view.error) classes.push("errored");
    return (
      `<button class="${classes.join(" ")}" data-action="step-event"` +
      ` data-event="${escapeHtml(view.name)}"${title}${disabled}>` +
      `${escapeHtml(view.name)}</button>`
    );
  });
  return `<div class="events">${buttons.join("")}</div>`;
}

export function renderControlFront(snap: Snapshot): string {
  if (!snap.mid_step) return `<div class="front empty">not mid-step</div>`;
  const points = controlPoints(snap).map(
    (cp) =>
      `<button class="cp" data-action="choose" data-cp="${escapeHtml(cp.label)}"` +
      ` title="${escapeHtml(cp.preview)}">` +
      `<span class="cp-label">${escapeHtml(cp.label)}</span>` +
      `<span class="cp-block">${escapeHtml(cp.block)}</span>` +
      `</button>`,
  );
  const joins = joinViews(snap).map(
    (join) =>
      `<div class="jp"><span class="jp-label">${escapeHtml(join.label)}</span>` +
      ` waiting on ${escapeHtml(join.waitingOn.join(", "))}</div>`,
  );
  return (
    `<div class="front">` +
    `<div class="cps">${points.join("")}</div>` +
    (joins.length ? `<div class="jps">${joins.join("")}</div>` : "") +
    `</div>`
  );
}

export function renderTrace(outcomes: StepOutcome[]): string {
  const lines = outcomes.map(
    (outcome) => `<div class="trace-line">${escapeHtml(formatOutcome(outcome))}</div>`,
  );
  return `<div class="trace">${lines.join("")}</div>`;
}

export function renderError(message: string | null): string {
  if (!message) return `<div class="error empty"></div>`;
  return `<div class="error">${escapeHtml(message)}</div>`;
}

export interface AppView {
  snapshot: Snapshot | null;
  outcomes: StepOutcome[];
  error: string | null;
}

export function renderApp(view: AppView): string {
  if (!view.snapshot) {
    return (
      `<div class="app loading">` +
      renderError(view.error) +
      `<div class="status">no session</div>` +
      `</div>`
    );
  }
  const snap = view.snapshot;
  return (
    `<div class="app">` +
    renderError(view.error) +
    `<div class="status">${escapeHtml(statusLine(snap))}</div>` +
    `<div class="panes">` +
    `<section class="pane pane-tree"><h2>states</h2>${renderTree(snap)}</section>` +
    `<section class="pane pane-frames"><h2>variables</h2>${renderFrames(snap)}</section>` +
    `<section class="pane pane-events"><h2>events</h2>${renderEvents(snap)}` +
    `${renderControlFront(snap)}</section>` +
    `<section class="pane pane-trace"><h2>trace</h2>${renderTrace(view.outcomes)}</section>` +
    `</div>` +
    `</div>`
  );
}
