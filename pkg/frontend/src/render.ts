/**
 * Pure HTML rendering of a view model. Returns a string so tests can
 * snapshot screens without a DOM; the controller injects it and binds the
 * controls by id.
 */

import type { VettingView } from "./viewModel.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function historyList(history: { lf_id: string; useful: boolean }[]): string {
  if (history.length === 0) {
    return '<p class="history-empty">no verdicts yet</p>';
  }
  const items = history
    .map(
      (v) =>
        `<li class="${v.useful ? "useful" : "not-useful"}">${esc(v.lf_id)}: ${
          v.useful ? "useful" : "not useful"
        }</li>`
    )
    .join("");
  return `<ol class="history">${items}</ol>`;
}

export function renderView(view: VettingView): string {
  switch (view.kind) {
    case "loading":
      return `<main class="loading"><p>loading session ${esc(
        view.sessionId
      )}…</p></main>`;

    case "error":
      return [
        '<main class="error">',
        '<div class="banner" role="alert">',
        `<strong>server unreachable</strong><p>${esc(view.message)}</p>`,
        `<button id="retry" ${view.retryEnabled ? "" : "disabled "}>retry</button>`,
        "</div></main>",
      ].join("");

    case "finalize": {
      const warning = view.warning
        ? `<p class="warning">${esc(view.warning)}</p>`
        : "";
      const selected =
        view.selected === null
          ? `<button id="finalize" ${view.finalized ? "disabled " : ""}>finalize committee</button>`
          : `<p class="selected">${view.selected} labeling function(s) selected</p>`;
      return [
        '<main class="finalize">',
        `<h1>session ${esc(view.sessionId)} — all candidates reviewed</h1>`,
        `<p>${view.decided} verdict(s) recorded</p>`,
        warning,
        selected,
        "<h2>verdict history</h2>",
        historyList(view.history),
        "</main>",
      ].join("");
    }

    case "candidate": {
      const rows = view.stats
        .map(
          (s) =>
            `<tr><th>${esc(s.label)}</th><td class="num">${s.value}</td></tr>`
        )
        .join("");
      const target =
        view.targetClass === null
          ? "multiclass"
          : `votes class ${view.targetClass}`;
      const disabled = view.controlsEnabled ? "" : "disabled ";
      return [
        '<main class="candidate">',
        `<h1>candidate ${esc(view.lfId)}</h1>`,
        `<p class="learner">${esc(view.learnerSummary)} — ${esc(target)}</p>`,
        `<table class="stats">${rows}</table>`,
        '<div class="controls">',
        `<button id="accept" ${disabled}accesskey="u">useful (u)</button>`,
        `<button id="reject" ${disabled}accesskey="x">not useful (x)</button>`,
        "</div>",
        `<p class="progress">${view.decided} decided · ${view.pending} pending</p>`,
        `<p class="committee">committee: ${view.committeeSize} LF(s), labeled-set coverage ${view.committeeCoverage}</p>`,
        "<h2>verdict history</h2>",
        historyList(view.history),
        "</main>",
      ].join("");
    }
  }
}
