import type { PreviewPanel, ResultCard, SessionView } from "./session.js";

export function escapeHtml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function link(label: string, href: string | null): string {
  if (!href) {
    return "";
  }
  // the href is the server's string verbatim; only attribute-escaped
  return `<a href="${escapeHtml(href)}" target="_blank" rel="noreferrer">${escapeHtml(label)}</a>`;
}

export function renderTranscript(view: SessionView): string {
  const lines = view.transcript.map(
    (entry) =>
      `<div class="msg msg-${entry.speaker}"><span class="speaker">${entry.speaker}</span>` +
      `${escapeHtml(entry.content)}</div>`,
  );
  return `<div class="transcript">${lines.join("")}</div>`;
}

export function renderQuestions(view: SessionView): string {
  if (!view.questions.length) {
    return "";
  }
  const items = view.questions.map(
    (q) =>
      `<li><label>${escapeHtml(q.question)}` +
      `<input type="text" class="answer" data-field="${escapeHtml(q.field_path)}"></label></li>`,
  );
  return (
    `<form id="answers-form"><ol class="questions">${items.join("")}</ol>` +
    `<button type="submit">Send answers</button></form>`
  );
}

export function renderConstraints(view: SessionView): string {
  const rows = Object.entries(view.constraints).map(([field, value]) => {
    const override = view.overrides[field] ?? "";
    return (
      `<tr><th>${escapeHtml(field)}</th>` +
      `<td><code>${escapeHtml(JSON.stringify(value))}</code></td>` +
      `<td><input type="text" class="override" data-field="${escapeHtml(field)}" ` +
      `value="${escapeHtml(override)}" placeholder="override"></td></tr>`
    );
  });
  if (!rows.length) {
    return `<p class="empty">No parsed constraints yet.</p>`;
  }
  return (
    `<table class="constraints"><thead><tr><th>field</th><th>parsed value</th>` +
    `<th>what-if override</th></tr></thead><tbody>${rows.join("")}</tbody></table>`
  );
}

export function renderCard(card: ResultCard): string {
  const bullets = card.bullets.map((b) => `<li>${escapeHtml(b)}</li>`).join("");
  const links = [link("paper", card.paperLink), link("code", card.repository)]
    .filter(Boolean)
    .join(" · ");
  return (
    `<article class="card" data-model="${escapeHtml(card.modelId)}" data-rank="${card.rank}">` +
    `<header><span class="rank">#${card.rank}</span>` +
    `<h3>${escapeHtml(card.modelName)}</h3>` +
    `<span class="confidence">${card.confidence.toFixed(2)}</span></header>` +
    `<ul>${bullets}</ul>` +
    `<footer>${links}</footer></article>`
  );
}

export function renderCards(cards: ResultCard[]): string {
  const ordered = [...cards].sort((a, b) => a.rank - b.rank);
  return `<section class="results">${ordered.map(renderCard).join("")}</section>`;
}

export function renderPreview(panel: PreviewPanel): string {
  const eliminated = panel.eliminated.map(
    (e) =>
      `<li><strong>${escapeHtml(e.model_id)}</strong> [${escapeHtml(e.constraint)}] ` +
      `${escapeHtml(e.detail)}</li>`,
  );
  return (
    `<div class="preview">` +
    `<h4>Surviving (${panel.surviving.length})</h4>` +
    `<p>${panel.surviving.map(escapeHtml).join(", ") || "none"}</p>` +
    `<h4>Eliminated (${eliminated.length})</h4>` +
    `<ul>${eliminated.join("") || "<li>none</li>"}</ul>` +
    renderCards(panel.cards) +
    `</div>`
  );
}

export function renderError(view: SessionView): string {
  if (!view.error) {
    return "";
  }
  return (
    `<div class="error" role="alert">${escapeHtml(view.error)} ` +
    `<button id="retry">Retry</button></div>`
  );
}
