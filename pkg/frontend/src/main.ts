import { ApiClient } from "./api.js";
import { SessionController } from "./session.js";
import {
  renderCards,
  renderConstraints,
  renderError,
  renderPreview,
  renderQuestions,
  renderTranscript,
} from "./render.js";
import type { AnswerPayload } from "./types.js";

const BASE_URL = (window as unknown as { FMSELECT_API?: string }).FMSELECT_API
  ?? "http://127.0.0.1:8040";

const api = new ApiClient(BASE_URL);
const controller = new SessionController(api);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function render() {
  const view = controller.view;
  el("session-pane").innerHTML =
    renderError(view) + renderTranscript(view) + renderQuestions(view);
  el("constraints-pane").innerHTML = renderConstraints(view);
  el("results-pane").innerHTML = view.cards.length
    ? renderCards(view.cards)
    : `<p class="empty">No results yet.</p>`;
  wireAnswerForm();
  wireOverrideInputs();
}

function wireAnswerForm() {
  const form = document.getElementById("answers-form");
  if (!form) {
    return;
  }
  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const answers: AnswerPayload[] = [];
    form.querySelectorAll<HTMLInputElement>("input.answer").forEach((input) => {
      answers.push({ field_path: input.dataset.field ?? "", raw_text: input.value });
    });
    await controller.submitAnswers(answers);
    render();
  });
}

function wireOverrideInputs() {
  document.querySelectorAll<HTMLInputElement>("input.override").forEach((input) => {
    input.addEventListener("change", () => {
      const problem = controller.setOverride(input.dataset.field ?? "", input.value);
      input.classList.toggle("invalid", problem !== null);
      input.title = problem ?? "";
    });
  });
}

async function submitFromBox() {
  const box = el<HTMLTextAreaElement>("query-box");
  await controller.submitQuery(box.value);
  render();
  // the create call blocks until the session needs input or finishes, but a
  // stale "working" snapshot still resolves by polling
  while (controller.view.status === "working") {
    await new Promise((resolve) => setTimeout(resolve, 1000));
    await controller.refresh();
    render();
  }
}

async function runWhatIf() {
  const target = el("preview-pane");
  try {
    const panel = await controller.whatIf();
    target.innerHTML = renderPreview(panel);
  } catch (error) {
    target.innerHTML = `<div class="error">${String(
      error instanceof Error ? error.message : error,
    )}</div>`;
  }
}

export function boot() {
  el("query-send").addEventListener("click", () => void submitFromBox());
  el("what-if-run").addEventListener("click", () => void runWhatIf());
  document.querySelectorAll<HTMLButtonElement>("nav button[data-view]").forEach((button) => {
    button.addEventListener("click", () => {
      document.querySelectorAll<HTMLElement>("main > section").forEach((section) => {
        section.hidden = section.id !== button.dataset.view;
      });
    });
  });
  void api.health().then((health) => {
    el("health").textContent =
      `catalog: ${health.catalog_size} models, index dim ${health.index_dimension}`;
  }).catch(() => {
    el("health").textContent = "service unreachable";
  });
  render();
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  boot();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", boot);
}
