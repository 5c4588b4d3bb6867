import { ApiClient } from "./api.js";
import type {
  AnswerPayload,
  PreviewResponse,
  Question,
  Recommendation,
  SessionSnapshot,
} from "./types.js";

// mirror of the server's structured query field names; overrides are
// validated against this list before any request leaves the browser
export const QUERY_FIELDS = [
  "application",
  "modality",
  "sensor",
  "spatial_resolution",
  "temporal_resolution",
  "bands",
  "avaliable_data",
  "deployment_device",
  "priority_metrics",
  "min_performance",
  "region",
  "domain_keywords",
] as const;

const LIST_FIELDS = new Set(["bands", "priority_metrics", "domain_keywords"]);
const MIN_PERF_RE = /([A-Za-z][A-Za-z0-9 _-]*?)\s*(?:>=|≥|at least|above|over)\s*(-?\d+(?:\.\d+)?)/gi;

export interface TranscriptEntry {
  speaker: "user" | "agent";
  content: string;
}

export interface ResultCard {
  modelId: string;
  modelName: string;
  rank: number;
  confidence: number;
  bullets: string[];
  paperLink: string | null;
  repository: string | null;
}

export interface SessionView {
  sessionId: string | null;
  status: string;
  transcript: TranscriptEntry[];
  constraints: Record<string, unknown>;
  questions: Question[];
  cards: ResultCard[];
  survivors: string[];
  overrides: Record<string, string>;
  error: string | null;
}

export interface PreviewPanel {
  surviving: string[];
  eliminated: { model_id: string; constraint: string; detail: string }[];
  cards: ResultCard[];
}

export function emptySessionView(): SessionView {
  return {
    sessionId: null,
    status: "idle",
    transcript: [],
    constraints: {},
    questions: [],
    cards: [],
    survivors: [],
    overrides: {},
    error: null,
  };
}

export function validateQueryText(text: string): string | null {
  if (!text || !text.trim()) {
    return "Please describe what you need a model for.";
  }
  return null;
}

export function validateOverride(field: string, value: string): string | null {
  if (!(QUERY_FIELDS as readonly string[]).includes(field)) {
    return `Unknown constraint field: ${field}`;
  }
  if (field === "min_performance" && value.trim()) {
    MIN_PERF_RE.lastIndex = 0;
    if (!MIN_PERF_RE.test(value)) {
      return 'min_performance must look like "accuracy >= 85"';
    }
  }
  return null;
}

function coerceOverride(field: string, value: string): unknown {
  const trimmed = value.trim();
  if (LIST_FIELDS.has(field)) {
    return trimmed.split(/[,;]/).map((part) => part.trim()).filter(Boolean);
  }
  if (field === "sensor" || field === "region") {
    const parts = trimmed.split(/[,;]/).map((part) => part.trim()).filter(Boolean);
    return parts.length > 1 ? parts : parts[0];
  }
  if (field === "min_performance") {
    MIN_PERF_RE.lastIndex = 0;
    const metric: string[] = [];
    const floor: number[] = [];
    let match: RegExpExecArray | null;
    while ((match = MIN_PERF_RE.exec(trimmed)) !== null) {
      metric.push((match[1] ?? "").trim());
      floor.push(Number(match[2]));
    }
    return { metric, value: floor };
  }
  return trimmed;
}

/** Merge pending override edits into the session's parsed constraints.
 * With no overrides this is exactly the constraints the server reported. */
export function buildPreviewQuery(
  constraints: Record<string, unknown>,
  overrides: Record<string, string>,
): Record<string, unknown> {
  const query: Record<string, unknown> = { ...constraints };
  for (const [field, value] of Object.entries(overrides)) {
    if (!value.trim()) {
      continue;
    }
    query[field] = coerceOverride(field, value);
  }
  return query;
}

/** Pair ranked recommendations with their explanation entries. Links are
 * carried through untouched: whatever string the server sent is the string
 * the card holds. */
export function buildCards(snapshot: SessionSnapshot): ResultCard[] {
  return snapshot.recommendations.map((rec, i) => {
    const explanation = snapshot.explanations[i];
    return {
      modelId: rec.model,
      modelName: explanation?.model_name ?? rec.model,
      rank: rec.rank,
      confidence: rec.selection_confidence,
      bullets: explanation?.explanation ?? rec.reason,
      paperLink: explanation?.paper_link ?? null,
      repository: explanation?.repository ?? null,
    };
  });
}

export function cardsFromPreview(
  preview: PreviewResponse,
  k: number,
  nameById: Map<string, string> = new Map(),
): ResultCard[] {
  return preview.ranking.slice(0, k).map((rec: Recommendation) => ({
    modelId: rec.model,
    modelName: nameById.get(rec.model) ?? rec.model,
    rank: rec.rank,
    confidence: rec.selection_confidence,
    bullets: rec.reason,
    paperLink: null,
    repository: null,
  }));
}

export function sameRanking(a: ResultCard[], b: ResultCard[]): boolean {
  if (a.length !== b.length) {
    return false;
  }
  return a.every((card, i) =>
    card.modelId === b[i]?.modelId
    && card.rank === b[i]?.rank
    && card.confidence === b[i]?.confidence);
}

function agentMessage(snapshot: SessionSnapshot): string {
  if (snapshot.status === "needs_clarification") {
    return snapshot.questions.map((q) => q.question).join(" ");
  }
  if (snapshot.status === "done") {
    const names = snapshot.recommendations.map((r) => r.model).join(", ");
    return `Recommended: ${names}`;
  }
  if (snapshot.status === "fallback") {
    const first = snapshot.recommendations[0];
    return first
      ? `No model satisfied every constraint; closest match: ${first.model}`
      : "No viable model was found for these constraints.";
  }
  return `Working (${snapshot.phase})`;
}

export function applySnapshot(view: SessionView, snapshot: SessionSnapshot): SessionView {
  return {
    ...view,
    sessionId: snapshot.session_id,
    status: snapshot.status,
    transcript: [...view.transcript, { speaker: "agent", content: agentMessage(snapshot) }],
    constraints: snapshot.query,
    questions: snapshot.questions,
    cards: buildCards(snapshot),
    survivors: snapshot.survivors,
    error: null,
  };
}

/** Drives one browser session against the service. All state transitions go
 * through server snapshots; nothing is ranked or scored locally. */
export class SessionController {
  view: SessionView = emptySessionView();

  constructor(private readonly api: ApiClient, private readonly k: number = 3) {}

  async submitQuery(text: string): Promise<SessionView> {
    const problem = validateQueryText(text);
    if (problem) {
      this.view = { ...this.view, error: problem };
      return this.view;
    }
    this.view = {
      ...emptySessionView(),
      transcript: [{ speaker: "user", content: text }],
    };
    try {
      const snapshot = await this.api.createSession(text, this.k);
      this.view = applySnapshot(this.view, snapshot);
    } catch (error) {
      this.view = { ...this.view, error: describe(error) };
    }
    return this.view;
  }

  async submitAnswers(answers: AnswerPayload[]): Promise<SessionView> {
    const sessionId = this.view.sessionId;
    if (!sessionId) {
      this.view = { ...this.view, error: "No active session." };
      return this.view;
    }
    const spoken = answers.map((a) => a.raw_text).filter(Boolean).join("; ");
    this.view = {
      ...this.view,
      transcript: [...this.view.transcript, { speaker: "user", content: spoken }],
    };
    try {
      const snapshot = await this.api.submitAnswers(sessionId, answers);
      this.view = applySnapshot(this.view, snapshot);
    } catch (error) {
      this.view = { ...this.view, error: describe(error) };
    }
    return this.view;
  }

  async refresh(): Promise<SessionView> {
    if (this.view.sessionId) {
      try {
        const snapshot = await this.api.getSession(this.view.sessionId);
        // refresh replaces panel state but must not duplicate transcript lines
        this.view = {
          ...applySnapshot(this.view, snapshot),
          transcript: this.view.transcript,
        };
      } catch (error) {
        this.view = { ...this.view, error: describe(error) };
      }
    }
    return this.view;
  }

  setOverride(field: string, value: string): string | null {
    const problem = validateOverride(field, value);
    if (problem === null) {
      this.view = {
        ...this.view,
        overrides: { ...this.view.overrides, [field]: value },
      };
    }
    return problem;
  }

  /** Stateless what-if: re-filter and re-rank the session's survivors under
   * edited constraints without touching the session itself. */
  async whatIf(overrides?: Record<string, string>): Promise<PreviewPanel> {
    const edits = overrides ?? this.view.overrides;
    for (const [field, value] of Object.entries(edits)) {
      const problem = validateOverride(field, value);
      if (problem) {
        throw new Error(problem);
      }
    }
    if (!this.view.survivors.length) {
      throw new Error("No completed session with known candidates.");
    }
    const query = buildPreviewQuery(this.view.constraints, edits);
    const preview = await this.api.rankPreview(query, this.view.survivors);
    return {
      surviving: preview.filter.surviving,
      eliminated: preview.filter.eliminated,
      cards: cardsFromPreview(preview, this.k),
    };
  }
}

function describe(error: unknown): string {
  if (error instanceof Error) {
    return error.message;
  }
  return String(error);
}
