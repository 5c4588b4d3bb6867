// DTOs mirroring the selection service wire format. Field names match the
// server exactly; nothing is renamed client-side.

export interface Question {
  field_path: string;
  question: string;
}

export interface Recommendation {
  model: string;
  rank: number;
  reason: string[];
  selection_confidence: number;
}

export interface Explanation {
  model_name: string;
  explanation: string[];
  paper_link: string | null;
  repository: string | null;
}

export type SessionStatus = "working" | "needs_clarification" | "done" | "fallback";

export interface SessionSnapshot {
  session_id: string;
  status: SessionStatus;
  phase: string;
  raw_query: string;
  query: Record<string, unknown>;
  clarify_counter: number;
  k: number;
  questions: Question[];
  recommendations: Recommendation[];
  explanations: Explanation[];
  overall_confidence: number | null;
  survivors: string[];
  trace: string[];
  flags: string[];
  created_at: number;
  updated_at: number;
}

export interface EliminationEntry {
  model_id: string;
  constraint: string;
  detail: string;
}

export interface FilterView {
  surviving: string[];
  eliminated: EliminationEntry[];
}

export interface PreviewResponse {
  filter: FilterView;
  ranking: Recommendation[];
}

export interface HealthResponse {
  status: string;
  catalog_size: number;
  index_dimension: number;
}

export interface ModelRecord {
  model_id: string;
  model_name: string;
  paper_link?: string;
  repository?: string;
  [key: string]: unknown;
}

export interface AnswerPayload {
  field_path: string;
  raw_text: string;
}
