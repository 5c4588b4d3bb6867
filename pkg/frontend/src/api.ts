import type {
  AnswerPayload,
  HealthResponse,
  ModelRecord,
  PreviewResponse,
  SessionSnapshot,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

/** Thin typed client over the service; every number on screen comes from
 * responses returned here, never from client-side computation. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = `${response.status}`;
      try {
        const payload = await response.json();
        detail = typeof payload.detail === "string" ? payload.detail : JSON.stringify(payload);
      } catch {
        // non-JSON error body; keep the status code
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  health(): Promise<HealthResponse> {
    return this.request("GET", "/health");
  }

  listModels(): Promise<{ models: ModelRecord[] }> {
    return this.request("GET", "/models");
  }

  getModel(modelId: string): Promise<ModelRecord> {
    return this.request("GET", `/models/${encodeURIComponent(modelId)}`);
  }

  createSession(query: string, k: number): Promise<SessionSnapshot> {
    return this.request("POST", "/sessions", { query, k });
  }

  getSession(sessionId: string): Promise<SessionSnapshot> {
    return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}`);
  }

  submitAnswers(sessionId: string, answers: AnswerPayload[]): Promise<SessionSnapshot> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/answers`, {
      answers,
    });
  }

  rankPreview(query: Record<string, unknown>, modelIds: string[]): Promise<PreviewResponse> {
    return this.request("POST", "/rank/preview", { query, model_ids: modelIds });
  }
}
