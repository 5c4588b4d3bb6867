import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, type FetchLike } from "../src/api.js";
import {
  SessionController,
  buildPreviewQuery,
  sameRanking,
  validateOverride,
  validateQueryText,
} from "../src/session.js";
import { renderCards, renderConstraints, renderQuestions } from "../src/render.js";
import type { ModelRecord } from "../src/types.js";

const fixtures = JSON.parse(
  readFileSync(new URL("./fixtures/backend.json", import.meta.url), "utf-8"),
);

const UNDERSPECIFIED_QUERY: string = fixtures.session_underspecified.request.query;
const COMPLETED_QUERY: string = fixtures.session_completed.request.query;

function deepEqual(a: unknown, b: unknown): boolean {
  return JSON.stringify(sortKeys(a)) === JSON.stringify(sortKeys(b));
}

function sortKeys(value: unknown): unknown {
  if (Array.isArray(value)) {
    return value.map(sortKeys);
  }
  if (value && typeof value === "object") {
    return Object.fromEntries(
      Object.entries(value as Record<string, unknown>)
        .sort(([x], [y]) => x.localeCompare(y))
        .map(([k, v]) => [k, sortKeys(v)]),
    );
  }
  return value;
}

/** Serves the recorded backend payloads; every response body is byte-for-byte
 * what the real service produced. */
class FixtureBackend {
  calls: { method: string; path: string; body: unknown }[] = [];

  fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    this.calls.push({ method, path, body });
    const payload = this.route(method, path, body);
    if (payload === undefined) {
      return new Response(JSON.stringify({ detail: "not found" }), { status: 404 });
    }
    return new Response(JSON.stringify(payload), {
      status: 200,
      headers: { "Content-Type": "application/json" },
    });
  };

  private route(method: string, path: string, body: unknown): unknown {
    if (method === "GET" && path === "/health") {
      return fixtures.health;
    }
    if (method === "GET" && path === "/models") {
      return fixtures.models;
    }
    if (method === "POST" && path === "/sessions") {
      const query = (body as { query: string }).query;
      if (query === UNDERSPECIFIED_QUERY) {
        return fixtures.session_underspecified.response;
      }
      if (query === COMPLETED_QUERY) {
        return fixtures.session_completed.response;
      }
      return undefined;
    }
    if (method === "GET" && path.startsWith("/sessions/")) {
      const id = decodeURIComponent(path.split("/")[2] ?? "");
      for (const name of ["session_underspecified", "session_completed"]) {
        if (fixtures[name].response.session_id === id) {
          return fixtures[name].response;
        }
      }
      return undefined;
    }
    if (method === "POST" && path === "/rank/preview") {
      for (const name of ["preview_no_overrides", "preview_floor_low", "preview_floor_high"]) {
        if (deepEqual(body, fixtures[name].request)) {
          return fixtures[name].response;
        }
      }
      return undefined;
    }
    return undefined;
  }
}

function makeController() {
  const backend = new FixtureBackend();
  const api = new ApiClient("http://test", backend.fetch);
  return { backend, controller: new SessionController(api), api };
}

describe("under-specified query", () => {
  it("renders at least one question tagged with its field path", async () => {
    const { controller } = makeController();
    const view = await controller.submitQuery(UNDERSPECIFIED_QUERY);
    expect(view.status).toBe("needs_clarification");
    expect(view.questions.length).toBeGreaterThanOrEqual(1);
    for (const question of view.questions) {
      expect(question.field_path).toBeTruthy();
    }
    const html = renderQuestions(view);
    for (const question of view.questions) {
      expect(html).toContain(`data-field="${question.field_path}"`);
    }
  });

  it("appends the exchange to the transcript", async () => {
    const { controller } = makeController();
    const view = await controller.submitQuery(UNDERSPECIFIED_QUERY);
    expect(view.transcript[0]).toEqual({ speaker: "user", content: UNDERSPECIFIED_QUERY });
    expect(view.transcript[1]?.speaker).toBe("agent");
  });
});

describe("completed session", () => {
  it("renders three cards in rank order", async () => {
    const { controller } = makeController();
    const view = await controller.submitQuery(COMPLETED_QUERY);
    expect(view.status).toBe("done");
    expect(view.cards).toHaveLength(3);
    expect(view.cards.map((c) => c.rank)).toEqual([1, 2, 3]);
  });

  it("card links byte-match the catalog records", async () => {
    const { controller, api } = makeController();
    const view = await controller.submitQuery(COMPLETED_QUERY);
    const { models } = await api.listModels();
    const byId = new Map(models.map((m: ModelRecord) => [m.model_id, m]));
    for (const card of view.cards) {
      const record = byId.get(card.modelId);
      expect(record).toBeDefined();
      expect(card.paperLink).toBe(record?.paper_link);
      expect(card.repository).toBe(record?.repository);
    }
    const html = renderCards(view.cards);
    for (const card of view.cards) {
      expect(html).toContain(`href="${card.paperLink}"`);
      expect(html).toContain(`href="${card.repository}"`);
    }
  });

  it("shows the parsed constraints from the server", async () => {
    const { controller } = makeController();
    const view = await controller.submitQuery(COMPLETED_QUERY);
    expect(view.constraints).toEqual(fixtures.session_completed.response.query);
    const html = renderConstraints(view);
    expect(html).toContain("application");
    expect(html).toContain("modality");
  });
});

describe("what-if re-ranking", () => {
  it("with no overrides equals the session result", async () => {
    const { controller } = makeController();
    const view = await controller.submitQuery(COMPLETED_QUERY);
    const panel = await controller.whatIf({});
    expect(panel.surviving).toEqual(view.survivors);
    expect(sameRanking(panel.cards, view.cards.map((card) => ({
      ...card,
      paperLink: null,
      repository: null,
      modelName: card.modelId,
      bullets: card.bullets,
    })))).toBe(true);
    expect(panel.cards.map((c) => [c.modelId, c.rank])).toEqual(
      view.cards.map((c) => [c.modelId, c.rank]),
    );
  });

  it("raising the performance floor only grows the eliminated set", async () => {
    const { api } = makeController();
    const low = await api.rankPreview(
      fixtures.preview_floor_low.request.query,
      fixtures.preview_floor_low.request.model_ids,
    );
    const high = await api.rankPreview(
      fixtures.preview_floor_high.request.query,
      fixtures.preview_floor_high.request.model_ids,
    );
    const lowIds = new Set(low.filter.eliminated.map((e) => e.model_id));
    const highIds = new Set(high.filter.eliminated.map((e) => e.model_id));
    for (const id of lowIds) {
      expect(highIds.has(id)).toBe(true);
    }
    expect(highIds.size).toBeGreaterThanOrEqual(lowIds.size);
  });

  it("builds the preview query from constraints plus overrides", () => {
    const constraints = { application: "flood mapping", modality: "SAR" };
    const merged = buildPreviewQuery(constraints, {
      min_performance: "accuracy >= 85",
      sensor: "Sentinel-1, Sentinel-2",
    });
    expect(merged.application).toBe("flood mapping");
    expect(merged.min_performance).toEqual({ metric: ["accuracy"], value: [85] });
    expect(merged.sensor).toEqual(["Sentinel-1", "Sentinel-2"]);
  });
});

describe("local validation", () => {
  it("empty query text never reaches the network", async () => {
    const { backend, controller } = makeController();
    const view = await controller.submitQuery("   ");
    expect(view.error).toBeTruthy();
    expect(backend.calls).toHaveLength(0);
  });

  it("unknown override fields are rejected inline without a request", async () => {
    const { backend, controller } = makeController();
    await controller.submitQuery(COMPLETED_QUERY);
    const requestsSoFar = backend.calls.length;
    expect(controller.setOverride("favorite_color", "blue")).toMatch(/Unknown/);
    await expect(controller.whatIf({ favorite_color: "blue" })).rejects.toThrow(/Unknown/);
    expect(backend.calls.length).toBe(requestsSoFar);
  });

  it("malformed min_performance overrides are flagged", () => {
    expect(validateOverride("min_performance", "very accurate")).toMatch(/min_performance/);
    expect(validateOverride("min_performance", "accuracy >= 85")).toBeNull();
    expect(validateQueryText("")).toBeTruthy();
    expect(validateQueryText("flood mapping")).toBeNull();
  });
});

describe("error surfaces", () => {
  it("api errors carry status and detail", async () => {
    const { api } = makeController();
    await expect(api.getModel("Ghost")).rejects.toThrowError(ApiError);
    await expect(api.getModel("Ghost")).rejects.toMatchObject({ status: 404 });
  });

  it("network failure lands in the error state with the view intact", async () => {
    const failing: FetchLike = async () => {
      throw new Error("connection refused");
    };
    const controller = new SessionController(new ApiClient("http://down", failing));
    const view = await controller.submitQuery("flood mapping with SAR");
    expect(view.error).toMatch(/connection refused/);
    expect(view.transcript[0]?.speaker).toBe("user");
  });
});
