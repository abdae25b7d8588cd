import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ApiClient", () => {
  it("lists questions with filters in the query string", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ questions: [] }));
    vi.stubGlobal("fetch", fetchMock);
    const api = new ApiClient("http://svc");
    await api.listQuestions({ chapter: "Energy", labeled: false });
    expect(fetchMock).toHaveBeenCalledWith(
      "http://svc/api/questions?chapter=Energy&labeled=false",
      undefined,
    );
  });

  it("puts labels with the expected revision", async () => {
    const state = { selected: ["ME-KE-1"], notes: "", revision: 1, modified: "now" };
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ state }));
    vi.stubGlobal("fetch", fetchMock);
    const api = new ApiClient("http://svc");
    const result = await api.putLabels("q one", ["ME-KE-1"], 0);
    expect(result.revision).toBe(1);
    const [url, init] = fetchMock.mock.calls[0];
    expect(url).toBe("http://svc/api/questions/q%20one/labels");
    expect(init.method).toBe("PUT");
    expect(JSON.parse(init.body)).toEqual({ codes: ["ME-KE-1"], expected_revision: 0 });
  });

  it("maps 409 to a conflict error carrying the server state", async () => {
    const state = { selected: ["ME-KE-2"], notes: "", revision: 3, modified: "now" };
    vi.stubGlobal(
      "fetch",
      vi.fn().mockResolvedValue(
        jsonResponse({ error: "revision_conflict", message: "stale", state }, 409),
      ),
    );
    const api = new ApiClient("http://svc");
    const error = await api.putLabels("q1", ["ME-KE-1"], 0).catch((e) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect(error.kind).toBe("conflict");
    expect(error.serverState).toEqual(state);
  });

  it("maps 404 to not_found", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn().mockResolvedValue(jsonResponse({ error: "not_found", message: "no such id" }, 404)),
    );
    const api = new ApiClient("http://svc");
    const error = await api.getQuestion("missing").catch((e) => e);
    expect(error.kind).toBe("not_found");
  });

  it("maps fetch rejection to a network error", async () => {
    vi.stubGlobal("fetch", vi.fn().mockRejectedValue(new TypeError("fetch failed")));
    const api = new ApiClient("http://svc");
    const error = await api.listQuestions().catch((e) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect(error.kind).toBe("network");
  });

  it("encodes LO search filters", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ results: [] }));
    vi.stubGlobal("fetch", fetchMock);
    const api = new ApiClient("");
    await api.searchLOs("KE", { chapter: "Energy", category: "Special Cases" });
    expect(fetchMock.mock.calls[0][0]).toBe(
      "/api/los?query=KE&chapter=Energy&category=Special+Cases",
    );
  });
});
