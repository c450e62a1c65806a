import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, NetworkError } from "../../src/api.js";
import { PPE_RESPONSE, jsonResponse } from "./fixtures.js";

describe("ApiClient", () => {
  it("posts question and options to /v1/ask", async () => {
    const calls: { url: string; init?: RequestInit }[] = [];
    const client = new ApiClient("http://svc:8011/", async (url, init) => {
      calls.push({ url, init });
      return jsonResponse(PPE_RESPONSE);
    });
    const resp = await client.ask("what now?", { history: [["q", "a"]] });
    expect(resp.answer).toBe(PPE_RESPONSE.answer);
    expect(calls).toHaveLength(1);
    expect(calls[0]!.url).toBe("http://svc:8011/v1/ask");
    const body = JSON.parse(String(calls[0]!.init?.body));
    expect(body.question).toBe("what now?");
    expect(body.options.history).toEqual([["q", "a"]]);
  });

  it("maps server errors onto ApiError with code and stage", async () => {
    const client = new ApiClient("http://svc", async () =>
      jsonResponse({ error: { code: "kb_not_loaded", message: "no knowledge base loaded" } }, 503));
    const err = await client.ask("q").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(503);
    expect(err.code).toBe("kb_not_loaded");
  });

  it("keeps the status line when the error body is not JSON", async () => {
    const client = new ApiClient("http://svc", async () =>
      new Response("<html>bad gateway</html>", { status: 502, statusText: "Bad Gateway" }));
    const err = await client.ask("q").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.code).toBe("http_error");
    expect(err.message).toContain("502");
  });

  it("wraps transport failures in NetworkError", async () => {
    const client = new ApiClient("http://svc", async () => {
      throw new TypeError("fetch failed");
    });
    const err = await client.health().catch((e) => e);
    expect(err).toBeInstanceOf(NetworkError);
  });
});
