/** HTTP client for the decision-support service. Pure data in, data out:
 * no view logic, no retry magic. Server errors become ApiError (code +
 * message + optional pipeline stage); transport failures become
 * NetworkError so the UI can show an offline banner. */

import type { AskOptions, AskResponse, HealthResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
    public readonly stage?: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class NetworkError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "NetworkError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  async health(): Promise<HealthResponse> {
    return this.request<HealthResponse>("GET", "/health");
  }

  async ask(question: string, options?: AskOptions): Promise<AskResponse> {
    const body: Record<string, unknown> = { question };
    if (options && Object.keys(options).length > 0) body.options = options;
    return this.request<AskResponse>("POST", "/v1/ask", body);
  }

  async evalQuery(query: string, universe?: string[]): Promise<{ entities: string[] }> {
    const body: Record<string, unknown> = { query };
    if (universe) body.universe = universe;
    return this.request<{ entities: string[] }>("POST", "/v1/eval", body);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, {
        method,
        headers: body !== undefined ? { "Content-Type": "application/json" } : {},
        body: body !== undefined ? JSON.stringify(body) : undefined,
      });
    } catch (err) {
      throw new NetworkError(`service unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      let code = "http_error";
      let message = `${response.status} ${response.statusText}`;
      let stage: string | undefined;
      try {
        const payload = (await response.json()) as {
          error?: { code?: string; message?: string; stage?: string };
        };
        if (payload.error) {
          code = payload.error.code ?? code;
          message = payload.error.message ?? message;
          stage = payload.error.stage;
        }
      } catch {
        // non-JSON error body: keep the status line
      }
      throw new ApiError(response.status, code, message, stage);
    }
    return (await response.json()) as T;
  }
}
