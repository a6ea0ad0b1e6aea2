import {
  AnswerResult,
  ApiErrorBody,
  BeliefPayload,
  QueryPayload,
  SessionCreated,
} from "./types.js";

/** A non-2xx response, carrying the server's machine-readable error code. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  // fetchImpl is injectable so tests can run the protocol in memory.
  constructor(base = "", fetchImpl?: FetchLike) {
    this.base = base.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      body = null;
    }
    if (!response.ok) {
      const err = (body ?? {}) as Partial<ApiErrorBody>;
      throw new ApiError(
        response.status,
        err.code ?? "http_error",
        err.message ?? `request failed with status ${response.status}`,
      );
    }
    return body as T;
  }

  private post<T>(path: string, payload: object): Promise<T> {
    return this.request(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  createSession(payload: object): Promise<SessionCreated> {
    return this.post("/sessions", payload);
  }

  getQuery(sessionId: string): Promise<QueryPayload> {
    return this.request(`/sessions/${sessionId}/query`);
  }

  postAnswer(sessionId: string, choice: "A" | "B", round: number): Promise<AnswerResult> {
    return this.post(`/sessions/${sessionId}/answer`, { choice, round });
  }

  getHistory(sessionId: string): Promise<{ rounds: unknown[] }> {
    return this.request(`/sessions/${sessionId}/history`);
  }

  getBelief(sessionId: string): Promise<BeliefPayload> {
    return this.request(`/sessions/${sessionId}/belief`);
  }
}
