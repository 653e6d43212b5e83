import type { FeedbackBody, SessionView } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    detail: string,
  ) {
    super(detail);
  }
}

/** Thin typed client for the session service.
 *
 * `fetchImpl` is injectable so tests can run against a mock server and the
 * page can be pointed at any host.
 */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const body = await resp.json().catch(() => null);
    if (!resp.ok) {
      const detail =
        body && typeof body.detail === "string"
          ? body.detail
          : `request failed with status ${resp.status}`;
      throw new ApiError(resp.status, detail);
    }
    return body as T;
  }

  getSession(): Promise<SessionView> {
    return this.request<SessionView>("/session");
  }

  submitFeedback(body: FeedbackBody): Promise<SessionView> {
    return this.request<SessionView>("/session/feedback", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }
}
