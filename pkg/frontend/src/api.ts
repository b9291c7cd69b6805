/** Thin fetch client for the session protocol; token rides in a header. */

import type {
  FinalizeResponse,
  NextResponse,
  StateResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class VettingApi {
  constructor(private base: string = "", private token: string | null = null) {}

  private headers(): Record<string, string> {
    const h: Record<string, string> = { "content-type": "application/json" };
    if (this.token) h["x-auth-token"] = this.token;
    return h;
  }

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.base + path, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      const detail = await response
        .json()
        .then((b) => b.detail ?? response.statusText)
        .catch(() => response.statusText);
      throw new ApiError(response.status, String(detail));
    }
    return (await response.json()) as T;
  }

  createSession(): Promise<{ session_id: string }> {
    return this.call("POST", "/sessions", { mode: "interactive" });
  }

  next(sessionId: string): Promise<NextResponse> {
    return this.call("GET", `/sessions/${sessionId}/next`);
  }

  verdict(sessionId: string, lfId: string, useful: boolean): Promise<unknown> {
    return this.call("POST", `/sessions/${sessionId}/verdict`, {
      lf_id: lfId,
      useful,
    });
  }

  finalize(sessionId: string): Promise<FinalizeResponse> {
    return this.call("POST", `/sessions/${sessionId}/finalize`);
  }

  state(sessionId: string): Promise<StateResponse> {
    return this.call("GET", `/sessions/${sessionId}/state`);
  }
}
