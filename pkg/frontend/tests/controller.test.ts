/**
 * Controller contracts without a DOM: no optimistic updates, offline
 * verdicts leave the candidate unchanged, and a 409 double-submit refetches
 * server state.
 */

import { describe, expect, it } from "vitest";

import { ApiError } from "../src/api.js";
import { SessionController } from "../src/app.js";
import type { NextResponse, StateResponse } from "../src/types.js";

function candidate(lfId: string, pending: number, decided: number): NextResponse {
  return {
    done: false,
    decided,
    pending,
    lf_id: lfId,
    stats: { coverage: 0.4, precision: 0.9, recall: 0.5, accuracy: 0.88 },
    target_class: 0,
    learner: { kind: "stump", feature_subset: [2], abstain_margin: 0.1 },
    committee: { size: decided, coverage: 0.2 * decided },
  };
}

function emptyState(): StateResponse {
  return {
    mode: "interactive",
    accuracy_threshold: 0.6,
    finalized: false,
    warning: null,
    decided: 0,
    pending: 2,
    verdicts: [],
  };
}

class FakeApi {
  nextQueue: NextResponse[] = [];
  stateQueue: StateResponse[] = [];
  verdictError: Error | null = null;
  verdictCalls: { lfId: string; useful: boolean }[] = [];

  async next(): Promise<NextResponse> {
    if (this.nextQueue.length > 1) return this.nextQueue.shift()!;
    return this.nextQueue[0];
  }

  async state(): Promise<StateResponse> {
    if (this.stateQueue.length > 1) return this.stateQueue.shift()!;
    return this.stateQueue[0];
  }

  async verdict(_sid: string, lfId: string, useful: boolean): Promise<unknown> {
    if (this.verdictError) throw this.verdictError;
    this.verdictCalls.push({ lfId, useful });
    return { ok: true };
  }

  async finalize(): Promise<never> {
    throw new Error("not under test");
  }

  async createSession(): Promise<{ session_id: string }> {
    return { session_id: "s1" };
  }
}

function fakeRoot(): { innerHTML: string; querySelector: () => null } {
  return { innerHTML: "", querySelector: () => null };
}

function make(api: FakeApi) {
  const root = fakeRoot();
  const controller = new SessionController(
    api as never,
    root as unknown as HTMLElement,
    "s1"
  );
  return { controller, root };
}

describe("session controller", () => {
  it("renders only from server state (no optimistic advance)", async () => {
    const api = new FakeApi();
    api.nextQueue = [candidate("lf.a", 2, 0), candidate("lf.b", 1, 1)];
    api.stateQueue = [emptyState()];
    const { controller, root } = make(api);
    await controller.refresh();
    expect(root.innerHTML).toContain("lf.a");
    await controller.submit(true);
    expect(api.verdictCalls).toEqual([{ lfId: "lf.a", useful: true }]);
    expect(root.innerHTML).toContain("lf.b"); // advanced by the refetch only
  });

  it("offline submit records nothing and re-prompts the same candidate", async () => {
    const api = new FakeApi();
    api.nextQueue = [candidate("lf.a", 2, 0)];
    api.stateQueue = [emptyState()];
    const { controller, root } = make(api);
    await controller.refresh();

    api.verdictError = new TypeError("fetch failed");
    await controller.submit(false);
    expect(api.verdictCalls).toEqual([]);
    expect(root.innerHTML).toContain("server unreachable");

    api.verdictError = null; // reconnect: server still serves the same candidate
    await controller.refresh();
    expect(root.innerHTML).toContain("lf.a");
  });

  it("double-submit 409 refetches instead of recording locally", async () => {
    const api = new FakeApi();
    api.nextQueue = [candidate("lf.a", 2, 0), candidate("lf.b", 1, 1)];
    api.stateQueue = [emptyState()];
    const { controller, root } = make(api);
    await controller.refresh();

    api.verdictError = new ApiError(409, "already decided: lf.a");
    await controller.submit(true);
    expect(api.verdictCalls).toEqual([]);
    expect(root.innerHTML).toContain("lf.b"); // fresh server state took over
  });

  it("ignores keys while a request is in flight", async () => {
    const api = new FakeApi();
    api.nextQueue = [candidate("lf.a", 1, 0)];
    api.stateQueue = [emptyState()];
    const { controller } = make(api);
    await controller.refresh();
    // simulate in-flight by starting a submit and immediately keying again
    const pending = controller.submit(true);
    controller.handleKey("u");
    await pending;
    expect(api.verdictCalls.length).toBe(1);
  });
});
