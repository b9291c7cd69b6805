/**
 * Session controller: owns a SessionSnapshot, refreshes it from server
 * responses only (optimistic updates are deliberately impossible — the
 * snapshot is written exclusively in `refresh`), and re-renders after
 * every change. One request in flight at a time.
 */

import { ApiError, VettingApi } from "./api.js";
import { renderView } from "./render.js";
import { deriveView, SessionSnapshot } from "./viewModel.js";

export class SessionController {
  private snap: SessionSnapshot;

  constructor(
    private api: VettingApi,
    private root: HTMLElement,
    sessionId: string
  ) {
    this.snap = {
      sessionId,
      next: null,
      state: null,
      finalize: null,
      inFlight: false,
      connectionError: null,
    };
  }

  static async start(api: VettingApi, root: HTMLElement): Promise<SessionController> {
    const { session_id } = await api.createSession();
    const controller = new SessionController(api, root, session_id);
    await controller.refresh();
    return controller;
  }

  private render(): void {
    this.root.innerHTML = renderView(deriveView(this.snap));
    this.bind();
  }

  private bind(): void {
    const accept = this.root.querySelector<HTMLButtonElement>("#accept");
    const reject = this.root.querySelector<HTMLButtonElement>("#reject");
    const retry = this.root.querySelector<HTMLButtonElement>("#retry");
    const finalize = this.root.querySelector<HTMLButtonElement>("#finalize");
    accept?.addEventListener("click", () => void this.submit(true));
    reject?.addEventListener("click", () => void this.submit(false));
    retry?.addEventListener("click", () => void this.refresh());
    finalize?.addEventListener("click", () => void this.finalize());
  }

  handleKey(key: string): void {
    if (this.snap.inFlight) return;
    if (key === "u") void this.submit(true);
    if (key === "x" || key === "n") void this.submit(false);
  }

  async refresh(): Promise<void> {
    this.snap.inFlight = true;
    this.render();
    try {
      const [next, state] = await Promise.all([
        this.api.next(this.snap.sessionId),
        this.api.state(this.snap.sessionId),
      ]);
      this.snap = { ...this.snap, next, state, connectionError: null };
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // finalized elsewhere; show the terminal state
        const state = await this.api.state(this.snap.sessionId).catch(() => null);
        this.snap = {
          ...this.snap,
          state,
          next: { done: true, decided: state?.decided ?? 0, pending: 0 },
        };
      } else {
        this.snap.connectionError = String(err);
      }
    } finally {
      this.snap.inFlight = false;
      this.render();
    }
  }

  async submit(useful: boolean): Promise<void> {
    const view = deriveView(this.snap);
    if (view.kind !== "candidate" || !view.controlsEnabled) return;
    this.snap.inFlight = true;
    this.render();
    try {
      await this.api.verdict(this.snap.sessionId, view.lfId, useful);
    } catch (err) {
      if (!(err instanceof ApiError) || err.status !== 409) {
        // network failure: nothing was recorded locally; re-prompt as-is
        this.snap.connectionError = String(err);
        this.snap.inFlight = false;
        this.render();
        return;
      }
      this.toast("already decided");
    }
    this.snap.inFlight = false;
    await this.refresh(); // view advances only with fresh server state
  }

  async finalize(): Promise<void> {
    this.snap.inFlight = true;
    this.render();
    try {
      this.snap.finalize = await this.api.finalize(this.snap.sessionId);
      this.snap.state = await this.api.state(this.snap.sessionId);
    } catch (err) {
      this.snap.connectionError = String(err);
    } finally {
      this.snap.inFlight = false;
      this.render();
    }
  }

  private toast(message: string): void {
    if (typeof document === "undefined") return;
    const node = document.createElement("div");
    node.className = "toast";
    node.textContent = message;
    document.body.appendChild(node);
    setTimeout(() => node.remove(), 2500);
  }
}

export async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) return;
  const token = new URLSearchParams(window.location.search).get("token");
  const api = new VettingApi("", token);
  try {
    const controller = await SessionController.start(api, root);
    document.addEventListener("keydown", (ev) => controller.handleKey(ev.key));
  } catch (err) {
    root.innerHTML = renderView({
      kind: "error",
      sessionId: "-",
      message: String(err),
      retryEnabled: true,
    });
    root
      .querySelector("#retry")
      ?.addEventListener("click", () => void boot());
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void boot();
}
