/**
 * Pure derivation of the screen state from server responses.
 *
 * The view model is a function of (last /next response, last /state
 * response, in-flight flag, connection error) and nothing else: no stat is
 * computed client-side, and replaying the same response sequence yields
 * identical view models.
 */

import type {
  FinalizeResponse,
  NextResponse,
  StateResponse,
  VerdictEntry,
} from "./types.js";

export interface SessionSnapshot {
  sessionId: string;
  next: NextResponse | null;
  state: StateResponse | null;
  finalize: FinalizeResponse | null;
  inFlight: boolean;
  connectionError: string | null;
}

export interface StatRow {
  label: string;
  value: string; // formatted to exactly 3 decimals
}

export type VettingView =
  | {
      kind: "candidate";
      sessionId: string;
      lfId: string;
      targetClass: number | null;
      learnerSummary: string;
      stats: StatRow[];
      decided: number;
      pending: number;
      committeeSize: number;
      committeeCoverage: string;
      history: VerdictEntry[];
      controlsEnabled: boolean;
    }
  | {
      kind: "finalize";
      sessionId: string;
      decided: number;
      selected: number | null;
      warning: string | null;
      history: VerdictEntry[];
      finalized: boolean;
    }
  | { kind: "error"; sessionId: string; message: string; retryEnabled: boolean }
  | { kind: "loading"; sessionId: string };

export function formatStat(value: number): string {
  return value.toFixed(3);
}

export function deriveView(snap: SessionSnapshot): VettingView {
  if (snap.connectionError !== null) {
    return {
      kind: "error",
      sessionId: snap.sessionId,
      message: snap.connectionError,
      retryEnabled: !snap.inFlight,
    };
  }
  if (snap.next === null) {
    return { kind: "loading", sessionId: snap.sessionId };
  }
  const history = snap.state ? snap.state.verdicts : [];
  if (snap.next.done || (snap.state && snap.state.finalized)) {
    return {
      kind: "finalize",
      sessionId: snap.sessionId,
      decided: snap.next.decided,
      selected: snap.finalize ? snap.finalize.summary.selected : null,
      warning: snap.finalize
        ? snap.finalize.summary.warning
        : snap.state?.warning ?? null,
      history,
      finalized: snap.finalize !== null || (snap.state?.finalized ?? false),
    };
  }
  const stats = snap.next.stats!;
  const learner = snap.next.learner!;
  return {
    kind: "candidate",
    sessionId: snap.sessionId,
    lfId: snap.next.lf_id!,
    targetClass: snap.next.target_class ?? null,
    learnerSummary: `${learner.kind} on features [${learner.feature_subset.join(
      ", "
    )}], abstain margin ${formatStat(learner.abstain_margin)}`,
    stats: [
      { label: "coverage", value: formatStat(stats.coverage) },
      { label: "precision", value: formatStat(stats.precision) },
      { label: "recall", value: formatStat(stats.recall) },
      { label: "accuracy", value: formatStat(stats.accuracy) },
    ],
    decided: snap.next.decided,
    pending: snap.next.pending,
    committeeSize: snap.next.committee ? snap.next.committee.size : 0,
    committeeCoverage: formatStat(
      snap.next.committee ? snap.next.committee.coverage : 0
    ),
    history,
    controlsEnabled: !snap.inFlight,
  };
}
