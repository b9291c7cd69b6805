/** Server payload shapes for the vetting session protocol. */

export interface CandidateStats {
  coverage: number;
  precision: number;
  recall: number;
  accuracy: number;
}

export interface LearnerSummary {
  kind: string;
  feature_subset: number[];
  abstain_margin: number;
}

export interface CommitteePreview {
  size: number;
  coverage: number;
}

export interface NextResponse {
  done: boolean;
  decided: number;
  pending: number;
  lf_id?: string;
  stats?: CandidateStats;
  target_class?: number | null;
  learner?: LearnerSummary;
  committee?: CommitteePreview;
}

export interface VerdictEntry {
  lf_id: string;
  useful: boolean;
}

export interface StateResponse {
  mode: string;
  accuracy_threshold: number;
  finalized: boolean;
  warning: string | null;
  decided: number;
  pending: number;
  verdicts: VerdictEntry[];
}

export interface FinalizeResponse {
  lf_set_path: string;
  summary: { selected: number; pool_size: number; warning: string | null };
}
