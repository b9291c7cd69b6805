"""Interactive-style LF selection over a pre-generated candidate pool.

The pool holds one trained unipolar candidate per (class, descriptor) with
a fitted abstain margin; selection then happens either by an automated
accuracy-threshold rule or through an interactive session where each
pending candidate is surfaced (highest accuracy x coverage first) and a
human records useful / not-useful verdicts.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from . import weak_learners
from .lf_engine import LabelingFunction, LFSet, SynthesisConfig, fit_abstain_margin, generate_candidates
from .label_model import ABSTAIN

DEFAULT_MIN_POOL = 10


class PoolTooSmallError(ValueError):
    """Raised when the feature space cannot supply enough candidates."""


def default_accuracy_threshold(classes: int) -> float:
    return max(0.5, 1.0 / classes) + 0.1


@dataclass
class CandidateStats:
    lf_id: str
    coverage: float
    precision: float
    recall: float
    accuracy: float

    def __post_init__(self):
        for name in ("coverage", "precision", "recall", "accuracy"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    def as_dict(self) -> dict:
        return {
            "coverage": self.coverage,
            "precision": self.precision,
            "recall": self.recall,
            "accuracy": self.accuracy,
        }


def build_pool(bundle, config: SynthesisConfig, min_pool: int = DEFAULT_MIN_POOL) -> LFSet:
    """Train every (class, descriptor) unipolar candidate on the full
    labeled set and fit its abstain margin; no selection happens here."""
    if bundle.m == 0:
        raise ValueError("empty validation labels")
    C = bundle.classes
    Xval = bundle.val_features.values
    yval = bundle.val_labels.values
    descriptors = generate_candidates(bundle, config)

    lfs = []
    for c in range(C):
        ybin = (yval == c).astype(np.int64)
        for kind, subset in descriptors:
            learner = weak_learners.train(
                kind, Xval[:, subset], ybin, 2, list(subset),
                knn_k=config.knn_k, l2=config.l2,
                max_iter=config.logistic_max_iter, tol=config.logistic_tol)
            probas = weak_learners.predict_proba(learner, Xval[:, subset])
            beta = fit_abstain_margin(probas, ybin, config.threshold_weights)
            lf_id = f"iws.c{c}.{kind}.f{'_'.join(map(str, subset))}"
            lfs.append(LabelingFunction(learner, "unipolar", c, beta, lf_id))
    if len(lfs) < min_pool:
        raise PoolTooSmallError(
            f"pool too small: {len(lfs)} candidates < min_pool {min_pool} "
            f"(d={bundle.d} cannot supply enough LFs)")
    return LFSet(lfs, C, config=config.to_json())


def compute_stats(lf: LabelingFunction, bundle) -> CandidateStats:
    """Coverage / precision / recall / accuracy on the labeled set.

    For unipolar LFs, precision and recall are for the target class;
    accuracy runs over covered points only. Everything is 0 when the LF
    abstains everywhere.
    """
    votes = lf.vote(bundle.val_features.values)
    y = bundle.val_labels.values
    covered = votes != ABSTAIN
    cov = float(covered.mean())
    if cov == 0.0:
        return CandidateStats(lf.lf_id, 0.0, 0.0, 0.0, 0.0)
    accuracy = float((votes[covered] == y[covered]).mean())
    if lf.polarity == "unipolar":
        c = lf.target_class
        tp = float(((votes == c) & (y == c)).sum())
        vote_c = float((votes == c).sum())
        gold_c = float((y == c).sum())
        precision = tp / vote_c if vote_c > 0 else 0.0
        recall = tp / gold_c if gold_c > 0 else 0.0
    else:
        from .eval_profiles import score

        precision = score("precision", votes, y, covered)
        recall = score("recall", votes, y, covered)
    return CandidateStats(lf.lf_id, cov, precision, recall, accuracy)


PENDING, USEFUL, NOT_USEFUL = "pending", "useful", "not_useful"


@dataclass
class SessionState:
    pool: LFSet
    stats: Dict[str, CandidateStats]
    mode: str  # automated | interactive
    accuracy_threshold: float
    verdicts: Dict[str, str] = field(default_factory=dict)
    verdict_order: list = field(default_factory=list)
    finalized: bool = False
    warning: Optional[str] = None

    def __post_init__(self):
        if self.mode not in ("automated", "interactive"):
            raise ValueError(f"unknown mode {self.mode!r}")
        for lf in self.pool.lfs:
            self.verdicts.setdefault(lf.lf_id, PENDING)

    @property
    def pending_ids(self) -> list:
        return [i for i, v in self.verdicts.items() if v == PENDING]

    @property
    def decided_count(self) -> int:
        return sum(1 for v in self.verdicts.values() if v != PENDING)


def open_session(bundle, pool: LFSet, mode: str = "interactive",
                 accuracy_threshold: Optional[float] = None) -> SessionState:
    stats = {lf.lf_id: compute_stats(lf, bundle) for lf in pool.lfs}
    t = default_accuracy_threshold(pool.classes) if accuracy_threshold is None \
        else float(accuracy_threshold)
    return SessionState(pool=pool, stats=stats, mode=mode, accuracy_threshold=t)


def session_next(session: SessionState) -> Optional[Tuple[str, CandidateStats]]:
    """Highest-priority pending candidate (descending accuracy x coverage,
    ties toward the lower lf_id), or None when every verdict is in."""
    if session.finalized:
        raise ValueError("session already finalized")
    pending = session.pending_ids
    if not pending:
        return None
    best = min(pending, key=lambda i: (-session.stats[i].accuracy * session.stats[i].coverage, i))
    return best, session.stats[best]


def session_verdict(session: SessionState, lf_id: str, useful: bool) -> SessionState:
    if session.finalized:
        raise ValueError("session already finalized")
    if lf_id not in session.verdicts:
        raise KeyError(f"unknown candidate {lf_id!r}")
    if session.verdicts[lf_id] != PENDING:
        raise ValueError(f"already decided: {lf_id}")
    session.verdicts[lf_id] = USEFUL if useful else NOT_USEFUL
    session.verdict_order.append({"lf_id": lf_id, "useful": bool(useful)})
    return session


def _selection_order(session: SessionState, ids) -> list:
    return sorted(ids, key=lambda i: (-session.stats[i].accuracy, i))


def finalize_session(session: SessionState) -> LFSet:
    """Final LFSet = useful-marked candidates, ordered by descending
    accuracy then id. Empty selections finalize with a warning status."""
    session.finalized = True
    chosen = _selection_order(session, [i for i, v in session.verdicts.items() if v == USEFUL])
    if not chosen:
        session.warning = "empty selection: no candidate marked useful"
    by_id = {lf.lf_id: lf for lf in session.pool.lfs}
    return LFSet([by_id[i] for i in chosen], session.pool.classes,
                 config=session.pool.config)


def run_automated(session: SessionState, bundle=None) -> LFSet:
    """Deterministic selection: useful iff accuracy >= threshold and
    coverage > 0. Records verdicts so the session log mirrors a human run."""
    if session.mode != "automated":
        raise ValueError("run_automated needs an automated-mode session")
    t = session.accuracy_threshold
    for lf_id in list(session.verdicts):
        s = session.stats[lf_id]
        session_verdict(session, lf_id, s.accuracy >= t and s.coverage > 0)
    return finalize_session(session)


def committee_coverage(session: SessionState, bundle) -> float:
    """Fraction of labeled points covered by at least one useful LF."""
    chosen = [lf for lf in session.pool.lfs if session.verdicts[lf.lf_id] == USEFUL]
    if not chosen:
        return 0.0
    X = bundle.val_features.values
    covered = np.zeros(X.shape[0], dtype=bool)
    for lf in chosen:
        covered |= lf.vote(X) != ABSTAIN
    return float(covered.mean())


def replay_session(bundle, pool: LFSet, verdict_log) -> LFSet:
    """Rebuild the final LFSet from a recorded verdict sequence."""
    session = open_session(bundle, pool, mode="interactive")
    for entry in verdict_log:
        session_verdict(session, entry["lf_id"], entry["useful"])
    return finalize_session(session)
