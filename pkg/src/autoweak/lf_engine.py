"""Labeling-function synthesis and selection.

The synthesis loop trains every candidate weak learner on the still-active
part of the labeled validation set, scores candidates on the full labeled
set, commits the best one, fits its abstain margin, then deactivates the
labeled points the committed LF already gets right — forcing later rounds
toward the residual. It stops at the per-class LF budget, when the best
candidate is within epsilon of chance, or when no active points remain.

Unipolar mode runs the loop once per class on c-vs-rest labels (the LF
votes its target class or abstains); multipolar mode runs one loop with
natively multiclass learners.
"""

import json
import math
import warnings
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from . import weak_learners
from .eval_profiles import METRICS, score, weighted_score
from .label_model import ABSTAIN, VoteMatrix

BETA_GRID = tuple(round(0.05 * i, 2) for i in range(10))  # 0.00 .. 0.45


@dataclass
class MetricWeights:
    """Convex combination over the 9 selection metrics (METRICS order)."""

    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (len(METRICS),):
            raise ValueError(f"need {len(METRICS)} weights")
        if self.weights.min() < 0 or abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be nonnegative and sum to 1")

    @classmethod
    def one_hot(cls, metric: str) -> "MetricWeights":
        w = np.zeros(len(METRICS))
        w[METRICS.index(metric)] = 1.0
        return cls(w)

    def as_dict(self) -> dict:
        return {m: float(w) for m, w in zip(METRICS, self.weights)}


@dataclass
class SynthesisConfig:
    cardinality: int = 1
    max_candidates: int = 1000
    learner_kinds: Tuple[str, ...] = ("stump", "logistic")
    selection_weights: MetricWeights = field(default_factory=lambda: MetricWeights.one_hot("micro_f1"))
    threshold_weights: MetricWeights = field(default_factory=lambda: MetricWeights.one_hot("weighted_f1"))
    max_lfs_per_class: int = 3
    min_improvement: float = 0.02
    seed: int = 0
    l2: float = 1e-3
    logistic_max_iter: int = 500
    logistic_tol: float = 1e-6
    knn_k: int = 5

    def __post_init__(self):
        if self.cardinality < 1:
            raise ValueError("cardinality must be >= 1")
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be >= 1")
        kinds = tuple(k for k in weak_learners.KINDS if k in self.learner_kinds)
        if not kinds or set(self.learner_kinds) - set(weak_learners.KINDS):
            raise ValueError(f"learner_kinds must be a nonempty subset of {weak_learners.KINDS}")
        self.learner_kinds = kinds
        if isinstance(self.selection_weights, (list, np.ndarray)):
            self.selection_weights = MetricWeights(self.selection_weights)
        if isinstance(self.threshold_weights, (list, np.ndarray)):
            self.threshold_weights = MetricWeights(self.threshold_weights)

    def to_json(self) -> dict:
        blob = asdict(self)
        blob["selection_weights"] = self.selection_weights.weights.tolist()
        blob["threshold_weights"] = self.threshold_weights.weights.tolist()
        blob["learner_kinds"] = list(self.learner_kinds)
        return blob

    @classmethod
    def from_json(cls, blob: dict) -> "SynthesisConfig":
        blob = dict(blob)
        blob["selection_weights"] = MetricWeights(blob["selection_weights"])
        blob["threshold_weights"] = MetricWeights(blob["threshold_weights"])
        blob["learner_kinds"] = tuple(blob["learner_kinds"])
        return cls(**blob)


@dataclass
class LabelingFunction:
    learner: weak_learners.WeakLearner
    polarity: str  # unipolar | multipolar
    target_class: Optional[int]
    abstain_margin: float  # beta in [0, 0.5)
    lf_id: str

    def __post_init__(self):
        if self.polarity not in ("unipolar", "multipolar"):
            raise ValueError(f"unknown polarity {self.polarity!r}")
        if self.polarity == "unipolar" and self.target_class is None:
            raise ValueError("unipolar LFs need a target class")
        if not (0.0 <= self.abstain_margin < 0.5):
            raise ValueError("abstain margin must lie in [0, 0.5)")

    def vote(self, feature_values: np.ndarray) -> np.ndarray:
        """Votes on full-width features; -1 where the LF abstains."""
        X = np.asarray(feature_values, dtype=np.float64)
        subset = self.learner.feature_subset
        if X.ndim != 2 or (subset and subset[-1] >= X.shape[1]):
            raise ValueError("dimension mismatch: features too narrow for this LF")
        probas = weak_learners.predict_proba(self.learner, X[:, subset])
        top = probas.argmax(axis=1)
        confident = probas.max(axis=1) >= (1.0 / self.learner.classes) + self.abstain_margin
        if self.polarity == "unipolar":
            # binarized learner: class 1 is the target
            return np.where(confident & (top == 1), self.target_class, ABSTAIN).astype(np.int64)
        return np.where(confident, top, ABSTAIN).astype(np.int64)

    def to_json(self) -> dict:
        return {
            "id": self.lf_id,
            "polarity": self.polarity,
            "target_class": self.target_class,
            "abstain_margin": self.abstain_margin,
            "learner": self.learner.to_json(),
        }

    @classmethod
    def from_json(cls, blob: dict) -> "LabelingFunction":
        return cls(
            learner=weak_learners.WeakLearner.from_json(blob["learner"]),
            polarity=blob["polarity"],
            target_class=blob["target_class"],
            abstain_margin=float(blob["abstain_margin"]),
            lf_id=blob["id"],
        )


@dataclass
class LFSet:
    lfs: List[LabelingFunction]
    classes: int
    synthesis_log: list = field(default_factory=list)
    config: Optional[dict] = None

    def __post_init__(self):
        ids = [lf.lf_id for lf in self.lfs]
        if len(set(ids)) != len(ids):
            raise ValueError("LF ids must be unique")

    def to_json(self) -> dict:
        return {
            "classes": self.classes,
            "config": self.config,
            "lfs": [lf.to_json() for lf in self.lfs],
            "synthesis_log": self.synthesis_log,
        }

    @classmethod
    def from_json(cls, blob: dict) -> "LFSet":
        return cls(
            lfs=[LabelingFunction.from_json(b) for b in blob["lfs"]],
            classes=int(blob["classes"]),
            synthesis_log=list(blob.get("synthesis_log", [])),
            config=blob.get("config"),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1, sort_keys=True),
                              encoding="ascii")

    @classmethod
    def load(cls, path) -> "LFSet":
        return cls.from_json(json.loads(Path(path).read_text(encoding="ascii")))


def generate_candidates(bundle, config: SynthesisConfig) -> List[Tuple[str, tuple]]:
    """Candidate descriptors (learner kind, feature subset).

    Enumerates all cardinality-D subsets in lexicographic order when the
    full candidate count fits under max_candidates; otherwise samples
    distinct subsets uniformly with the run seed (each paired with every
    kind, keeping the total under the cap).
    """
    d = bundle.d if hasattr(bundle, "d") else int(bundle)
    D = config.cardinality
    if D > d:
        raise ValueError(f"cardinality {D} exceeds feature count {d}")
    kinds = config.learner_kinds
    n_subsets = math.comb(d, D)
    if n_subsets * len(kinds) <= config.max_candidates:
        subsets = [tuple(c) for c in _all_combinations(d, D)]
    else:
        target = min(max(1, config.max_candidates // len(kinds)), n_subsets)
        subsets = _sample_subsets(d, D, target, config.seed)
    descriptors = [(kind, subset) for subset in subsets for kind in kinds]
    return descriptors[: config.max_candidates] if len(descriptors) > config.max_candidates \
        else descriptors


def _all_combinations(d, D):
    import itertools

    return itertools.combinations(range(d), D)


def _sample_subsets(d: int, D: int, count: int, seed: int) -> List[tuple]:
    rng = np.random.Generator(np.random.PCG64(seed))
    n_subsets = math.comb(d, D)
    if n_subsets <= max(200000, 10 * count):
        pool = [tuple(c) for c in _all_combinations(d, D)]
        idx = rng.choice(n_subsets, size=count, replace=False)
        return sorted(pool[i] for i in idx)
    chosen = set()
    while len(chosen) < count:  # collisions are vanishingly rare at this size
        chosen.add(tuple(sorted(rng.choice(d, size=D, replace=False).tolist())))
    return sorted(chosen)


def sample_metric_weights(seed: int, count: int) -> List[MetricWeights]:
    """Uniform draws on the 9-metric simplex (normalized unit-rate
    exponentials), deterministic for a fixed seed."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    draws = []
    for _ in range(count):
        e = rng.exponential(1.0, size=len(METRICS))
        draws.append(MetricWeights(e / e.sum()))
    return draws


def fit_abstain_margin(probas, y, threshold_weights: MetricWeights) -> float:
    """Grid-search the abstain margin beta over {0.00, 0.05, ..., 0.45}.

    A point abstains when its max probability falls below 1/C + beta; the
    margin maximizing the weighted metric over still-covered points wins,
    with ties broken toward smaller beta (higher coverage).
    """
    P = np.asarray(probas, dtype=np.float64)
    yv = np.asarray(y, dtype=np.int64)
    C = P.shape[1]
    preds = P.argmax(axis=1)
    maxp = P.max(axis=1)
    best_beta, best_score = 0.0, -np.inf
    for beta in BETA_GRID:
        covered = maxp >= (1.0 / C) + beta
        s = weighted_score(threshold_weights.weights, preds, yv, covered) if covered.any() else 0.0
        if s > best_score:
            best_beta, best_score = beta, s
    return float(best_beta)


def _positive_class_score(weights: np.ndarray, preds, gold) -> float:
    """Selection score for one-vs-all candidates: the asymmetric metrics
    (F1, precision, recall, Jaccard) target the positive class, so a
    candidate that never predicts the target scores 0 on them."""
    preds = np.asarray(preds, dtype=np.int64)
    gold = np.asarray(gold, dtype=np.int64)
    tp = float(((preds == 1) & (gold == 1)).sum())
    fp = float(((preds == 1) & (gold == 0)).sum())
    fn = float(((preds == 0) & (gold == 1)).sum())
    prec = tp / (tp + fp) if tp + fp > 0 else 0.0
    rec = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
    jac = tp / (tp + fp + fn) if tp + fp + fn > 0 else 0.0
    positive = {"micro_f1": f1, "precision": prec, "recall": rec, "jaccard": jac}
    out = 0.0
    for w, metric in zip(weights, METRICS):
        if w > 0:
            out += w * positive.get(metric, score(metric, preds, gold))
    return float(out)


def _train_candidate(kind, subset, X, y, n_classes, config: SynthesisConfig):
    return weak_learners.train(
        kind, X[:, subset], y, n_classes, list(subset),
        knn_k=config.knn_k, l2=config.l2,
        max_iter=config.logistic_max_iter, tol=config.logistic_tol)


def _synthesis_loop(Xval, labels, n_classes, chance, target, descriptors,
                    config: SynthesisConfig, id_prefix: str, lfs_out, log_out):
    m = labels.shape[0]
    active = np.ones(m, dtype=bool)
    committed = 0
    positive_mode = target is not None
    while committed < config.max_lfs_per_class and active.any():
        best = None  # (score, idx, learner, probas)
        trained_any = False
        for idx, (kind, subset) in enumerate(descriptors):
            try:
                learner = _train_candidate(kind, subset, Xval[active], labels[active],
                                           n_classes, config)
            except ValueError:
                continue
            trained_any = True
            probas = weak_learners.predict_proba(learner, Xval[:, subset])
            preds = probas.argmax(axis=1)
            if positive_mode:
                s = _positive_class_score(config.selection_weights.weights, preds, labels)
            else:
                s = weighted_score(config.selection_weights.weights, preds, labels)
            if best is None or s > best[0]:
                best = (s, idx, learner, probas)
        if not trained_any:
            raise ValueError("no candidate trainable")
        s, idx, learner, probas = best
        kind, subset = descriptors[idx]
        # a perfect score always commits, even when the chance level itself
        # is perfect (single-class labeled sets: the constant vote is right
        # everywhere and still adds coverage)
        should_commit = s > chance + config.min_improvement or s >= 1.0
        entry = {
            "iteration": committed,
            "target_class": target,
            "candidates": len(descriptors),
            "active_points": int(active.sum()),
            "best_candidate": f"{kind}.f{'_'.join(map(str, subset))}",
            "score": float(s),
            "committed": should_commit,
        }
        if not should_commit:
            entry["chosen"] = None
            log_out.append(entry)
            break
        beta = fit_abstain_margin(probas, labels, config.threshold_weights)
        lf_id = f"{id_prefix}.i{committed}.{kind}.f{'_'.join(map(str, subset))}"
        lf = LabelingFunction(
            learner=learner,
            polarity="unipolar" if positive_mode else "multipolar",
            target_class=target,
            abstain_margin=beta,
            lf_id=lf_id,
        )
        entry["chosen"] = lf_id
        entry["abstain_margin"] = beta
        log_out.append(entry)
        lfs_out.append(lf)
        committed += 1

        votes = lf.vote(Xval)
        if positive_mode:
            solved = (votes == target) & (labels == 1)
        else:
            solved = (votes != ABSTAIN) & (votes == labels)
        active &= ~solved


def snuba_synthesize(bundle, config: SynthesisConfig, mode: str = "unipolar") -> LFSet:
    """Iterative LF synthesis over the labeled validation set.

    mode="unipolar" runs one c-vs-all loop per class; mode="multipolar"
    runs a single loop with multiclass learners (budget: max_lfs_per_class
    total). Deterministic for a fixed (bundle, config, seed).
    """
    if mode not in ("unipolar", "multipolar"):
        raise ValueError(f"unknown mode {mode!r}")
    if bundle.m == 0:
        raise ValueError("empty validation labels")
    C = bundle.classes
    if bundle.m < C:
        warnings.warn(f"only {bundle.m} labeled examples for {C} classes", stacklevel=2)
    Xval = bundle.val_features.values
    yval = bundle.val_labels.values
    descriptors = generate_candidates(bundle, config)

    lfs: List[LabelingFunction] = []
    log: list = []
    if mode == "unipolar":
        for c in range(C):
            ybin = (yval == c).astype(np.int64)
            chance = float(ybin.mean())  # target-class prior
            _synthesis_loop(Xval, ybin, 2, chance, c, descriptors, config,
                            f"snuba_u.c{c}", lfs, log)
    else:
        _synthesis_loop(Xval, yval, C, 1.0 / C, None, descriptors, config,
                        "snuba_m", lfs, log)
    return LFSet(lfs=lfs, classes=C, synthesis_log=log, config=config.to_json())


def apply_lfset(lfset: LFSet, features) -> VoteMatrix:
    """Vote matrix with one column per LF; -1 encodes abstain."""
    values = features.values if hasattr(features, "values") else np.asarray(features)
    if not lfset.lfs:
        raise ValueError("empty LF set")
    cols = [lf.vote(values) for lf in lfset.lfs]
    return VoteMatrix(np.stack(cols, axis=1), [lf.lf_id for lf in lfset.lfs], lfset.classes)
