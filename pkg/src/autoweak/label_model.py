"""Vote aggregation: majority vote and Dawid-Skene EM over labeling-function
votes with abstains, plus coverage accounting and external-vote merging.

Votes are integers in {-1} | {0..C-1}; -1 means the LF abstained. Points
with no non-abstain vote stay uncovered — the fill policy for them is a
separate, explicit step (`apply_fill`).

The EM model factors each LF as P(vote | true) =
P(voted | true) * P(vote=j | voted, true): a per-class vote propensity
next to the usual row-stochastic confusion matrix. Abstention is therefore
informative (class-specialized LFs that abstain off-target carry signal
through the propensity term), while an LF that never abstains reduces
exactly to classic Dawid-Skene and an all-abstain column contributes
exactly nothing.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from ._kernels import ds_estep

ABSTAIN = -1

FILL_POLICIES = ("none", "global_prior_sample", "majority_class")


@dataclass
class VoteMatrix:
    values: np.ndarray  # n x K ints, -1 = abstain
    lf_ids: list
    classes: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64)
        if self.values.ndim != 2 or self.values.shape[1] < 1:
            raise ValueError("vote matrix must be 2-D with K >= 1")
        if len(self.lf_ids) != self.values.shape[1]:
            raise ValueError("lf_ids length must equal vote columns")
        if len(set(self.lf_ids)) != len(self.lf_ids):
            raise ValueError("lf_ids must be unique")
        if self.values.size and (self.values.min() < ABSTAIN or self.values.max() >= self.classes):
            raise ValueError(f"votes must lie in {{-1}} U {{0..{self.classes - 1}}}")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]


@dataclass
class WeakLabelOutput:
    posterior: np.ndarray  # n x C
    hard: np.ndarray  # n ints, -1 where uncovered
    covered: np.ndarray  # n bools
    coverage: float

    def __post_init__(self):
        self.posterior = np.asarray(self.posterior, dtype=np.float64)
        self.hard = np.asarray(self.hard, dtype=np.int64)
        self.covered = np.asarray(self.covered, dtype=bool)
        if not np.array_equal(self.hard == ABSTAIN, ~self.covered):
            raise ValueError("hard must be -1 exactly where covered is false")
        if abs(self.coverage - float(self.covered.mean())) > 1e-12:
            raise ValueError("coverage must equal mean(covered)")


@dataclass
class DawidSkeneModel:
    class_prior: np.ndarray  # length C
    confusion: np.ndarray  # K x C x C, rows P(vote=j | voted, true=c)
    vote_propensity: np.ndarray  # K x C, P(voted | true=c)
    iterations_run: int
    final_log_likelihood: float
    lf_ids: list

    def to_json(self) -> dict:
        return {
            "class_prior": self.class_prior.tolist(),
            "confusion": self.confusion.tolist(),
            "vote_propensity": self.vote_propensity.tolist(),
            "iterations_run": self.iterations_run,
            "final_log_likelihood": self.final_log_likelihood,
            "lf_ids": list(self.lf_ids),
        }

    @classmethod
    def from_json(cls, blob: dict) -> "DawidSkeneModel":
        return cls(
            class_prior=np.asarray(blob["class_prior"], dtype=np.float64),
            confusion=np.asarray(blob["confusion"], dtype=np.float64),
            vote_propensity=np.asarray(blob["vote_propensity"], dtype=np.float64),
            iterations_run=int(blob["iterations_run"]),
            final_log_likelihood=float(blob["final_log_likelihood"]),
            lf_ids=list(blob["lf_ids"]),
        )


def coverage(votes: VoteMatrix) -> float:
    """Fraction of rows with at least one non-abstain vote."""
    return float((votes.values != ABSTAIN).any(axis=1).mean())


def merge_votes(primary: VoteMatrix, external: VoteMatrix) -> VoteMatrix:
    if primary.n != external.n:
        raise ValueError(f"row mismatch: {primary.n} vs {external.n}")
    if primary.classes != external.classes:
        raise ValueError(f"class mismatch: C={primary.classes} vs C={external.classes}")
    ids = [f"primary:{i}" for i in primary.lf_ids] + [f"external:{i}" for i in external.lf_ids]
    return VoteMatrix(np.hstack([primary.values, external.values]), ids, primary.classes)


def _vote_counts(votes: VoteMatrix) -> np.ndarray:
    n, C = votes.n, votes.classes
    counts = np.zeros((n, C), dtype=np.int64)
    for k in range(votes.k):
        col = votes.values[:, k]
        mask = col != ABSTAIN
        np.add.at(counts, (np.nonzero(mask)[0], col[mask]), 1)
    return counts


def majority_vote(votes: VoteMatrix) -> WeakLabelOutput:
    """Per row: argmax vote count (ties toward the lower class index);
    rows with only abstains stay uncovered with a zero posterior."""
    counts = _vote_counts(votes)
    total = counts.sum(axis=1)
    covered = total > 0
    posterior = np.zeros_like(counts, dtype=np.float64)
    posterior[covered] = counts[covered] / total[covered, None]
    hard = np.where(covered, np.argmax(counts, axis=1), ABSTAIN).astype(np.int64)
    return WeakLabelOutput(posterior, hard, covered, float(covered.mean()))


def _m_step(v: np.ndarray, post: np.ndarray, smoothing: float):
    """Prior, confusion, and vote-propensity estimates from soft labels.

    Propensity smoothing shrinks toward the LF's marginal vote rate, so a
    never-abstaining LF gets propensity exactly 1 (classic Dawid-Skene) and
    an all-abstain LF gets exactly 0 for every class.
    """
    n, K = v.shape
    C = post.shape[1]
    mass = post.sum(axis=0)
    prior = (mass + smoothing) / (n + C * smoothing)

    conf = np.empty((K, C, C))
    propensity = np.empty((K, C))
    for k in range(K):
        col = v[:, k]
        voted = col != ABSTAIN
        rate = float(voted.mean())
        voted_mass = post[voted].sum(axis=0) if voted.any() else np.zeros(C)
        denom = mass + smoothing
        with np.errstate(invalid="ignore"):
            propensity[k] = np.where(
                denom > 0, (voted_mass + smoothing * rate) / denom, 0.5)
        counts = np.zeros((C, C))
        for j in range(C):
            rows = col == j
            if rows.any():
                counts[:, j] = post[rows].sum(axis=0)
        row_tot = voted_mass + C * smoothing
        safe = row_tot > 0
        conf[k][safe] = (counts[safe] + smoothing) / row_tot[safe, None]
        conf[k][~safe] = 1.0 / C
    return prior, conf, propensity


def _augmented_tables(prior, conf, propensity, clamp: bool = False):
    """Log tables over the vote alphabet {0..C-1, abstain->C} for the
    E-step kernel.

    During fitting, extreme propensities (exactly 0 or 1) can only pair
    with vote patterns that never index them, so no clamping happens;
    scoring *new* votes can hit those cells, so apply-time calls clamp.
    """
    K, C, _ = conf.shape
    if clamp:
        propensity = np.clip(propensity, 1e-12, 1.0 - 1e-12)
    aug = np.empty((K, C, C + 1))
    with np.errstate(divide="ignore"):
        aug[:, :, :C] = np.log(conf) + np.log(propensity)[:, :, None]
        aug[:, :, C] = np.log(1.0 - propensity)
        log_prior = np.log(prior)
    return log_prior, aug


def _e_step(v: np.ndarray, prior, conf, propensity, clamp: bool = False):
    log_prior, aug = _augmented_tables(prior, conf, propensity, clamp)
    encoded = np.where(v == ABSTAIN, conf.shape[1], v)
    post, row_ll = ds_estep(encoded, log_prior, aug)
    if not np.all(np.isfinite(post)):
        raise ValueError("non-finite likelihood in EM")
    return post, float(row_ll.sum())


def dawid_skene_fit(
    votes: VoteMatrix,
    max_iter: int = 100,
    tol: float = 1e-6,
    smoothing: float = 0.01,
) -> Tuple[DawidSkeneModel, WeakLabelOutput]:
    """EM fit of the factored per-LF vote model.

    Init posteriors come from majority vote (uncovered rows uniform). Each
    M-step re-estimates the class prior, confusion matrices, and vote
    propensities with additive smoothing; the E-step multiplies each LF's
    likelihood — its confusion entry when it voted, its abstain propensity
    otherwise. Stops when the observed-data log-likelihood gain drops
    below `tol` or after `max_iter` iterations. Rows with no votes keep
    covered=False and hard=-1 (their posterior is the all-abstain
    posterior under the fitted model).
    """
    n, K, C = votes.n, votes.k, votes.classes
    v = votes.values
    covered = (v != ABSTAIN).any(axis=1)

    mv = majority_vote(votes)
    post = mv.posterior.copy()
    post[~covered] = 1.0 / C

    prior = np.full(C, 1.0 / C)
    conf = np.full((K, C, C), 1.0 / C)
    propensity = np.full((K, C), 0.5)
    prev_ll = None
    ll = -np.inf
    iterations = 0

    for iterations in range(1, max_iter + 1):
        prior, conf, propensity = _m_step(v, post, smoothing)
        post, ll = _e_step(v, prior, conf, propensity)
        if prev_ll is not None and ll - prev_ll < tol:
            break
        prev_ll = ll

    hard = np.where(covered, np.argmax(post, axis=1), ABSTAIN).astype(np.int64)
    model = DawidSkeneModel(prior, conf, propensity, iterations, ll, list(votes.lf_ids))
    output = WeakLabelOutput(post, hard, covered, float(covered.mean()))
    return model, output


def dawid_skene_apply(model: DawidSkeneModel, votes: VoteMatrix) -> WeakLabelOutput:
    """One E-step of a fitted model over new votes (no re-estimation)."""
    if votes.k != model.confusion.shape[0]:
        raise ValueError("vote columns must match the fitted LF count")
    covered = (votes.values != ABSTAIN).any(axis=1)
    post, _ = _e_step(votes.values, model.class_prior, model.confusion,
                      model.vote_propensity, clamp=True)
    hard = np.where(covered, np.argmax(post, axis=1), ABSTAIN).astype(np.int64)
    return WeakLabelOutput(post, hard, covered, float(covered.mean()))


def apply_fill(
    output: WeakLabelOutput,
    policy: str,
    seed: int = 0,
    class_prior: Optional[np.ndarray] = None,
    majority_class: int = 0,
) -> np.ndarray:
    """Hard labels with uncovered rows filled per policy.

    "none" keeps -1 (uncovered points count as errors downstream);
    "global_prior_sample" draws from `class_prior`; "majority_class" fills
    with the given class.
    """
    if policy not in FILL_POLICIES:
        raise ValueError(f"unknown fill policy {policy!r}")
    hard = output.hard.copy()
    idx = np.nonzero(~output.covered)[0]
    if policy == "none" or idx.size == 0:
        return hard
    if policy == "majority_class":
        hard[idx] = majority_class
        return hard
    if class_prior is None:
        class_prior = np.full(output.posterior.shape[1], 1.0 / output.posterior.shape[1])
    rng = np.random.Generator(np.random.PCG64(seed))
    hard[idx] = rng.choice(len(class_prior), size=idx.size, p=class_prior)
    return hard


def write_weak_labels(path, output: WeakLabelOutput) -> None:
    C = output.posterior.shape[1]
    with Path(path).open("w", encoding="ascii") as fh:
        fh.write("hard,covered," + ",".join(f"p{c}" for c in range(C)) + "\n")
        for h, cov, row in zip(output.hard, output.covered, output.posterior):
            fh.write(f"{int(h)},{int(cov)}," + ",".join(repr(float(p)) for p in row) + "\n")


def read_weak_labels(path) -> WeakLabelOutput:
    with Path(path).open("r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    C = len(header) - 2
    hard, covered, post = [], [], []
    for line in lines[1:]:
        parts = line.split(",")
        hard.append(int(parts[0]))
        covered.append(bool(int(parts[1])))
        post.append([float(p) for p in parts[2:2 + C]])
    covered = np.asarray(covered, dtype=bool)
    return WeakLabelOutput(np.asarray(post), np.asarray(hard), covered, float(covered.mean()))


def write_votes(path, votes: VoteMatrix) -> None:
    """Votes as headered integer CSV plus a sidecar JSON carrying lf_ids
    and the class count (the CSV alone cannot round-trip them)."""
    from . import io_csv

    io_csv.write_int_matrix(path, votes.values)
    meta = {"lf_ids": list(votes.lf_ids), "classes": votes.classes}
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=1), encoding="ascii")


def read_votes(path) -> VoteMatrix:
    from . import io_csv

    values = io_csv.read_int_matrix(path)
    meta = json.loads(Path(str(path) + ".meta.json").read_text(encoding="ascii"))
    return VoteMatrix(values, meta["lf_ids"], int(meta["classes"]))
