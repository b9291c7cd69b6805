"""The three base hypothesis families labeling functions are built from:
decision stumps, multinomial logistic regression, and k-nearest neighbors.

Every trainer is deterministic for fixed inputs: the stump scan has
explicit tie rules, logistic descent starts from zero weights, and kNN
breaks distance ties toward the lower stored index. `predict_proba` rows
are proper distributions.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._kernels import stump_scan

KINDS = ("stump", "logistic", "knn")


def _as_labels(y, n_classes: Optional[int] = None):
    if hasattr(y, "values") and hasattr(y, "classes"):
        return np.asarray(y.values, dtype=np.int64), int(y.classes)
    arr = np.asarray(y, dtype=np.int64)
    if n_classes is None:
        raise ValueError("n_classes required when y is a plain array")
    return arr, int(n_classes)


@dataclass
class WeakLearner:
    kind: str
    feature_subset: list  # absolute column indices, strictly increasing
    classes: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}")
        subset = list(self.feature_subset)
        if any(b <= a for a, b in zip(subset, subset[1:])):
            raise ValueError("feature_subset must be strictly increasing")
        self.feature_subset = subset

    def to_json(self) -> dict:
        params = {k: v.tolist() if isinstance(v, np.ndarray) else v
                  for k, v in self.params.items()}
        return {
            "kind": self.kind,
            "feature_subset": self.feature_subset,
            "classes": self.classes,
            "params": params,
        }

    @classmethod
    def from_json(cls, blob: dict) -> "WeakLearner":
        params = dict(blob["params"])
        if blob["kind"] == "logistic":
            params["weights"] = np.asarray(params["weights"], dtype=np.float64)
        if blob["kind"] == "knn":
            params["points"] = np.asarray(params["points"], dtype=np.float64)
            params["labels"] = np.asarray(params["labels"], dtype=np.int64)
        return cls(blob["kind"], list(blob["feature_subset"]), int(blob["classes"]), params)


def train_stump(X, y, n_classes: Optional[int] = None,
                feature_subset: Optional[list] = None) -> WeakLearner:
    """Axis-aligned decision stump over the given columns.

    Scans every column of X with the threshold kernel and keeps the best
    (ties: earlier axis, then lower threshold, then lower leaf class).
    Leaf votes are the per-side majority classes.
    """
    X = np.asarray(X, dtype=np.float64)
    yv, C = _as_labels(y, n_classes)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("empty input")
    best = None
    for axis in range(X.shape[1]):
        correct, threshold, left, right = stump_scan(X[:, axis], yv, C)
        if best is None or correct > best[0]:
            best = (correct, axis, threshold, left, right)
    correct, axis, threshold, left, right = best
    subset = list(feature_subset) if feature_subset is not None else list(range(X.shape[1]))
    params = {
        "axis": axis,
        "threshold": float(threshold),
        "left": int(left),
        "right": int(right),
        "train_accuracy": correct / X.shape[0],
    }
    return WeakLearner("stump", subset, C, params)


def _logistic_loss_grad(W, X1, onehot, l2):
    n = X1.shape[0]
    logits = X1 @ W.T
    logits -= logits.max(axis=1, keepdims=True)
    expl = np.exp(logits)
    Z = expl.sum(axis=1, keepdims=True)
    P = expl / Z
    ll = (onehot * (logits - np.log(Z))).sum() / n
    penalty = 0.5 * l2 * float((W[:, :-1] ** 2).sum())  # bias column unpenalized
    loss = -ll + penalty
    G = (P - onehot).T @ X1 / n
    G[:, :-1] += l2 * W[:, :-1]
    return loss, G


def train_logistic(X, y, l2: float = 1e-3, max_iter: int = 500, tol: float = 1e-6,
                   n_classes: Optional[int] = None,
                   feature_subset: Optional[list] = None) -> WeakLearner:
    """Multinomial logistic regression by full-batch gradient descent with
    backtracking (Armijo) line search, starting from zero weights.

    Stops when the gradient norm falls below tol or after max_iter
    iterations. The L2 penalty applies to the non-bias weights.
    """
    X = np.asarray(X, dtype=np.float64)
    yv, C = _as_labels(y, n_classes)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("empty input")
    if l2 < 0:
        raise ValueError("l2 must be nonnegative")
    n, D = X.shape
    X1 = np.hstack([X, np.ones((n, 1))])
    onehot = np.zeros((n, C))
    onehot[np.arange(n), yv] = 1.0

    W = np.zeros((C, D + 1))
    step = 1.0
    loss, G = _logistic_loss_grad(W, X1, onehot, l2)
    for _ in range(max_iter):
        if not np.isfinite(loss):
            raise ValueError("non-finite loss; rescale the features")
        gsq = float((G * G).sum())
        if np.sqrt(gsq) < tol:
            break
        step = min(step * 2.0, 1e6)  # grow after successful steps
        while True:
            W_new = W - step * G
            loss_new, G_new = _logistic_loss_grad(W_new, X1, onehot, l2)
            if np.isfinite(loss_new) and loss_new <= loss - 1e-4 * step * gsq:
                break
            step *= 0.5
            if step < 1e-20:
                W_new, loss_new, G_new = W, loss, G  # stuck; bail out
                break
        if W_new is W:
            break
        W, loss, G = W_new, loss_new, G_new

    subset = list(feature_subset) if feature_subset is not None else list(range(D))
    return WeakLearner("logistic", subset, C, {"weights": W, "l2": l2})


def train_knn(X, y, k: int = 5, n_classes: Optional[int] = None,
              feature_subset: Optional[list] = None) -> WeakLearner:
    X = np.asarray(X, dtype=np.float64)
    yv, C = _as_labels(y, n_classes)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("empty input")
    if k < 1 or k > X.shape[0]:
        raise ValueError(f"k must be in [1, {X.shape[0]}]")
    subset = list(feature_subset) if feature_subset is not None else list(range(X.shape[1]))
    return WeakLearner("knn", subset, C, {"points": X.copy(), "labels": yv.copy(), "k": int(k)})


def predict_proba(model: WeakLearner, X) -> np.ndarray:
    """Class-probability matrix (n x C); rows sum to 1.

    X must already be restricted to the model's feature subset.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(model.feature_subset):
        raise ValueError(
            f"dimension mismatch: expected {len(model.feature_subset)} columns, got {X.shape}")
    C = model.classes
    if model.kind == "stump":
        p = model.params
        votes = np.where(X[:, p["axis"]] <= p["threshold"], p["left"], p["right"])
        out = np.zeros((X.shape[0], C))
        out[np.arange(X.shape[0]), votes] = 1.0
        return out
    if model.kind == "logistic":
        W = np.asarray(model.params["weights"], dtype=np.float64)
        logits = X @ W[:, :-1].T + W[:, -1]
        logits -= logits.max(axis=1, keepdims=True)
        expl = np.exp(logits)
        return expl / expl.sum(axis=1, keepdims=True)
    if model.kind == "knn":
        pts = np.asarray(model.params["points"], dtype=np.float64)
        labels = np.asarray(model.params["labels"], dtype=np.int64)
        k = int(model.params["k"])
        d2 = ((X[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        # stable sort keeps lower stored indices first on distance ties
        nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
        out = np.zeros((X.shape[0], C))
        for c in range(C):
            out[:, c] = (labels[nearest] == c).sum(axis=1) / k
        return out
    raise AssertionError(model.kind)


def train(kind: str, X, y, n_classes: Optional[int] = None,
          feature_subset: Optional[list] = None, knn_k: int = 5,
          l2: float = 1e-3, max_iter: int = 500, tol: float = 1e-6) -> WeakLearner:
    """Dispatch helper used by the synthesis engines."""
    if kind == "stump":
        return train_stump(X, y, n_classes, feature_subset)
    if kind == "logistic":
        return train_logistic(X, y, l2, max_iter, tol, n_classes, feature_subset)
    if kind == "knn":
        k = min(knn_k, np.asarray(X).shape[0])
        return train_knn(X, y, k, n_classes, feature_subset)
    raise ValueError(f"unknown learner kind {kind!r}")
