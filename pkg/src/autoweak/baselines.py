"""Comparison systems: few-shot logistic regression on the labeled set,
graph-based label propagation, and zero-shot argmax over ingested logits.

All three label every point (coverage is always 1).
"""

import warnings
from typing import Optional

import numpy as np

from . import weak_learners
from .label_model import WeakLabelOutput

LP_DEFAULT_K = 10
LP_DEFAULT_MAX_ITER = 1000
LP_DEFAULT_TOL = 1e-6
SIGMA_SUBSAMPLE = 500


def _full_coverage_output(posterior: np.ndarray) -> WeakLabelOutput:
    hard = posterior.argmax(axis=1).astype(np.int64)
    n = posterior.shape[0]
    return WeakLabelOutput(posterior, hard, np.ones(n, dtype=bool), 1.0)


def few_shot_logistic(bundle, l2: float = 1e-3, max_iter: int = 500,
                      tol: float = 1e-6) -> WeakLabelOutput:
    """Logistic regression on the labeled validation set, predicting the
    train split with full coverage."""
    if bundle.m < bundle.classes:
        warnings.warn(f"only {bundle.m} labels for {bundle.classes} classes", stacklevel=2)
    model = train_few_shot(bundle, l2, max_iter, tol)
    return predict_few_shot(model, bundle.train_features.values)


def train_few_shot(bundle, l2: float = 1e-3, max_iter: int = 500, tol: float = 1e-6):
    return weak_learners.train_logistic(
        bundle.val_features.values, bundle.val_labels.values,
        l2=l2, max_iter=max_iter, tol=tol, n_classes=bundle.classes)


def predict_few_shot(model, feature_values: np.ndarray) -> WeakLabelOutput:
    return _full_coverage_output(weak_learners.predict_proba(model, feature_values))


def median_pairwise_sigma(points: np.ndarray, subsample: int = SIGMA_SUBSAMPLE) -> float:
    """Median pairwise distance over an evenly spaced subsample (no RNG, so
    runs stay deterministic)."""
    n = points.shape[0]
    if n > subsample:
        idx = np.linspace(0, n - 1, subsample).astype(np.int64)
        points = points[idx]
    d2 = ((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
    upper = d2[np.triu_indices(points.shape[0], k=1)]
    if upper.size == 0:
        return 1.0
    sigma = float(np.sqrt(np.median(upper)))
    return sigma if sigma > 0 else 1.0


def build_propagation_graph(points: np.ndarray, k: int, sigma: float) -> np.ndarray:
    """Symmetric kNN adjacency with RBF weights exp(-d^2 / (2 sigma^2));
    an edge exists when either endpoint ranks the other among its k
    nearest. No self-loops."""
    n = points.shape[0]
    if k >= n:
        raise ValueError(f"k={k} must be smaller than the point count {n}")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    d2 = ((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    W = np.zeros((n, n))
    nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(n), k)
    cols = nearest.ravel()
    W[rows, cols] = np.exp(-d2[rows, cols] / (2.0 * sigma * sigma))
    return np.maximum(W, W.T)


def label_propagation(bundle, k: int = LP_DEFAULT_K, sigma: Optional[float] = None,
                      max_iter: int = LP_DEFAULT_MAX_ITER,
                      tol: float = LP_DEFAULT_TOL) -> WeakLabelOutput:
    """Clamped label propagation over the joint val+train point cloud.

    Labeled (validation) rows stay one-hot through every iteration;
    F <- rownormalize(W F) elsewhere until the max entry change falls
    below tol. Nodes in components with no labeled member keep a uniform
    posterior (their hard label falls to the lowest class by the argmax
    tie rule).
    """
    if bundle.m == 0:
        raise ValueError("no labeled points")
    C = bundle.classes
    points = np.vstack([bundle.val_features.values, bundle.train_features.values])
    if sigma is None:
        sigma = median_pairwise_sigma(points)
    k = min(k, points.shape[0] - 1)  # default k on tiny point clouds
    W = build_propagation_graph(points, k, sigma)
    n_total, m = points.shape[0], bundle.m

    seed_block = np.zeros((m, C))
    seed_block[np.arange(m), bundle.val_labels.values] = 1.0

    F = np.full((n_total, C), 1.0 / C)
    F[:m] = seed_block
    for _ in range(max_iter):
        F_new = W @ F
        row_sum = F_new.sum(axis=1)
        ok = row_sum > 0
        F_new[ok] /= row_sum[ok, None]
        F_new[~ok] = F[~ok]  # isolated nodes keep their state
        F_new[:m] = seed_block  # clamp
        delta = np.abs(F_new - F).max()
        F = F_new
        if delta < tol:
            break
    posterior = F[m:]
    return _full_coverage_output(posterior)


def zero_shot_argmax(features, classes: int) -> WeakLabelOutput:
    """Per-row argmax over externally supplied per-class logits; posterior
    is the row softmax. Requires the logit width to equal the class count."""
    X = features.values if hasattr(features, "values") else np.asarray(features, dtype=float)
    if X.shape[1] != classes:
        raise ValueError(
            f"logit width mismatch: d={X.shape[1]} but C={classes}")
    shifted = X - X.max(axis=1, keepdims=True)
    expx = np.exp(shifted)
    posterior = expx / expx.sum(axis=1, keepdims=True)
    return _full_coverage_output(posterior)
