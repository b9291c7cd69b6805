"""Affinity-based weak labeling: cosine affinity matrices over instance
embeddings, clustering (diagonal-covariance GMM-EM, Lloyd k-means,
normalized spectral), and labeled-set cluster-to-class mapping.

The pipeline clusters train and labeled points jointly (the labels live in
the validation split, so they must sit inside the clustered set), maps each
cluster to the majority label among its labeled members, and reads weak
labels off the train block. It never abstains: coverage is exactly 1.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .label_model import WeakLabelOutput

GMM_TOL = 1e-6
GMM_MAX_ITER = 300
VAR_FLOOR = 1e-6

METHODS = ("gmm", "kmeans", "spectral")


@dataclass
class AffinityMatrix:
    values: np.ndarray  # n x n cosine similarities
    source: str

    def __post_init__(self):
        A = np.asarray(self.values, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("affinity matrix must be square")
        if np.abs(A - A.T).max() > 1e-9:
            raise ValueError("affinity matrix must be symmetric")
        if A.min() < -1 - 1e-9 or A.max() > 1 + 1e-9:
            raise ValueError("affinities must lie in [-1, 1]")
        self.values = A

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass
class ClusterModel:
    method: str
    k_clusters: int
    assignments: np.ndarray
    responsibilities: Optional[np.ndarray] = None  # gmm only
    cluster_to_class: Optional[np.ndarray] = None
    seed: int = 0
    # fitted parameters, needed to score new points
    centers: Optional[np.ndarray] = None  # kmeans / spectral embedding space
    means: Optional[np.ndarray] = None  # gmm
    variances: Optional[np.ndarray] = None
    mix_weights: Optional[np.ndarray] = None
    log_likelihoods: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "k_clusters": self.k_clusters,
            "seed": self.seed,
            "cluster_to_class": None if self.cluster_to_class is None
            else self.cluster_to_class.tolist(),
        }


def build_affinity(features) -> AffinityMatrix:
    """Pairwise cosine similarities; zero vectors give zero rows with the
    diagonal forced to 1."""
    X = features.values if hasattr(features, "values") else np.asarray(features, dtype=float)
    if X.shape[0] < 2:
        raise ValueError("need at least 2 rows")
    norms = np.linalg.norm(X, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    Xn = X / safe[:, None]
    A = Xn @ Xn.T
    A = np.clip((A + A.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(A, 1.0)
    source = getattr(features, "provenance", "raw")
    return AffinityMatrix(A, source)


def stack_affinities(mats: Sequence[AffinityMatrix]) -> np.ndarray:
    """Row-wise concatenation: instance i's feature vector becomes its
    affinity rows across all views."""
    if not mats:
        raise ValueError("no affinity matrices to stack")
    n = mats[0].n
    for m in mats[1:]:
        if m.n != n:
            raise ValueError(f"size mismatch: {m.n} vs {n}")
    return np.hstack([m.values for m in mats])


def _kmeanspp_init(X, K, rng):
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((X - X[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < K:
        total = float(d2.sum())
        if total <= 0:
            # duplicates exhausted the spread: take the lowest unchosen index
            rest = sorted(set(range(n)) - set(chosen))
            idx = rest[0]
        else:
            idx = int(rng.choice(n, p=d2 / total))
        chosen.append(idx)
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return X[chosen].copy()


def _pairwise_sq(X, centers):
    return ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _lloyd(X, centers, max_iter=GMM_MAX_ITER, tol=GMM_TOL):
    n, K = X.shape[0], centers.shape[0]
    prev_inertia = None
    assign = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        d2 = _pairwise_sq(X, centers)
        assign = d2.argmin(axis=1)
        for k in range(K):  # revive empty clusters with the worst-fit point
            if not (assign == k).any():
                worst = int(np.argmax(d2[np.arange(n), assign]))
                assign[worst] = k
                d2[worst, :] = np.inf
        centers = np.stack([X[assign == k].mean(axis=0) for k in range(K)])
        inertia = float(((X - centers[assign]) ** 2).sum())
        if prev_inertia is not None and prev_inertia - inertia < tol:
            break
        prev_inertia = inertia
    return assign, centers


def _gmm_log_prob(X, means, variances, log_weights):
    # diagonal Gaussians; returns n x K joint log densities
    n, d = X.shape
    K = means.shape[0]
    out = np.empty((n, K))
    for k in range(K):
        diff = X - means[k]
        out[:, k] = log_weights[k] - 0.5 * (
            d * np.log(2 * np.pi) + np.log(variances[k]).sum()
            + (diff * diff / variances[k]).sum(axis=1))
    return out


def _fit_gmm(X, K, rng):
    n, d = X.shape
    means = _kmeanspp_init(X, K, rng)
    variances = np.tile(np.maximum(X.var(axis=0), VAR_FLOOR), (K, 1))
    weights = np.full(K, 1.0 / K)
    prev_ll = None
    lls = []
    resp = None
    for _ in range(GMM_MAX_ITER):
        with np.errstate(divide="ignore"):
            logp = _gmm_log_prob(X, means, variances, np.log(weights))
        mx = logp.max(axis=1, keepdims=True)
        z = np.exp(logp - mx)
        zsum = z.sum(axis=1, keepdims=True)
        resp = z / zsum
        ll = float((mx[:, 0] + np.log(zsum[:, 0])).sum())
        if not np.isfinite(ll):
            raise ValueError("non-finite likelihood in GMM EM")
        lls.append(ll)
        if prev_ll is not None and ll - prev_ll < GMM_TOL:
            break
        prev_ll = ll

        nk = resp.sum(axis=0)
        weights = nk / n
        safe_nk = np.maximum(nk, 1e-300)
        means = (resp.T @ X) / safe_nk[:, None]
        for k in range(K):
            diff = X - means[k]
            variances[k] = np.maximum((resp[:, k][:, None] * diff * diff).sum(axis=0)
                                      / safe_nk[k], VAR_FLOOR)
    return means, variances, weights, resp, lls


def _spectral_embedding(features, K):
    X = np.asarray(features, dtype=np.float64)
    n = X.shape[0]
    is_affinity = (
        X.shape[0] == X.shape[1]
        and np.abs(X - X.T).max() <= 1e-8
        and X.min() >= -1 - 1e-9 and X.max() <= 1 + 1e-9
    )
    A = X if is_affinity else build_affinity(X).values
    W = (A + 1.0) / 2.0  # shift to a nonnegative similarity graph
    deg = W.sum(axis=1)
    with np.errstate(divide="ignore"):
        dinv = np.where(deg > 0, 1.0 / np.sqrt(deg), 0.0)
    L = np.eye(n) - dinv[:, None] * W * dinv[None, :]
    evals, evecs = np.linalg.eigh(L)
    U = evecs[:, :K]
    norms = np.linalg.norm(U, axis=1)
    U = U / np.where(norms > 0, norms, 1.0)[:, None]
    return U


def fit_cluster(features, K: int, method: str = "gmm", seed: int = 0) -> ClusterModel:
    """Cluster rows of `features` into K groups (no class map yet).

    gmm: diagonal-covariance EM (k-means++ init, variance floor);
    kmeans: Lloyd with k-means++ init; spectral: normalized-Laplacian
    embedding of the (shifted) affinity graph followed by k-means. All
    deterministic for a fixed seed.
    """
    X = features.values if hasattr(features, "values") else np.asarray(features, dtype=float)
    if method not in METHODS:
        raise ValueError(f"unknown clustering method {method!r}")
    if K > X.shape[0]:
        raise ValueError(f"K={K} exceeds point count {X.shape[0]}")
    rng = np.random.Generator(np.random.PCG64(seed))
    if method == "gmm":
        means, variances, weights, resp, lls = _fit_gmm(X, K, rng)
        assign = resp.argmax(axis=1)
        return ClusterModel("gmm", K, assign, responsibilities=resp, seed=seed,
                            means=means, variances=variances, mix_weights=weights,
                            log_likelihoods=lls)
    if method == "kmeans":
        assign, centers = _lloyd(X, _kmeanspp_init(X, K, rng))
        return ClusterModel("kmeans", K, assign, seed=seed, centers=centers)
    U = _spectral_embedding(X, K)
    assign, centers = _lloyd(U, _kmeanspp_init(U, K, rng))
    return ClusterModel("spectral", K, assign, seed=seed, centers=centers)


def map_clusters(model: ClusterModel, labeled_idx, labels) -> ClusterModel:
    """Map each cluster to the majority label among its labeled members;
    clusters with no labeled member fall back to the globally most frequent
    labeled class. Ties resolve toward the lower class index."""
    labeled_idx = np.asarray(labeled_idx, dtype=np.int64)
    if labeled_idx.size == 0:
        raise ValueError("labeled_idx must be nonempty")
    yv = np.asarray(labels.values if hasattr(labels, "values") else labels, dtype=np.int64)
    C = int(labels.classes) if hasattr(labels, "classes") else int(yv.max()) + 1
    global_counts = np.bincount(yv, minlength=C)
    global_majority = int(np.argmax(global_counts))
    mapping = np.empty(model.k_clusters, dtype=np.int64)
    member_cluster = model.assignments[labeled_idx]
    for k in range(model.k_clusters):
        members = yv[member_cluster == k]
        if members.size == 0:
            mapping[k] = global_majority
        else:
            mapping[k] = int(np.argmax(np.bincount(members, minlength=C)))
    model.cluster_to_class = mapping
    return model


def _class_posterior(model: ClusterModel, C: int, resp: Optional[np.ndarray],
                     assignments: np.ndarray) -> np.ndarray:
    n = assignments.shape[0]
    posterior = np.zeros((n, C))
    if model.method == "gmm" and resp is not None:
        for k in range(model.k_clusters):
            posterior[:, model.cluster_to_class[k]] += resp[:, k]
    else:
        posterior[np.arange(n), model.cluster_to_class[assignments]] = 1.0
    return posterior


@dataclass
class GogglesArtifact:
    model: ClusterModel
    reference_features: List[np.ndarray]  # per view: the clustered raw points
    stacked_reference: np.ndarray  # stacked affinity rows of clustered points
    classes: int

    def predict(self, new_feature_sets: Sequence[np.ndarray]) -> WeakLabelOutput:
        """Weak labels for new points via each method's natural extension:
        gmm responsibilities, nearest k-means center, or (spectral, which
        has no native extension) the cluster of the nearest clustered point
        in stacked-affinity space."""
        rows = []
        for ref, new in zip(self.reference_features, new_feature_sets):
            ref_norm = np.linalg.norm(ref, axis=1)
            new_norm = np.linalg.norm(new, axis=1)
            refn = ref / np.where(ref_norm > 0, ref_norm, 1.0)[:, None]
            newn = new / np.where(new_norm > 0, new_norm, 1.0)[:, None]
            rows.append(np.clip(newn @ refn.T, -1.0, 1.0))
        F = np.hstack(rows)
        model = self.model
        if model.method == "gmm":
            with np.errstate(divide="ignore"):
                logp = _gmm_log_prob(F, model.means, model.variances,
                                     np.log(model.mix_weights))
            mx = logp.max(axis=1, keepdims=True)
            z = np.exp(logp - mx)
            resp = z / z.sum(axis=1, keepdims=True)
            assign = resp.argmax(axis=1)
        elif model.method == "kmeans":
            resp = None
            assign = _pairwise_sq(F, model.centers).argmin(axis=1)
        else:
            resp = None
            d2 = _pairwise_sq(F, self.stacked_reference)
            assign = model.assignments[d2.argmin(axis=1)]
        posterior = _class_posterior(model, self.classes, resp, assign)
        hard = model.cluster_to_class[assign]
        n = hard.shape[0]
        return WeakLabelOutput(posterior, hard, np.ones(n, dtype=bool), 1.0)


def goggles_fit(bundle, method: str = "gmm", seed: int = 0,
                extra_feature_sets: Sequence = ()) -> Tuple[WeakLabelOutput, GogglesArtifact]:
    """Full pipeline on train+val points: affinity per view, stack, cluster
    with K = C, map clusters through the validation labels, emit weak
    labels for the train block (coverage exactly 1)."""
    n, m, C = bundle.n, bundle.m, bundle.classes
    views = [np.vstack([bundle.train_features.values, bundle.val_features.values])]
    for extra in extra_feature_sets:
        vals_train = extra[0].values if hasattr(extra[0], "values") else np.asarray(extra[0])
        vals_val = extra[1].values if hasattr(extra[1], "values") else np.asarray(extra[1])
        views.append(np.vstack([vals_train, vals_val]))
    stacked = stack_affinities([build_affinity(v) for v in views])
    model = fit_cluster(stacked, C, method, seed)
    model = map_clusters(model, np.arange(n, n + m), bundle.val_labels)

    resp = model.responsibilities[:n] if model.responsibilities is not None else None
    posterior = _class_posterior(model, C, resp, model.assignments[:n])
    hard = model.cluster_to_class[model.assignments[:n]]
    output = WeakLabelOutput(posterior, hard, np.ones(n, dtype=bool), 1.0)
    artifact = GogglesArtifact(model, views, stacked, C)
    return output, artifact


def goggles_predict(bundle, method: str = "gmm", seed: int = 0) -> WeakLabelOutput:
    output, _ = goggles_fit(bundle, method, seed)
    return output
