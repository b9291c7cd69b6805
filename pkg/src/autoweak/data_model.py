"""Dataset bundles, matrix/label containers, and deterministic feature
transforms (PCA, standardization, bit-reversal permutation).

A dataset on disk is a JSON manifest naming headered-CSV feature matrices
(one per split per provenance tag) and integer label files. Loading is a
pure function of file contents.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import io_csv
from .label_model import VoteMatrix

PCA_MAX_DIM = 4096
_RANK_TOL = 1e-12


@dataclass
class FeatureMatrix:
    """n x d real matrix of example embeddings plus a provenance tag."""

    values: np.ndarray
    provenance: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] < 1 or self.values.shape[1] < 1:
            raise ValueError("feature matrix must be 2-D with n >= 1 and d >= 1")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature matrix contains non-finite values")
        if not self.provenance:
            raise ValueError("provenance must be non-empty")

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


@dataclass
class LabelVector:
    """Class indices in {0..C-1} with class names."""

    values: np.ndarray
    classes: int
    class_names: list

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64)
        if self.classes < 2:
            raise ValueError("need at least 2 classes")
        if len(self.class_names) != self.classes:
            raise ValueError("class_names length must equal class count")
        if self.values.size and (self.values.min() < 0 or self.values.max() >= self.classes):
            raise ValueError("label out of range")

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass
class DatasetBundle:
    """Unlabeled train pool plus the labeled validation set (and optional
    extras: test split for evaluation, train gold labels for train-split
    evaluation, externally supplied votes aligned to the train set)."""

    name: str
    train_features: FeatureMatrix
    val_features: FeatureMatrix
    val_labels: LabelVector
    test_features: Optional[FeatureMatrix] = None
    test_labels: Optional[LabelVector] = None
    train_labels: Optional[LabelVector] = None
    external_votes: Optional[VoteMatrix] = None

    def __post_init__(self):
        d = self.train_features.cols
        for fm, nm in ((self.val_features, "val"), (self.test_features, "test")):
            if fm is not None and fm.cols != d:
                raise ValueError(f"shape mismatch: train d={d}, {nm} d={fm.cols}")
            if fm is not None and fm.provenance != self.train_features.provenance:
                raise ValueError("all feature matrices must share a provenance tag")
        if len(self.val_labels) != self.val_features.rows:
            raise ValueError(
                f"shape mismatch: val has {self.val_features.rows} rows "
                f"but {len(self.val_labels)} labels")
        if self.test_labels is not None:
            if self.test_features is None:
                raise ValueError("test labels without test features")
            if len(self.test_labels) != self.test_features.rows:
                raise ValueError("shape mismatch: test rows vs test labels")
        if self.train_labels is not None and len(self.train_labels) != self.train_features.rows:
            raise ValueError("shape mismatch: train rows vs train labels")
        if self.external_votes is not None and self.external_votes.values.shape[0] != self.train_features.rows:
            raise ValueError("external votes must align with the train set")

    @property
    def n(self) -> int:
        return self.train_features.rows

    @property
    def m(self) -> int:
        return len(self.val_labels)

    @property
    def d(self) -> int:
        return self.train_features.cols

    @property
    def classes(self) -> int:
        return self.val_labels.classes


@dataclass
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # k x d, rows orthonormal
    explained_variance: np.ndarray  # length k, nonincreasing

    @property
    def k(self) -> int:
        return self.components.shape[0]


def _load_labels(path, classes, class_names) -> LabelVector:
    raw = io_csv.read_labels(path)
    bad = np.nonzero((raw < 0) | (raw >= classes))[0]
    if bad.size:
        raise ValueError(f"{path}: row {int(bad[0]) + 1}: label out of range (C={classes})")
    return LabelVector(raw, classes, class_names)


def manifest_file_paths(manifest_path) -> list:
    """Every data file a manifest references, for content-hash caching."""
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    with manifest_path.open("r", encoding="utf-8") as fh:
        spec = json.load(fh)
    paths = []
    for split in spec.get("splits", {}).values():
        for rel in split.get("features", {}).values():
            paths.append(base / rel)
        if "labels" in split:
            paths.append(base / split["labels"])
    ext = spec.get("external_votes")
    if ext:
        paths.append(base / ext["votes"])
    return paths


def manifest_provenances(manifest_path) -> list:
    with Path(manifest_path).open("r", encoding="utf-8") as fh:
        spec = json.load(fh)
    train = spec.get("splits", {}).get("train", {})
    return sorted(train.get("features", {}).keys())


def load_bundle(manifest_path, provenance: Optional[str] = None) -> DatasetBundle:
    """Load a dataset bundle for one provenance tag.

    The manifest lists, per split, one feature file per provenance plus an
    optional label file. Errors carry the offending file (and row, where it
    applies). Loading never shuffles.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise FileNotFoundError(f"{manifest_path}: missing file")
    base = manifest_path.parent
    with manifest_path.open("r", encoding="utf-8") as fh:
        spec = json.load(fh)

    for key in ("name", "classes", "class_names", "splits"):
        if key not in spec:
            raise ValueError(f"{manifest_path}: manifest missing '{key}'")
    classes = int(spec["classes"])
    class_names = list(spec["class_names"])
    splits = spec["splits"]
    if "train" not in splits or "val" not in splits:
        raise ValueError(f"{manifest_path}: manifest needs 'train' and 'val' splits")

    def load_split_features(split_name):
        files = splits[split_name].get("features", {})
        if not files:
            raise ValueError(f"{manifest_path}: split '{split_name}' lists no features")
        tag = provenance
        if tag is None:
            if len(files) > 1:
                raise ValueError(
                    f"{manifest_path}: split '{split_name}' has several provenances "
                    f"({sorted(files)}); pass provenance=")
            tag = next(iter(files))
        if tag not in files:
            raise ValueError(f"{manifest_path}: split '{split_name}' has no provenance '{tag}'")
        return FeatureMatrix(io_csv.read_matrix(base / files[tag]), tag)

    train_fm = load_split_features("train")
    val_fm = load_split_features("val")
    if "labels" not in splits["val"]:
        raise ValueError(f"{manifest_path}: val split needs labels")
    val_labels = _load_labels(base / splits["val"]["labels"], classes, class_names)

    test_fm = test_labels = None
    if "test" in splits:
        test_fm = load_split_features("test")
        if "labels" in splits["test"]:
            test_labels = _load_labels(base / splits["test"]["labels"], classes, class_names)

    train_labels = None
    if "labels" in splits["train"]:
        train_labels = _load_labels(base / splits["train"]["labels"], classes, class_names)

    external = None
    if spec.get("external_votes"):
        ext = spec["external_votes"]
        votes = io_csv.read_int_matrix(base / ext["votes"])
        lf_ids = ext.get("lf_ids") or [f"ext{i}" for i in range(votes.shape[1])]
        external = VoteMatrix(votes, list(lf_ids), classes)

    return DatasetBundle(
        name=spec["name"],
        train_features=train_fm,
        val_features=val_fm,
        val_labels=val_labels,
        test_features=test_fm,
        test_labels=test_labels,
        train_labels=train_labels,
        external_votes=external,
    )


def fit_pca(features: FeatureMatrix, k: int, max_dim: int = PCA_MAX_DIM) -> PcaModel:
    """Exact PCA via eigendecomposition of the d x d sample covariance.

    Components use a fixed sign convention (largest-magnitude entry
    positive) so serialized models are stable. explained_variance holds the
    descending covariance eigenvalues (ddof=1).
    """
    X = features.values
    n, d = X.shape
    if d > max_dim:
        raise ValueError(f"d={d} exceeds the exact-PCA cap ({max_dim})")
    if k < 1 or k > min(n, d):
        raise ValueError(f"k must be in [1, min(n, d)] = [1, {min(n, d)}]")
    mean = X.mean(axis=0)
    Xc = X - mean
    if n > 1:
        cov = (Xc.T @ Xc) / (n - 1)
    else:
        cov = np.zeros((d, d))
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]

    rank = int(np.sum(evals > _RANK_TOL * max(1.0, float(evals.sum()))))
    if rank == 0:
        raise ValueError("input has zero variance; no principal subspace")

    components = evecs[:, :k].T.copy()
    for row in components:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    return PcaModel(mean=mean, components=components, explained_variance=evals[:k].copy())


def apply_pca(model: PcaModel, features: FeatureMatrix) -> FeatureMatrix:
    if features.cols != model.mean.shape[0]:
        raise ValueError(
            f"dimension mismatch: features d={features.cols}, model d={model.mean.shape[0]}")
    projected = (features.values - model.mean) @ model.components.T
    return FeatureMatrix(projected, f"{features.provenance}+pca{model.k}")


def standardize(features: FeatureMatrix, sigma_floor: float = 1e-12) -> FeatureMatrix:
    """Zero mean, unit variance per column; sigma floored to avoid blowup."""
    X = features.values
    mu = X.mean(axis=0)
    sigma = np.maximum(X.std(axis=0), sigma_floor)
    return FeatureMatrix((X - mu) / sigma, f"{features.provenance}+std")


def _bit_reverse_indices(side: int) -> np.ndarray:
    bits = side.bit_length() - 1
    out = np.empty(side, dtype=np.int64)
    for i in range(side):
        r = 0
        for b in range(bits):
            r = (r << 1) | ((i >> b) & 1)
        out[i] = r
    return out


def bit_reversal_permute(features: FeatureMatrix, side: int) -> FeatureMatrix:
    """Reorder each example's side x side grid by the bit-reversal
    permutation of row and column indices (an involution)."""
    if side < 1 or side & (side - 1):
        raise ValueError("side must be a power of two")
    if features.cols != side * side:
        raise ValueError(f"d={features.cols} is not side^2={side * side}")
    rev = _bit_reverse_indices(side)
    grids = features.values.reshape(-1, side, side)
    permuted = grids[:, rev][:, :, rev].reshape(-1, side * side)
    return FeatureMatrix(permuted, f"{features.provenance}+bitrev{side}")
