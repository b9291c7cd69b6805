"""Synthetic dataset construction for benchmarking and tests.

Gaussian blob tasks with axis-aligned class means (each class separable on
its own coordinate) or diagonal two-feature structure (class signal split
across a feature pair, so cardinality-1 learners only see part of it).
"""

import json
from pathlib import Path
import numpy as np

from . import io_csv
from .data_model import DatasetBundle, FeatureMatrix, LabelVector


def gaussian_blob_bundle(
    n: int = 400,
    m: int = 100,
    d: int = 6,
    classes: int = 2,
    sep: float = 4.0,
    sigma: float = 0.5,
    seed: int = 0,
    name: str = "blobs",
    diagonal_pair: bool = False,
    pair_noise: float = 0.0,
    test_n: int = 0,
) -> DatasetBundle:
    """Class c is a spherical Gaussian around its mean.

    Default means: sep * e_{c mod d}. With diagonal_pair=True (binary
    only), means sit at +-(sep/2) * (1, 1, 0, ...) / sqrt(2), and
    pair_noise adds noise along (1, -1, 0, ...) / sqrt(2): the class signal
    then lives in the feature-0/feature-1 *pair* while either single axis
    drowns in the anti-correlated noise.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    means = np.zeros((classes, d))
    pair_dir = None
    if diagonal_pair:
        if classes != 2:
            raise ValueError("diagonal_pair blobs are binary")
        u = np.zeros(d)
        u[0] = u[1] = 1.0 / np.sqrt(2.0)
        means[0] = -(sep / 2.0) * u
        means[1] = +(sep / 2.0) * u
        pair_dir = np.zeros(d)
        pair_dir[0], pair_dir[1] = 1.0 / np.sqrt(2.0), -1.0 / np.sqrt(2.0)
    else:
        for c in range(classes):
            means[c, c % d] = sep

    def draw(count):
        labels = rng.integers(0, classes, size=count)
        X = means[labels] + sigma * rng.normal(size=(count, d))
        if pair_dir is not None and pair_noise > 0:
            X += pair_noise * rng.normal(size=(count, 1)) * pair_dir
        return X, labels

    X_train, y_train = draw(n)
    X_val, y_val = draw(m)
    names = [f"class{c}" for c in range(classes)]
    bundle = DatasetBundle(
        name=name,
        train_features=FeatureMatrix(X_train, "raw"),
        val_features=FeatureMatrix(X_val, "raw"),
        val_labels=LabelVector(y_val, classes, names),
        train_labels=LabelVector(y_train, classes, names),
    )
    if test_n:
        X_test, y_test = draw(test_n)
        bundle.test_features = FeatureMatrix(X_test, "raw")
        bundle.test_labels = LabelVector(y_test, classes, names)
    return bundle


def write_bundle_manifest(bundle: DatasetBundle, out_dir,
                          include_train_labels: bool = True) -> Path:
    """Persist a bundle as manifest + headered CSVs; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tag = bundle.train_features.provenance
    safe_tag = tag.replace(":", "_").replace("+", "_")

    manifest = {
        "name": bundle.name,
        "classes": bundle.classes,
        "class_names": list(bundle.val_labels.class_names),
        "splits": {},
    }

    def put(split, fm, labels):
        entry = {"features": {tag: f"{split}_{safe_tag}.csv"}}
        io_csv.write_matrix(out / entry["features"][tag], fm.values)
        if labels is not None:
            entry["labels"] = f"{split}_labels.txt"
            io_csv.write_labels(out / entry["labels"], labels.values)
        manifest["splits"][split] = entry

    put("train", bundle.train_features,
        bundle.train_labels if include_train_labels else None)
    put("val", bundle.val_features, bundle.val_labels)
    if bundle.test_features is not None:
        put("test", bundle.test_features, bundle.test_labels)

    if bundle.external_votes is not None:
        from .label_model import write_votes

        write_votes(out / "external_votes.csv", bundle.external_votes)
        manifest["external_votes"] = {
            "votes": "external_votes.csv",
            "lf_ids": list(bundle.external_votes.lf_ids),
        }

    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True), encoding="ascii")
    return path
