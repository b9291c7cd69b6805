"""Experiment orchestration: single runs, ablation sweeps, performance
profiles, manifest ingestion, the vetting service, and session replay.

Every non-interactive run is a pure function of (manifest contents, config,
seed): artifacts land in a directory keyed by a content hash, reruns are
served from cache, and wall-clock timing stays out of the deterministic
artifact set (timing.json is the one excluded file).

Exit codes: 0 success, 2 method/feature incompatibility ("n/a"), 1 error.
"""

import argparse
import concurrent.futures
import dataclasses
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import baselines, data_model, eval_profiles, goggles_engine, io_csv, iws_engine, label_model
from .data_model import DatasetBundle, load_bundle
from .eval_profiles import METRICS, ObjectiveTable, pr_curves, score
from .label_model import apply_fill, dawid_skene_apply, dawid_skene_fit, majority_vote, merge_votes
from .lf_engine import LFSet, MetricWeights, SynthesisConfig, apply_lfset, sample_metric_weights, snuba_synthesize

METHODS = ("snuba_unipolar", "snuba_multipolar", "iws_auto", "iws_interactive",
           "goggles", "few_shot", "label_prop", "zero_shot")
LABEL_MODELS = ("majority", "dawid_skene")
SWEEP_AXES = ("cardinality", "label_budget", "metric_weights", "iws_threshold",
              "goggles_method")

EXIT_OK, EXIT_ERROR, EXIT_NA = 0, 1, 2


@dataclass
class RunConfig:
    manifest: str
    method: str
    provenance: Optional[str] = None
    label_model: str = "dawid_skene"
    synthesis: SynthesisConfig = field(default_factory=SynthesisConfig)
    seed: int = 0
    out_dir: str = "runs"
    fill_policy: str = "none"
    iws_threshold: Optional[float] = None
    goggles_method: str = "gmm"
    min_pool: int = iws_engine.DEFAULT_MIN_POOL
    use_external_votes: bool = False
    label_budget: Optional[int] = None  # truncate the labeled set (sweeps)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.label_model not in LABEL_MODELS:
            raise ValueError(f"unknown label model {self.label_model!r}")
        if self.fill_policy not in label_model.FILL_POLICIES:
            raise ValueError(f"unknown fill policy {self.fill_policy!r}")
        if self.goggles_method not in goggles_engine.METHODS:
            raise ValueError(f"unknown clustering method {self.goggles_method!r}")
        self.synthesis.seed = self.seed

    def identity(self) -> dict:
        blob = dataclasses.asdict(self)
        blob["synthesis"] = self.synthesis.to_json()
        blob.pop("out_dir")  # output location is not part of run identity
        return blob


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _input_digest(manifest_path) -> str:
    h = hashlib.sha256()
    h.update(_sha256_file(manifest_path).encode())
    for p in data_model.manifest_file_paths(manifest_path):
        h.update(_sha256_file(p).encode())
    return h.hexdigest()


def derive_seed(base_seed: int, index: int) -> int:
    """Stable per-point seed for sweeps (platform-independent)."""
    digest = hashlib.sha256(f"{base_seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "little") % (2**63)


class Incompatible(Exception):
    """Method/feature/task mismatch; maps to a structured n/a report."""

    def __init__(self, code: str, reason: str):
        super().__init__(reason)
        self.code = code
        self.reason = reason


def _truncate_labels(bundle: DatasetBundle, budget: int) -> DatasetBundle:
    if budget > bundle.m:
        raise ValueError(
            f"budget exceeds available labels: {budget} > {bundle.m}")
    if budget == bundle.m:
        return bundle
    return DatasetBundle(
        name=bundle.name,
        train_features=bundle.train_features,
        val_features=data_model.FeatureMatrix(
            bundle.val_features.values[:budget], bundle.val_features.provenance),
        val_labels=data_model.LabelVector(
            bundle.val_labels.values[:budget], bundle.val_labels.classes,
            bundle.val_labels.class_names),
        test_features=bundle.test_features,
        test_labels=bundle.test_labels,
        train_labels=bundle.train_labels,
        external_votes=bundle.external_votes,
    )


def _load_for_run(config: RunConfig):
    """Primary bundle plus extra-view bundles (goggles may stack affinity
    matrices from several provenances, comma-separated)."""
    tags = [t.strip() for t in config.provenance.split(",")] \
        if config.provenance else [None]
    if len(tags) > 1 and config.method != "goggles":
        raise ValueError(
            f"method {config.method} uses a single provenance, got {tags}")
    try:
        bundle = load_bundle(config.manifest, tags[0])
        extra = [load_bundle(config.manifest, tag) for tag in tags[1:]]
    except ValueError as exc:
        if "no provenance" in str(exc):
            raise Incompatible("modality", str(exc)) from exc
        raise
    if config.label_budget is not None:
        bundle = _truncate_labels(bundle, config.label_budget)
    return bundle, extra


def _aggregate(votes, config: RunConfig):
    """Label-model step shared by the LF-producing methods."""
    if config.label_model == "majority":
        return None, majority_vote(votes)
    return dawid_skene_fit(votes)


@dataclass
class MethodResult:
    train_output: label_model.WeakLabelOutput
    eval_output: Optional[label_model.WeakLabelOutput] = None  # on test split
    lfset: Optional[LFSet] = None
    ds_model: Optional[label_model.DawidSkeneModel] = None
    votes: Optional[label_model.VoteMatrix] = None
    cluster_model: Optional[goggles_engine.ClusterModel] = None
    warning: Optional[str] = None


def _run_lf_method(bundle: DatasetBundle, config: RunConfig) -> MethodResult:
    if config.method == "snuba_unipolar":
        lfset = snuba_synthesize(bundle, config.synthesis, mode="unipolar")
    elif config.method == "snuba_multipolar":
        lfset = snuba_synthesize(bundle, config.synthesis, mode="multipolar")
    else:  # iws_auto
        try:
            pool = iws_engine.build_pool(bundle, config.synthesis, config.min_pool)
        except iws_engine.PoolTooSmallError as exc:
            raise Incompatible("pool_too_small", str(exc)) from exc
        session = iws_engine.open_session(bundle, pool, mode="automated",
                                          accuracy_threshold=config.iws_threshold)
        lfset = iws_engine.run_automated(session)
        if not lfset.lfs:
            return MethodResult(
                train_output=label_model.WeakLabelOutput(
                    np.zeros((bundle.n, bundle.classes)),
                    np.full(bundle.n, -1, dtype=np.int64),
                    np.zeros(bundle.n, dtype=bool), 0.0),
                lfset=lfset, warning=session.warning)
    if not lfset.lfs:
        raise ValueError("synthesis produced no labeling functions")
    votes = apply_lfset(lfset, bundle.train_features)
    if config.use_external_votes:
        if bundle.external_votes is None:
            raise ValueError("manifest carries no external votes")
        votes = merge_votes(votes, bundle.external_votes)
    ds, out = _aggregate(votes, config)

    eval_output = None
    if bundle.test_features is not None:
        eval_votes = apply_lfset(lfset, bundle.test_features)
        if config.use_external_votes:
            eval_output = None  # external votes align to train only
        elif ds is not None:
            eval_output = dawid_skene_apply(ds, eval_votes)
        else:
            eval_output = majority_vote(eval_votes)
    return MethodResult(out, eval_output, lfset=lfset, ds_model=ds, votes=votes)


def _run_method(bundle: DatasetBundle, config: RunConfig,
                extra_views=()) -> MethodResult:
    method = config.method
    if method in ("snuba_unipolar", "snuba_multipolar", "iws_auto"):
        return _run_lf_method(bundle, config)
    if method == "goggles":
        out, artifact = goggles_engine.goggles_fit(
            bundle, config.goggles_method, config.seed,
            extra_feature_sets=[(b.train_features, b.val_features)
                                for b in extra_views])
        eval_output = None
        if bundle.test_features is not None:
            test_views = [bundle.test_features.values]
            for b in extra_views:
                if b.test_features is None:
                    raise ValueError(
                        "every selected provenance needs a test split for "
                        "test-split evaluation")
                test_views.append(b.test_features.values)
            eval_output = artifact.predict(test_views)
        return MethodResult(out, eval_output, cluster_model=artifact.model)
    if method == "few_shot":
        model = baselines.train_few_shot(bundle, config.synthesis.l2,
                                         config.synthesis.logistic_max_iter,
                                         config.synthesis.logistic_tol)
        out = baselines.predict_few_shot(model, bundle.train_features.values)
        eval_output = None
        if bundle.test_features is not None:
            eval_output = baselines.predict_few_shot(model, bundle.test_features.values)
        return MethodResult(out, eval_output)
    if method == "label_prop":
        out = baselines.label_propagation(bundle)
        eval_output = None
        if bundle.test_features is not None:
            eval_bundle = DatasetBundle(
                name=bundle.name, train_features=bundle.test_features,
                val_features=bundle.val_features, val_labels=bundle.val_labels)
            eval_output = baselines.label_propagation(eval_bundle)
        return MethodResult(out, eval_output)
    if method == "zero_shot":
        if bundle.d != bundle.classes:
            raise Incompatible(
                "logit_width",
                f"logit width mismatch: d={bundle.d} but C={bundle.classes}")
        out = baselines.zero_shot_argmax(bundle.train_features, bundle.classes)
        eval_output = None
        if bundle.test_features is not None:
            eval_output = baselines.zero_shot_argmax(bundle.test_features, bundle.classes)
        return MethodResult(out, eval_output)
    if method == "iws_interactive":
        raise ValueError("iws_interactive runs through `autoweak serve`")
    raise AssertionError(method)


def _evaluate(output, gold: np.ndarray, config: RunConfig, class_prior=None):
    covered = output.covered
    acc_covered = score("accuracy", output.hard, gold, covered)
    filled = apply_fill(output, config.fill_policy, seed=config.seed,
                        class_prior=class_prior,
                        majority_class=int(np.bincount(gold).argmax()))
    acc_all = float((filled == gold).mean())
    metrics = {m: score(m, output.hard, gold, covered) for m in METRICS}
    curves = pr_curves(output.posterior, gold)
    return acc_covered, acc_all, metrics, curves


def run(config: RunConfig) -> dict:
    """Execute one pipeline end to end; returns the report dict.

    Artifacts are cached under out_dir/<run_id>; a rerun with identical
    inputs is a no-op serving the cached report.
    """
    identity = config.identity()
    digest = _input_digest(config.manifest)
    run_id = hashlib.sha256(
        (json.dumps(identity, sort_keys=True) + digest).encode()).hexdigest()[:16]
    run_dir = Path(config.out_dir) / run_id
    report_path = run_dir / "report.json"
    started = time.monotonic()

    if report_path.is_file():
        report = json.loads(report_path.read_text(encoding="ascii"))
        report["cached"] = True
        return report

    run_dir.mkdir(parents=True, exist_ok=True)
    try:
        bundle, extra_views = _load_for_run(config)
        result = _run_method(bundle, config, extra_views)
    except Incompatible as exc:
        report = {
            "status": f"n/a:{exc.code}",
            "reason": exc.reason,
            "run_id": run_id,
            "method": config.method,
            "config": identity,
            "input_digest": digest,
        }
        _write_report(run_dir, report, started)
        return report

    gold_name, eval_output, gold = _pick_eval_split(bundle, result)
    artifacts = _persist_artifacts(run_dir, result)

    report = {
        "status": "ok",
        "run_id": run_id,
        "dataset": bundle.name,
        "method": config.method,
        "label_model": config.label_model,
        "provenance": bundle.train_features.provenance,
        "shapes": {"n": bundle.n, "m": bundle.m, "d": bundle.d,
                   "classes": bundle.classes},
        "eval_split": gold_name,
        "config": identity,
        "input_digest": digest,
        "artifacts": artifacts,
    }
    if result.warning:
        report["warning"] = result.warning
    if gold is not None:
        prior = result.ds_model.class_prior if result.ds_model is not None else None
        acc_covered, acc_all, metrics, curves = _evaluate(
            eval_output, gold, config, class_prior=prior)
        report.update({
            "coverage": eval_output.coverage,
            "accuracy_covered": acc_covered,
            "accuracy_all_with_fill": acc_all,
            "fill_policy": config.fill_policy,
            "metrics": metrics,
        })
        curve_blob = [{"class": c, "points": [[float(r), float(p)] for r, p in pts]}
                      for c, pts in enumerate(curves)]
        (run_dir / "pr_curves.json").write_text(
            json.dumps({"curves": curve_blob}, indent=1, sort_keys=True),
            encoding="ascii")
        report["artifacts"]["pr_curves"] = "pr_curves.json"
    else:
        report["coverage"] = result.train_output.coverage
        report["note"] = "no gold labels available; metrics omitted"

    _write_report(run_dir, report, started)
    return report


def _pick_eval_split(bundle: DatasetBundle, result: MethodResult):
    if bundle.test_labels is not None and result.eval_output is not None:
        return "test", result.eval_output, bundle.test_labels.values
    if bundle.train_labels is not None:
        return "train", result.train_output, bundle.train_labels.values
    return "none", result.train_output, None


def _persist_artifacts(run_dir: Path, result: MethodResult) -> dict:
    artifacts = {}
    label_model.write_weak_labels(run_dir / "weak_labels_train.csv", result.train_output)
    artifacts["weak_labels_train"] = "weak_labels_train.csv"
    if result.eval_output is not None:
        label_model.write_weak_labels(run_dir / "weak_labels_test.csv", result.eval_output)
        artifacts["weak_labels_test"] = "weak_labels_test.csv"
    if result.lfset is not None:
        result.lfset.save(run_dir / "lf_set.json")
        artifacts["lf_set"] = "lf_set.json"
    if result.votes is not None:
        label_model.write_votes(run_dir / "votes.csv", result.votes)
        artifacts["votes"] = "votes.csv"
    if result.ds_model is not None:
        (run_dir / "ds_model.json").write_text(
            json.dumps(result.ds_model.to_json(), indent=1, sort_keys=True),
            encoding="ascii")
        artifacts["ds_model"] = "ds_model.json"
    if result.cluster_model is not None:
        (run_dir / "cluster_model.json").write_text(
            json.dumps(result.cluster_model.to_json(), indent=1, sort_keys=True),
            encoding="ascii")
        io_csv.write_int_matrix(run_dir / "assignments.csv",
                                result.cluster_model.assignments[:, None])
        artifacts["cluster_model"] = "cluster_model.json"
        artifacts["assignments"] = "assignments.csv"
    return artifacts


def _write_report(run_dir: Path, report: dict, started: float) -> None:
    (run_dir / "report.json").write_text(
        json.dumps(report, indent=1, sort_keys=True), encoding="ascii")
    # timing is real observability but would break byte-level determinism,
    # so it lives in its own excluded file
    (run_dir / "timing.json").write_text(
        json.dumps({"seconds": time.monotonic() - started}), encoding="ascii")


def _sweep_points(config: RunConfig, axis: str, values, draws: int):
    """(name, per-point RunConfig) pairs for one sweep axis."""
    points = []
    if axis == "cardinality":
        if config.method not in ("snuba_unipolar", "snuba_multipolar"):
            raise ValueError("cardinality sweeps need a snuba method")
        values = [int(v) for v in (values or [1, 2, 4, 8])]
        for i, D in enumerate(values):
            cfg = _clone_config(config, i)
            cfg.synthesis.cardinality = D
            points.append((f"D={D}", cfg))
    elif axis == "label_budget":
        if config.method not in ("snuba_unipolar", "snuba_multipolar"):
            raise ValueError("label-budget sweeps need a snuba method")
        values = [int(v) for v in (values or range(100, 1001, 100))]
        for i, budget in enumerate(values):
            cfg = _clone_config(config, i)
            cfg.label_budget = budget
            points.append((f"budget={budget}", cfg))
    elif axis == "metric_weights":
        if config.method not in ("snuba_unipolar", "snuba_multipolar"):
            raise ValueError("metric-weight sweeps need a snuba method")
        for i, weights in enumerate(sample_metric_weights(config.seed, draws)):
            cfg = _clone_config(config, i)
            cfg.synthesis.selection_weights = weights
            cfg.synthesis.threshold_weights = weights
            points.append((f"draw={i}", cfg))
    elif axis == "iws_threshold":
        if config.method != "iws_auto":
            raise ValueError("threshold sweeps need method iws_auto")
        values = [float(v) for v in (values or [0.5, 0.6, 0.7, 0.8, 0.9])]
        for i, t in enumerate(values):
            cfg = _clone_config(config, i)
            cfg.iws_threshold = t
            points.append((f"t={t}", cfg))
    elif axis == "goggles_method":
        if config.method != "goggles":
            raise ValueError("clustering sweeps need method goggles")
        values = list(values or goggles_engine.METHODS)
        for i, m in enumerate(values):
            cfg = _clone_config(config, i)
            cfg.goggles_method = m
            points.append((f"cluster={m}", cfg))
    else:
        raise ValueError(f"unknown sweep axis {axis!r}")
    return points


def _clone_config(config: RunConfig, index: int) -> RunConfig:
    cfg = RunConfig(
        manifest=config.manifest,
        method=config.method,
        provenance=config.provenance,
        label_model=config.label_model,
        synthesis=SynthesisConfig.from_json(config.synthesis.to_json()),
        seed=derive_seed(config.seed, index),
        out_dir=config.out_dir,
        fill_policy=config.fill_policy,
        iws_threshold=config.iws_threshold,
        goggles_method=config.goggles_method,
        min_pool=config.min_pool,
        use_external_votes=config.use_external_votes,
        label_budget=config.label_budget,
    )
    return cfg


def sweep(config: RunConfig, axis: str, values=None, draws: int = 3,
          workers: Optional[int] = None) -> dict:
    """One run per grid point; assembles error and coverage objective
    tables for the profile machinery. Incompatible points become NaN cells."""
    points = _sweep_points(config, axis, values, draws)
    sweep_dir = Path(config.out_dir)
    sweep_dir.mkdir(parents=True, exist_ok=True)

    reports = [None] * len(points)
    workers = workers or min(len(points), os.cpu_count() or 1)
    if workers <= 1:
        for i, (_, cfg) in enumerate(points):
            reports[i] = run(cfg)
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(run, cfg): i for i, (_, cfg) in enumerate(points)}
            for fut in concurrent.futures.as_completed(futures):
                reports[futures[fut]] = fut.result()

    names = [name for name, _ in points]
    problem = json.loads(Path(config.manifest).read_text(encoding="utf-8"))["name"]
    err = np.full((len(points), 1), np.nan)
    cov = np.full((len(points), 1), np.nan)
    for i, report in enumerate(reports):
        if report["status"] == "ok" and "accuracy_covered" in report:
            err[i, 0] = 1.0 - report["accuracy_covered"]
            cov[i, 0] = 1.0 - report["coverage"]
    error_table = ObjectiveTable(names, [problem], err, "classification_error")
    coverage_table = ObjectiveTable(names, [problem], cov, "one_minus_coverage")
    eval_profiles.write_objective_table(sweep_dir / f"sweep_{axis}_error.csv", error_table)
    eval_profiles.write_objective_table(sweep_dir / f"sweep_{axis}_coverage.csv",
                                        coverage_table)
    summary = {
        "axis": axis,
        "points": names,
        "runs": [{"point": n, "run_id": r["run_id"], "status": r["status"],
                  "accuracy_covered": r.get("accuracy_covered"),
                  "coverage": r.get("coverage")}
                 for n, r in zip(names, reports)],
        "tables": {"error": f"sweep_{axis}_error.csv",
                   "coverage": f"sweep_{axis}_coverage.csv"},
    }
    (sweep_dir / f"sweep_{axis}_summary.json").write_text(
        json.dumps(summary, indent=1, sort_keys=True), encoding="ascii")
    return summary


# ---------------------------------------------------------------------------
# command-line interface


def _add_synthesis_flags(p: argparse.ArgumentParser):
    p.add_argument("--cardinality", type=int, default=1)
    p.add_argument("--max-candidates", type=int, default=1000)
    p.add_argument("--learner-kinds", default="stump,logistic",
                   help="comma list out of stump,logistic,knn")
    p.add_argument("--max-lfs-per-class", type=int, default=3)
    p.add_argument("--min-improvement", type=float, default=0.02)
    p.add_argument("--selection-metric", default="micro_f1")
    p.add_argument("--threshold-metric", default="weighted_f1")


def _synthesis_from_args(args) -> SynthesisConfig:
    return SynthesisConfig(
        cardinality=args.cardinality,
        max_candidates=args.max_candidates,
        learner_kinds=tuple(k for k in args.learner_kinds.split(",") if k),
        selection_weights=MetricWeights.one_hot(args.selection_metric),
        threshold_weights=MetricWeights.one_hot(args.threshold_metric),
        max_lfs_per_class=args.max_lfs_per_class,
        min_improvement=args.min_improvement,
        seed=args.seed,
    )


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--provenance")
    p.add_argument("--label-model", default="dawid_skene", choices=LABEL_MODELS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="runs")
    p.add_argument("--fill", default="none", choices=label_model.FILL_POLICIES)
    p.add_argument("--iws-threshold", type=float)
    p.add_argument("--goggles-method", default="gmm", choices=goggles_engine.METHODS)
    p.add_argument("--min-pool", type=int, default=iws_engine.DEFAULT_MIN_POOL)
    p.add_argument("--with-external-votes", action="store_true")
    p.add_argument("--config", help="JSON file overriding flag defaults")
    _add_synthesis_flags(p)


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig(
        manifest=args.manifest,
        method=args.method,
        provenance=args.provenance,
        label_model=args.label_model,
        synthesis=_synthesis_from_args(args),
        seed=args.seed,
        out_dir=args.out,
        fill_policy=args.fill,
        iws_threshold=args.iws_threshold,
        goggles_method=args.goggles_method,
        min_pool=args.min_pool,
        use_external_votes=args.with_external_votes,
    )
    if args.config:
        blob = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if "synthesis" in blob:
            cfg.synthesis = SynthesisConfig.from_json(blob.pop("synthesis"))
        for key, value in blob.items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown config key {key!r}")
            setattr(cfg, key, value)
        cfg.__post_init__()
    return cfg


def cmd_ingest(args) -> int:
    matrices = {}
    for split in ("train", "val", "test"):
        path = getattr(args, split)
        if path:
            matrices[split] = data_model.FeatureMatrix(
                io_csv.read_matrix(path), args.provenance)
    if "train" not in matrices or "val" not in matrices:
        print("ingest needs --train and --val", file=sys.stderr)
        return EXIT_ERROR

    def transform(fm):
        if args.standardize:
            fm = data_model.standardize(fm)
        if args.bit_reversal:
            fm = data_model.bit_reversal_permute(fm, args.bit_reversal)
        return fm

    matrices = {k: transform(v) for k, v in matrices.items()}
    if args.pca:
        model = data_model.fit_pca(matrices["train"], args.pca)
        matrices = {k: data_model.apply_pca(model, v) for k, v in matrices.items()}

    names = args.class_names.split(",") if args.class_names \
        else [f"class{i}" for i in range(args.classes)]
    labels = {}
    for split in ("train", "val", "test"):
        path = getattr(args, f"{split}_labels")
        if path:
            raw = io_csv.read_labels(path)
            labels[split] = data_model.LabelVector(raw, args.classes, names)
    if "val" not in labels:
        print("ingest needs --val-labels", file=sys.stderr)
        return EXIT_ERROR

    bundle = DatasetBundle(
        name=args.name,
        train_features=matrices["train"],
        val_features=matrices["val"],
        val_labels=labels["val"],
        test_features=matrices.get("test"),
        test_labels=labels.get("test"),
        train_labels=labels.get("train"),
    )
    from .datagen import write_bundle_manifest

    path = write_bundle_manifest(bundle, args.out,
                                 include_train_labels="train" in labels)
    print(f"manifest written: {path}")
    return EXIT_OK


def cmd_run(args) -> int:
    config = _config_from_args(args)
    if config.method == "iws_interactive":
        print("iws_interactive is served interactively: use `autoweak serve`",
              file=sys.stderr)
        return EXIT_ERROR
    report = run(config)
    print(json.dumps(report, indent=1, sort_keys=True))
    return EXIT_NA if report["status"].startswith("n/a") else EXIT_OK


def cmd_sweep(args) -> int:
    config = _config_from_args(args)
    values = args.values.split(",") if args.values else None
    summary = sweep(config, args.axis, values, draws=args.draws, workers=args.workers)
    print(json.dumps(summary, indent=1, sort_keys=True))
    return EXIT_OK


def cmd_profile(args) -> int:
    tables = [eval_profiles.read_objective_table(p) for p in args.tables]
    base = tables[0]
    for other in tables[1:]:
        if other.methods != base.methods:
            print("profile tables must share their method axis", file=sys.stderr)
            return EXIT_ERROR
        base = ObjectiveTable(base.methods, base.problems + other.problems,
                              np.hstack([base.values, other.values]),
                              base.objective_kind)
    grid = eval_profiles.default_tau_grid(args.points, args.tau_max)
    curves = eval_profiles.performance_profile(base, grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    eval_profiles.write_profile_curves(out / "profile_curves.csv",
                                       out / "profile_curves.json", curves)
    print(f"profile curves written under {out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .iws_service import create_app

    config = _config_from_args(args)
    if config.method != "iws_interactive":
        print("serve requires --method iws_interactive", file=sys.stderr)
        return EXIT_ERROR
    try:
        bundle, _ = _load_for_run(config)
        pool = iws_engine.build_pool(bundle, config.synthesis, config.min_pool)
    except Incompatible as exc:
        print(f"n/a:{exc.code}: {exc.reason}", file=sys.stderr)
        return EXIT_NA
    except iws_engine.PoolTooSmallError as exc:
        print(f"n/a:pool_too_small: {exc}", file=sys.stderr)
        return EXIT_NA
    app = create_app(bundle, pool, Path(args.out) / "sessions", ui_dir=args.ui_dir)
    host, _, port = args.bind.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8601))
    return EXIT_OK


def cmd_replay(args) -> int:
    from .iws_service import read_verdict_log

    config = _config_from_args(args)
    bundle, _ = _load_for_run(config)
    pool = LFSet.load(args.pool)
    final = iws_engine.replay_session(bundle, pool, read_verdict_log(args.log))
    final.save(args.out_lfset)
    print(f"replayed {args.log}: {len(final.lfs)} LFs -> {args.out_lfset}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="autoweak",
        description="automated weak supervision benchmark runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build a manifest from matrix/label files")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--test")
    p.add_argument("--train-labels")
    p.add_argument("--val-labels", required=True)
    p.add_argument("--test-labels")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--class-names")
    p.add_argument("--name", required=True)
    p.add_argument("--provenance", default="raw")
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--pca", type=int)
    p.add_argument("--bit-reversal", type=int, metavar="SIDE")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("run", help="run one method end to end")
    _add_run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="ablation sweep along one axis")
    _add_run_flags(p)
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", help="comma list of grid values")
    p.add_argument("--draws", type=int, default=3,
                   help="draw count for metric_weights sweeps")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("profile", help="performance profiles from objective tables")
    p.add_argument("--tables", nargs="+", required=True)
    p.add_argument("--out", default="profiles")
    p.add_argument("--tau-max", type=float, default=32.0)
    p.add_argument("--points", type=int, default=100)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("serve", help="host the interactive vetting service")
    _add_run_flags(p)
    p.add_argument("--bind", default="127.0.0.1:8601")
    p.add_argument("--ui-dir", help="static vetting UI bundle to host")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="rebuild a final LF set from a verdict log")
    _add_run_flags(p)
    p.add_argument("--pool", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--out-lfset", required=True)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
