import json

import numpy as np
import pytest

from autoweak import io_csv
from autoweak.bench_cli import (
    EXIT_NA,
    EXIT_OK,
    RunConfig,
    derive_seed,
    main,
    run,
    sweep,
)
from autoweak.datagen import gaussian_blob_bundle, write_bundle_manifest
from autoweak.eval_profiles import read_objective_table
from autoweak.lf_engine import SynthesisConfig


@pytest.fixture(scope="module")
def blob_manifest(tmp_path_factory):
    root = tmp_path_factory.mktemp("blobs")
    bundle = gaussian_blob_bundle(n=200, m=60, d=4, classes=2, sep=5.0,
                                  sigma=0.4, seed=0)
    return str(write_bundle_manifest(bundle, root))


@pytest.fixture(scope="module")
def logits_manifest(tmp_path_factory):
    # provenance carries per-class logits; width = C = 3
    root = tmp_path_factory.mktemp("logits")
    rng = np.random.default_rng(1)
    labels = rng.integers(0, 3, size=80)
    logits = np.eye(3)[labels] * 4 + rng.normal(size=(80, 3))
    from autoweak.data_model import DatasetBundle, FeatureMatrix, LabelVector

    names = ["a", "b", "c"]
    bundle = DatasetBundle(
        name="logits3",
        train_features=FeatureMatrix(logits[:60], "external:clip_logits"),
        val_features=FeatureMatrix(logits[60:], "external:clip_logits"),
        val_labels=LabelVector(labels[60:], 3, names),
        train_labels=LabelVector(labels[:60], 3, names),
    )
    return str(write_bundle_manifest(bundle, root))


def small_synth(**kw):
    base = dict(cardinality=1, learner_kinds=("stump",), max_candidates=50)
    base.update(kw)
    return SynthesisConfig(**base)


class TestRun:
    @pytest.mark.parametrize("method,label_model", [
        ("snuba_unipolar", "dawid_skene"),
        ("snuba_multipolar", "majority"),
        ("iws_auto", "majority"),
        ("goggles", "dawid_skene"),
        ("few_shot", "majority"),
        ("label_prop", "majority"),
    ])
    def test_methods_end_to_end(self, blob_manifest, tmp_path, method, label_model):
        # d=4 stump-only gives iws an 8-candidate pool, under the minimum
        kinds = ("stump", "logistic") if method == "iws_auto" else ("stump",)
        config = RunConfig(manifest=blob_manifest, method=method,
                           label_model=label_model,
                           synthesis=small_synth(learner_kinds=kinds),
                           out_dir=str(tmp_path), seed=3)
        report = run(config)
        assert report["status"] == "ok"
        assert report["eval_split"] == "train"
        assert report["accuracy_covered"] >= 0.7
        assert 0.0 <= report["coverage"] <= 1.0
        run_dir = tmp_path / report["run_id"]
        assert (run_dir / "weak_labels_train.csv").is_file()
        assert (run_dir / "pr_curves.json").is_file()

    def test_zero_shot_ok_when_width_matches(self, logits_manifest, tmp_path):
        config = RunConfig(manifest=logits_manifest, method="zero_shot",
                           out_dir=str(tmp_path))
        report = run(config)
        assert report["status"] == "ok"
        assert report["coverage"] == 1.0
        assert report["accuracy_covered"] >= 0.9

    def test_zero_shot_na_on_width_mismatch(self, blob_manifest, tmp_path):
        config = RunConfig(manifest=blob_manifest, method="zero_shot",
                           out_dir=str(tmp_path))
        report = run(config)
        assert report["status"] == "n/a:logit_width"
        assert "logit width mismatch" in report["reason"]

    def test_iws_pool_too_small_is_na(self, tmp_path):
        bundle = gaussian_blob_bundle(n=60, m=30, d=2, classes=2, seed=5)
        manifest = write_bundle_manifest(bundle, tmp_path / "data")
        config = RunConfig(manifest=str(manifest), method="iws_auto",
                           synthesis=small_synth(), out_dir=str(tmp_path / "runs"))
        report = run(config)
        assert report["status"] == "n/a:pool_too_small"

    def test_missing_provenance_is_na_modality(self, blob_manifest, tmp_path):
        config = RunConfig(manifest=blob_manifest, method="few_shot",
                           provenance="external:clip_logits", out_dir=str(tmp_path))
        report = run(config)
        assert report["status"] == "n/a:modality"

    def test_cache_serves_second_run(self, blob_manifest, tmp_path):
        config = RunConfig(manifest=blob_manifest, method="few_shot",
                           out_dir=str(tmp_path), seed=1)
        first = run(config)
        report_path = tmp_path / first["run_id"] / "report.json"
        before = report_path.read_bytes()
        second = run(RunConfig(manifest=blob_manifest, method="few_shot",
                               out_dir=str(tmp_path), seed=1))
        assert second.get("cached") is True
        assert report_path.read_bytes() == before
        stripped = dict(second)
        stripped.pop("cached")
        assert stripped == first

    def test_determinism_across_directories(self, blob_manifest, tmp_path):
        reports = []
        for sub in ("a", "b"):
            config = RunConfig(manifest=blob_manifest, method="snuba_unipolar",
                               synthesis=small_synth(), seed=7,
                               out_dir=str(tmp_path / sub))
            reports.append(run(config))
        dir_a = tmp_path / "a" / reports[0]["run_id"]
        dir_b = tmp_path / "b" / reports[1]["run_id"]
        assert dir_a.name == dir_b.name  # same content hash
        files_a = sorted(p.name for p in dir_a.iterdir())
        files_b = sorted(p.name for p in dir_b.iterdir())
        assert files_a == files_b
        for name in files_a:
            if name == "timing.json":  # wall clock, excluded by design
                continue
            assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes(), name

    def test_test_split_evaluation(self, tmp_path):
        bundle = gaussian_blob_bundle(n=150, m=50, d=4, classes=2, sep=5.0,
                                      sigma=0.4, seed=6, test_n=80)
        manifest = write_bundle_manifest(bundle, tmp_path / "data")
        config = RunConfig(manifest=str(manifest), method="snuba_unipolar",
                           synthesis=small_synth(), out_dir=str(tmp_path / "runs"))
        report = run(config)
        assert report["eval_split"] == "test"
        assert report["accuracy_covered"] >= 0.8
        assert (tmp_path / "runs" / report["run_id"] / "weak_labels_test.csv").is_file()

    def test_goggles_multi_provenance_stacking(self, tmp_path):
        rng = np.random.default_rng(9)
        labels = rng.integers(0, 2, size=140)
        raw = np.eye(2)[labels] * 4 + rng.normal(size=(140, 2)) * 0.4
        alt = np.hstack([raw @ rng.normal(size=(2, 3)), rng.normal(size=(140, 1))])
        root = tmp_path / "multi"
        root.mkdir()
        for tag, X in (("raw", raw), ("alt", alt)):
            io_csv.write_matrix(root / f"train_{tag}.csv", X[:100])
            io_csv.write_matrix(root / f"val_{tag}.csv", X[100:])
        io_csv.write_labels(root / "train_labels.txt", labels[:100])
        io_csv.write_labels(root / "val_labels.txt", labels[100:])
        manifest = {
            "name": "multiview",
            "classes": 2,
            "class_names": ["a", "b"],
            "splits": {
                "train": {"features": {"raw": "train_raw.csv", "alt": "train_alt.csv"},
                          "labels": "train_labels.txt"},
                "val": {"features": {"raw": "val_raw.csv", "alt": "val_alt.csv"},
                        "labels": "val_labels.txt"},
            },
        }
        (root / "manifest.json").write_text(json.dumps(manifest))

        config = RunConfig(manifest=str(root / "manifest.json"), method="goggles",
                           provenance="raw,alt", out_dir=str(tmp_path / "runs"))
        report = run(config)
        assert report["status"] == "ok"
        assert report["coverage"] == 1.0
        assert report["accuracy_covered"] >= 0.9

        with pytest.raises(ValueError, match="single provenance"):
            run(RunConfig(manifest=str(root / "manifest.json"), method="few_shot",
                          provenance="raw,alt", out_dir=str(tmp_path / "runs")))

    def test_external_votes_merge(self, tmp_path):
        bundle = gaussian_blob_bundle(n=100, m=40, d=4, classes=2, sep=5.0,
                                      sigma=0.4, seed=8)
        from autoweak.label_model import VoteMatrix

        bundle.external_votes = VoteMatrix(
            np.where(np.arange(100)[:, None] % 2 == 0,
                     bundle.train_labels.values[:, None], -1),
            ["hand0"], 2)
        manifest = write_bundle_manifest(bundle, tmp_path / "data")
        config = RunConfig(manifest=str(manifest), method="snuba_unipolar",
                           synthesis=small_synth(), use_external_votes=True,
                           out_dir=str(tmp_path / "runs"))
        report = run(config)
        assert report["status"] == "ok"
        votes_meta = json.loads((tmp_path / "runs" / report["run_id"]
                                 / "votes.csv.meta.json").read_text())
        assert any(i.startswith("external:") for i in votes_meta["lf_ids"])


class TestSweep:
    def test_cardinality_sweep_counts(self, blob_manifest, tmp_path):
        config = RunConfig(manifest=blob_manifest, method="snuba_unipolar",
                           synthesis=small_synth(), out_dir=str(tmp_path))
        summary = sweep(config, "cardinality", values=[1, 2], workers=1)
        assert summary["points"] == ["D=1", "D=2"]
        table = read_objective_table(tmp_path / "sweep_cardinality_error.csv")
        assert table.values.shape == (2, 1)
        assert table.objective_kind == "classification_error"
        # consistency bridge: table error = 1 - the run's covered accuracy
        for i, r in enumerate(summary["runs"]):
            assert table.values[i, 0] == pytest.approx(1.0 - r["accuracy_covered"])

    def test_metric_weight_draws_deterministic(self, blob_manifest, tmp_path):
        config = RunConfig(manifest=blob_manifest, method="snuba_unipolar",
                           synthesis=small_synth(), seed=5,
                           out_dir=str(tmp_path / "s1"))
        s1 = sweep(config, "metric_weights", draws=3, workers=1)
        config2 = RunConfig(manifest=blob_manifest, method="snuba_unipolar",
                            synthesis=small_synth(), seed=5,
                            out_dir=str(tmp_path / "s2"))
        s2 = sweep(config2, "metric_weights", draws=3, workers=1)
        assert [r["run_id"] for r in s1["runs"]] == [r["run_id"] for r in s2["runs"]]

    def test_budget_beyond_labels_errors(self, blob_manifest, tmp_path):
        config = RunConfig(manifest=blob_manifest, method="snuba_unipolar",
                           synthesis=small_synth(), out_dir=str(tmp_path))
        with pytest.raises(ValueError, match="budget exceeds available labels"):
            sweep(config, "label_budget", values=[50, 100], workers=1)

    def test_axis_method_mismatch(self, blob_manifest, tmp_path):
        config = RunConfig(manifest=blob_manifest, method="goggles",
                           out_dir=str(tmp_path))
        with pytest.raises(ValueError, match="cardinality sweeps"):
            sweep(config, "cardinality")

    def test_derive_seed_stable(self):
        assert derive_seed(42, 0) == derive_seed(42, 0)
        assert derive_seed(42, 0) != derive_seed(42, 1)
        assert 0 <= derive_seed(7, 3) < 2**63

    def test_worker_pool_matches_serial(self, blob_manifest, tmp_path):
        def do(out, workers):
            config = RunConfig(manifest=blob_manifest, method="snuba_unipolar",
                               synthesis=small_synth(), seed=2, out_dir=str(out))
            return sweep(config, "cardinality", values=[1, 2], workers=workers)

        serial = do(tmp_path / "serial", 1)
        threaded = do(tmp_path / "threaded", 2)
        assert [r["run_id"] for r in serial["runs"]] == \
            [r["run_id"] for r in threaded["runs"]]
        assert [r["accuracy_covered"] for r in serial["runs"]] == \
            [r["accuracy_covered"] for r in threaded["runs"]]


class TestCliEntry:
    def test_run_and_exit_codes(self, blob_manifest, tmp_path, capsys):
        rc = main(["run", "--manifest", blob_manifest, "--method", "few_shot",
                   "--out", str(tmp_path)])
        assert rc == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["status"] == "ok"

        rc = main(["run", "--manifest", blob_manifest, "--method", "zero_shot",
                   "--out", str(tmp_path)])
        assert rc == EXIT_NA

    def test_profile_command(self, blob_manifest, tmp_path, capsys):
        config = RunConfig(manifest=blob_manifest, method="snuba_unipolar",
                           synthesis=small_synth(), out_dir=str(tmp_path / "sw"))
        sweep(config, "cardinality", values=[1, 2], workers=1)
        rc = main(["profile", "--tables",
                   str(tmp_path / "sw" / "sweep_cardinality_error.csv"),
                   "--out", str(tmp_path / "prof")])
        assert rc == EXIT_OK
        curves = json.loads((tmp_path / "prof" / "profile_curves.json").read_text())
        assert {c["method"] for c in curves["curves"]} == {"D=1", "D=2"}
        assert (tmp_path / "prof" / "profile_curves.csv").is_file()

    def test_ingest_with_pca(self, tmp_path, capsys):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(50, 6))
        Xv = rng.normal(size=(20, 6))
        y = rng.integers(0, 2, size=20)
        io_csv.write_matrix(tmp_path / "X.csv", X)
        io_csv.write_matrix(tmp_path / "Xv.csv", Xv)
        io_csv.write_labels(tmp_path / "y.txt", y)
        rc = main(["ingest", "--train", str(tmp_path / "X.csv"),
                   "--val", str(tmp_path / "Xv.csv"),
                   "--val-labels", str(tmp_path / "y.txt"),
                   "--classes", "2", "--name", "tiny", "--pca", "3",
                   "--out", str(tmp_path / "out")])
        assert rc == EXIT_OK
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        tag = next(iter(manifest["splits"]["train"]["features"]))
        assert tag == "raw+pca3"
        from autoweak.data_model import load_bundle

        bundle = load_bundle(tmp_path / "out" / "manifest.json")
        assert bundle.d == 3

    def test_ingest_standardize_and_bit_reversal(self, tmp_path):
        rng = np.random.default_rng(4)
        X = rng.normal(3.0, 2.0, size=(30, 16))  # 4x4 grids
        Xv = rng.normal(3.0, 2.0, size=(10, 16))
        io_csv.write_matrix(tmp_path / "X.csv", X)
        io_csv.write_matrix(tmp_path / "Xv.csv", Xv)
        io_csv.write_labels(tmp_path / "y.txt", rng.integers(0, 2, size=10))
        rc = main(["ingest", "--train", str(tmp_path / "X.csv"),
                   "--val", str(tmp_path / "Xv.csv"),
                   "--val-labels", str(tmp_path / "y.txt"),
                   "--classes", "2", "--name", "grid",
                   "--standardize", "--bit-reversal", "4",
                   "--out", str(tmp_path / "out")])
        assert rc == EXIT_OK
        from autoweak.data_model import load_bundle

        bundle = load_bundle(tmp_path / "out" / "manifest.json")
        assert bundle.train_features.provenance == "raw+std+bitrev4"
        # standardization happened before the (permutation) transform
        assert abs(bundle.train_features.values.mean()) < 1e-9

    def test_config_json_overrides_flags(self, blob_manifest, tmp_path, capsys):
        blob = {
            "method": "snuba_unipolar",
            "label_model": "majority",
            "seed": 9,
            "synthesis": small_synth(cardinality=2).to_json(),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(blob))
        rc = main(["run", "--manifest", blob_manifest, "--method", "few_shot",
                   "--out", str(tmp_path), "--config", str(cfg_path)])
        assert rc == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["method"] == "snuba_unipolar"
        assert report["label_model"] == "majority"
        assert report["config"]["seed"] == 9
        assert report["config"]["synthesis"]["cardinality"] == 2

    def test_bad_flag_value_is_error(self, blob_manifest, capsys):
        rc = main(["run", "--manifest", blob_manifest, "--method", "few_shot",
                   "--fill", "none", "--selection-metric", "not_a_metric"])
        assert rc == 1
        assert "error" in capsys.readouterr().err
