import numpy as np
import pytest

from tankloc import pipeline
from tankloc.dataset.images import Normalization
from tankloc.dataset.splits import carve_validation, stratified_kfold
from tankloc.errors import ConfigError
from tankloc.evaluation.report import PredictionRow, write_predictions

from conftest import make_manifest, texture_corpus


def fake_cache(manifest, seed=0):
    images, _ = texture_corpus(len(manifest.classes), 1, seed=seed)
    rng = np.random.default_rng(seed)
    cache = {}
    for r in manifest.records:
        ci = manifest.classes.index(r.class_label)
        cache[r.record_id] = images[ci]
    return cache


def test_build_fold_streams_matches_carve():
    m = make_manifest({"a": 20, "b": 30})
    plan = stratified_kfold(m, k=2, seed=4)
    cache = fake_cache(m)
    train, val = pipeline.build_fold_streams(
        m, plan, 0, cache, normalization=Normalization.identity()
    )
    train_ids, val_ids = carve_validation(m, plan, 0)
    assert len(train) == len(train_ids)
    assert len(val) == len(val_ids)
    assert train.record_ids == tuple(train_ids)
    assert set(train.record_ids) | set(val.record_ids) == set(plan.train_ids(0))
    # Labels index into the manifest class order.
    for i, rid in enumerate(train.record_ids):
        label = "a" if rid.startswith("a/") else "b"
        assert train.classes[train.labels[i]] == label


def test_build_eval_stream_roles():
    m = make_manifest({"a": 10, "b": 10})
    plan = stratified_kfold(m, k=2, seed=1)
    cache = fake_cache(m)
    test_stream = pipeline.build_eval_stream(m, plan, 1, cache, role="test")
    assert set(test_stream.record_ids) == set(plan.test_ids(1))
    val_stream = pipeline.build_eval_stream(m, plan, 1, cache, role="val")
    assert set(val_stream.record_ids) == plan.val_of[1]
    with pytest.raises(ConfigError):
        pipeline.build_eval_stream(m, plan, 1, cache, role="holdout")


def one_hot_rows(arch, fold, labels, predicted, classes):
    rows = []
    for i, (true, pred) in enumerate(zip(labels, predicted)):
        scores = [0.05] * len(classes)
        scores[classes.index(pred)] = 0.9
        rows.append(
            PredictionRow(
                fold=fold,
                arch=arch,
                record_id=f"{arch}-{fold}-{i}",
                true_label=true,
                scores=tuple(scores),
            )
        )
    return rows


def test_fold_metric_table_hand_computed():
    classes = ["x", "y"]
    rows = []
    # alpha: perfect on both folds.
    for fold in (0, 1):
        rows += one_hot_rows("alpha", fold, ["x", "x", "y", "y"], ["x", "x", "y", "y"], classes)
    # beta: one of two "y" samples predicted as "x" each fold:
    # precision x = 2/3, recall x = 1, precision y = 1, recall y = 1/2.
    for fold in (0, 1):
        rows += one_hot_rows("beta", fold, ["x", "x", "y", "y"], ["x", "x", "x", "y"], classes)
    table = pipeline.fold_metric_table(rows, classes)
    assert table["alpha"]["fscore"] == [1.0, 1.0]
    expected_precision = (2 / 3 + 1.0) / 2
    expected_recall = (1.0 + 0.5) / 2
    f_x = 2 * (2 / 3) / (2 / 3 + 1)
    f_y = 2 * 0.5 / 1.5
    for fold in (0, 1):
        assert table["beta"]["precision"][fold] == pytest.approx(expected_precision)
        assert table["beta"]["recall"][fold] == pytest.approx(expected_recall)
        assert table["beta"]["fscore"][fold] == pytest.approx((f_x + f_y) / 2)


def test_run_stats_writes_report(tmp_path):
    classes = ["x", "y"]
    rng = np.random.default_rng(0)
    rows = []
    for arch, flip in (("alpha", 0.05), ("beta", 0.4)):
        for fold in range(4):
            truth = rng.choice(classes, 20)
            predicted = [
                t if rng.random() > flip else ("y" if t == "x" else "x") for t in truth
            ]
            rows += one_hot_rows(arch, fold, truth, predicted, classes)
    preds = tmp_path / "preds.jsonl"
    write_predictions(preds, classes, rows)
    files = pipeline.run_stats(preds, tmp_path / "report", params_by_arch={"alpha": 100, "beta": 200})
    names = {f.name for f in files}
    assert {"metrics_summary.csv", "anova.csv", "grouping.json", "tradeoff_front.csv"} <= names


def test_run_calibration_needs_unique_arch(tmp_path):
    classes = ["x", "y"]
    rows = one_hot_rows("alpha", 0, ["x", "y"] * 4, ["x", "y"] * 4, classes)
    rows += one_hot_rows("beta", 0, ["x", "y"] * 4, ["x", "y"] * 4, classes)
    preds = tmp_path / "preds.jsonl"
    write_predictions(preds, classes, rows)
    with pytest.raises(ConfigError):
        pipeline.run_calibration(preds)
    policy = pipeline.run_calibration(preds, arch="alpha", target_fpr=0.2)
    assert set(policy.per_class_thresholds) == {"x", "y"}
