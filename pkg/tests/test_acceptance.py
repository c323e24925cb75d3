"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with `pytest -s tests/test_acceptance.py` to see them
inline; any failure fails the suite either way). Timed criteria assert
their wall-clock budgets.
"""

import io
import json
import logging
import math
import time

import numpy as np
import pytest
import scipy.stats
from fastapi.testclient import TestClient
from PIL import Image

from tankloc import pipeline
from tankloc.dataset.splits import stratified_kfold
from tankloc.evaluation.anova import one_way_anova
from tankloc.evaluation.report import read_predictions
from tankloc.evaluation.roc import binary_roc, roc_ovr
from tankloc.evaluation.scott_knott import scott_knott
from tankloc.evaluation.tradeoff import tradeoff_front
from tankloc.localizer.decision import DecisionPolicy, apply_adjacency_prior, localize
from tankloc.modeling.checkpoint import load_checkpoint, predict
from tankloc.modeling.export import export_checkpoint, load_exported
from tankloc.modeling.registry import audit_parameters, smallest_backbone
from tankloc.modeling.training import TrainConfig
from tankloc.service.app import ServiceState, create_app

from conftest import TANK_CLASS_COUNTS, make_manifest, make_region_map, texture_corpus
from test_scott_knott import oracle_scott_knott
from test_service import StubPredictor
from test_tradeoff import REFERENCE_POINTS


def report(name: str, ok: bool, extra: str = ""):
    line = f"ACCEPTANCE {'PASS' if ok else 'FAIL'}: {name}"
    if extra:
        line += f" ({extra})"
    print(line)
    assert ok, line


# --- statistics oracles -------------------------------------------------


def test_statistics_oracle_suite():
    started = time.monotonic()
    rng = np.random.default_rng(42)
    groups = {
        f"arch{i}": (0.8 + 0.02 * i + rng.normal(0, 0.03, 10)).tolist() for i in range(7)
    }
    res = one_way_anova(groups)
    f_ref, p_ref = scipy.stats.f_oneway(*groups.values())
    ok_f = math.isclose(res.f_statistic, f_ref, rel_tol=1e-9)
    ok_p = math.isclose(res.p_value, p_ref, rel_tol=1e-9)
    elapsed = time.monotonic() - started
    report(
        "ANOVA F and p match the independent reference to 1e-9 relative",
        ok_f and ok_p and elapsed < 1.0,
        f"F={res.f_statistic:.6g}, p={res.p_value:.3e}, {elapsed:.3f}s",
    )


def test_scott_knott_planted_grouping():
    started = time.monotonic()
    rng = np.random.default_rng(1)
    groups = {}
    for i, mean in enumerate([0.9] * 3 + [0.5] * 3):
        groups[f"g{i}"] = (mean + rng.normal(0, 0.005, 10)).tolist()
    res = scott_knott(groups)
    recovered = [set(g) for g in res.groups] == [{"g0", "g1", "g2"}, {"g3", "g4", "g5"}]
    lettered = res.letters == ("a", "b")
    oracle_partition, oracle_cuts = oracle_scott_knott(groups)
    partitions_match = [tuple(g) for g in res.groups] == oracle_partition
    cuts_match = [(d.members, d.cut_index) for d in res.diagnostics] == oracle_cuts
    elapsed = time.monotonic() - started
    report(
        "Scott-Knott recovers the planted clusters and matches the exhaustive-lambda oracle",
        recovered and lettered and partitions_match and cuts_match and elapsed < 1.0,
        f"groups={res.groups}, {elapsed:.3f}s",
    )


def test_tradeoff_front_on_reference_data():
    started = time.monotonic()
    front = [p.name for p in tradeoff_front(REFERENCE_POINTS) if p.on_front]
    elapsed = time.monotonic() - started
    report(
        "trade-off front on reference sizes/f-scores is exactly {MobileNetV3, DenseNet121, LambdaResnet}",
        front == ["mobilenet_v3", "densenet121", "lambda_resnet"] and elapsed < 1.0,
        f"front={front}, {elapsed:.3f}s",
    )


def test_roc_properties():
    started = time.monotonic()
    perfect = binary_roc([0.9, 0.8, 0.7, 0.2, 0.1], [True, True, True, False, False])
    ok_perfect = abs(perfect.auc - 1.0) <= 1e-12

    rng = np.random.default_rng(0)
    random_auc = binary_roc(rng.random(10_000), rng.random(10_000) < 0.5).auc
    ok_random = abs(random_auc - 0.5) <= 0.02

    fixture = binary_roc([0.9, 0.8, 0.3, 0.4], [True, True, True, False])
    ok_fixture = fixture.auc == pytest.approx(2 / 3, abs=1e-15)

    elapsed = time.monotonic() - started
    report(
        "ROC: perfect AUC=1, random AUC~0.5, hand-computed fixture AUC=2/3",
        ok_perfect and ok_random and ok_fixture and elapsed < 5.0,
        f"random={random_auc:.4f}, {elapsed:.3f}s",
    )


def test_split_integrity_on_production_class_counts():
    started = time.monotonic()
    manifest = make_manifest(TANK_CLASS_COUNTS)
    assert len(manifest) == 3654
    plan = stratified_kfold(manifest, k=10, seed=42)
    counts = {f: dict.fromkeys(manifest.classes, 0) for f in range(10)}
    for record in manifest.records:
        counts[plan.fold_of[record.record_id]][record.class_label] += 1
    within = all(
        abs(counts[f][c] - n / 10) < 1
        for c, n in TANK_CLASS_COUNTS.items()
        for f in range(10)
    )
    bonito = sorted(counts[f]["Rivers of Bonito"] for f in range(10))
    bonito_ok = bonito == [41] * 7 + [42] * 3
    elapsed = time.monotonic() - started
    report(
        "stratified 10-fold plan holds every class within +-1 of n/10 (Rivers of Bonito = 3x42 + 7x41)",
        within and bonito_ok and elapsed < 5.0,
        f"bonito={bonito}, {elapsed:.3f}s",
    )


# --- end-to-end smoke ---------------------------------------------------


SMOKE_CLASSES = tuple(f"tank{i}" for i in range(8))


@pytest.fixture(scope="session")
def smoke_run(tmp_path_factory):
    """8 classes x 80 synthetic textures, smallest backbone, 2 folds,
    the training recipe (lr 0.001, batch 12, early stop 0.1/30)."""
    started = time.monotonic()
    arch = smallest_backbone()
    images, _ = texture_corpus(8, 80, seed=3)
    manifest = make_manifest({c: 80 for c in SMOKE_CLASSES})
    cache = {}
    i = 0
    for label in SMOKE_CLASSES:
        for j in range(80):
            cache[f"{label}/img_{j:04d}.jpg"] = images[i]
            i += 1
    plan = stratified_kfold(manifest, k=2, seed=11)
    cfg = TrainConfig(
        learning_rate=1e-3,
        batch_size=12,
        max_epochs=1000,
        early_stop_min_delta=0.1,
        early_stop_patience=30,
        seed=0,
        pretrained=False,
    )
    out_dir = tmp_path_factory.mktemp("smoke")
    record = pipeline.run_training(
        manifest, plan, [arch], [0, 1], out_dir, cfg, None, run_id="smoke", cache=cache
    )
    run_dir = out_dir / "smoke"
    preds_path = run_dir / "predictions.jsonl"
    pipeline.run_evaluation(run_dir, manifest, plan, preds_path, cache=cache)
    elapsed = time.monotonic() - started
    classes, rows = read_predictions(preds_path)
    table = pipeline.fold_metric_table(rows, classes)
    return {
        "arch": arch,
        "run_dir": run_dir,
        "record": record,
        "fold_fscores": table[arch]["fscore"],
        "elapsed": elapsed,
        "cache": cache,
        "manifest": manifest,
    }


@pytest.mark.slow
def test_end_to_end_smoke(smoke_run):
    fscores = smoke_run["fold_fscores"]
    elapsed = smoke_run["elapsed"]
    traces = [
        json.loads((smoke_run["run_dir"] / smoke_run["arch"] / f"fold{f}" / "trace.json").read_text())
        for f in (0, 1)
    ]
    report(
        "end-to-end smoke: smallest backbone, 2 folds, recipe -> macro f >= 0.95 per fold in <= 15 min",
        all(f >= 0.95 for f in fscores) and len(fscores) == 2 and elapsed <= 900.0,
        f"arch={smoke_run['arch']}, fscores={[f'{f:.4f}' for f in fscores]}, "
        f"epochs={[t['stopped_epoch'] for t in traces]}, {elapsed:.0f}s",
    )


@pytest.mark.slow
def test_export_roundtrip_on_smoke_checkpoint(smoke_run, tmp_path):
    ckpt = load_checkpoint(smoke_run["run_dir"] / smoke_run["arch"] / "fold0")
    artifact = export_checkpoint(ckpt, "embedded", tmp_path / "smoke.ts")
    loaded = load_exported(artifact)
    cache = smoke_run["cache"]
    keys = sorted(cache)[:: len(cache) // 32][:32]
    imgs = np.stack([cache[k] for k in keys]).astype(np.float32) / 255.0
    imgs = ckpt.normalization.apply(imgs)
    deviation = float(np.max(np.abs(predict(ckpt, imgs) - loaded.predict(imgs))))
    report(
        "embedded export reproduces server-side probabilities within 1e-4 on 32 fixture images",
        deviation <= 1e-4,
        f"max deviation {deviation:.2e}",
    )


# --- parameter anchors --------------------------------------------------


def test_parameter_count_anchors(caplog):
    started = time.monotonic()
    with caplog.at_level(logging.WARNING):
        audits = {a.name: a for a in audit_parameters()}
    exact_ok = (
        audits["resnet18"].counted == 11_689_512
        and audits["densenet121"].counted == 7_978_856
    )
    warned = {
        r.getMessage().split()[1] for r in caplog.records if "parameters" in r.getMessage()
    }
    others_ok = all(
        a.within_tolerance or a.name in warned
        for a in audits.values()
        if a.name not in ("resnet18", "densenet121")
    )
    elapsed = time.monotonic() - started
    report(
        "stock parameter counts: resnet18 and densenet121 exact; others within 5% or logged",
        exact_ok and others_ok and elapsed < 120.0,
        f"{ {n: a.counted for n, a in audits.items()} }, {elapsed:.1f}s",
    )


# --- localization contract ----------------------------------------------


def test_localization_contract():
    started = time.monotonic()
    labels = ["A", "B", "C", "D"]
    adjacency = {"r0": (), "r1": ("r2",), "r2": ("r1",), "r3": ()}
    region_map = make_region_map(labels, adjacency)

    # Threshold monotonicity: raising it never accepts a rejection.
    rng = np.random.default_rng(7)
    monotone = True
    for _ in range(200):
        p = rng.random(4)
        p /= p.sum()
        t1, t2 = sorted(rng.random(2))
        d1 = localize(p, DecisionPolicy(global_threshold=t1), region_map)
        d2 = localize(p, DecisionPolicy(global_threshold=t2), region_map)
        if d1.status == "rejected" and d2.status == "accepted":
            monotone = False

    # Prior identity at beta = 0.
    p = rng.random(4)
    p /= p.sum()
    identity_ok = np.allclose(
        apply_adjacency_prior(p, "r2", region_map, beta=0.0), p, atol=1e-15
    )

    # Derived argmax flip: A=0.40 vs B=0.38*1.25=0.475 with prev adjacent
    # only to B.
    flipped = apply_adjacency_prior(
        np.array([0.40, 0.38, 0.12, 0.10]), "r2", region_map, beta=0.25
    )
    flip_ok = int(flipped.argmax()) == 1

    # API contract: accepted / rejected / error paths on the stub model.
    accept_client = TestClient(
        create_app(
            ServiceState(
                predictor=StubPredictor([0.9, 0.05, 0.03, 0.02], classes=tuple(labels)),
                region_map=region_map,
                policy=DecisionPolicy(global_threshold=0.5),
            )
        )
    )
    buf = io.BytesIO()
    Image.new("RGB", (32, 32), (5, 5, 200)).save(buf, format="PNG")
    photo = buf.getvalue()
    accepted = accept_client.post(
        "/api/v1/localize", files={"image": ("p.png", photo, "image/png")}
    )
    api_accept_ok = accepted.status_code == 200 and accepted.json()["status"] == "accepted"

    reject_client = TestClient(
        create_app(
            ServiceState(
                predictor=StubPredictor([0.25] * 4, classes=tuple(labels)),
                region_map=region_map,
                policy=DecisionPolicy(global_threshold=0.5),
            )
        )
    )
    rejected = reject_client.post(
        "/api/v1/localize", files={"image": ("p.png", photo, "image/png")}
    )
    api_reject_ok = (
        rejected.status_code == 200
        and rejected.json()["status"] == "rejected"
        and rejected.json()["guidance"]
    )
    bad = reject_client.post(
        "/api/v1/localize", files={"image": ("p.png", b"\x00", "image/png")}
    )
    api_error_ok = bad.status_code == 400 and bad.json()["error_code"] == "IMAGE_DECODE"

    elapsed = time.monotonic() - started
    report(
        "localization contract: threshold monotonicity, beta=0 identity, argmax flip, API paths",
        monotone and identity_ok and flip_ok and api_accept_ok and api_reject_ok and api_error_ok
        and elapsed < 10.0,
        f"{elapsed:.2f}s",
    )
