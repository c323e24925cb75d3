"""End-to-end orchestration: train runs, evaluation, stats, calibration.

The CLI is a thin wrapper over these functions; tests drive them directly.
A run directory looks like:

    {out}/{run_id}/run.json
    {out}/{run_id}/{arch}/fold{j}/checkpoint.pt + checkpoint.json
    {out}/{run_id}/{arch}/fold{j}/trace.json
    {out}/{run_id}/{arch}/fold{j}/metrics.json       (written by evaluate)
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from tankloc.dataset.images import (
    IMAGENET_NORMALIZATION,
    AugmentConfig,
    CropConfig,
    Normalization,
    PerspectiveConfig,
    decode_image,
)
from tankloc.dataset.manifest import DatasetManifest, manifest_hash
from tankloc.dataset.splits import SplitPlan, carve_validation
from tankloc.errors import ConfigError
from tankloc.evaluation.anova import one_way_anova
from tankloc.evaluation.metrics import confusion_matrix, macro_prf, summarize
from tankloc.evaluation.report import (
    PredictionRow,
    emit_report,
    read_predictions,
    write_predictions,
)
from tankloc.evaluation.roc import roc_ovr
from tankloc.evaluation.scott_knott import scott_knott
from tankloc.evaluation.tradeoff import tradeoff_front
from tankloc.localizer.decision import DecisionPolicy, calibrate_thresholds
from tankloc.modeling.checkpoint import load_checkpoint, predict, save_checkpoint
from tankloc.modeling.registry import INPUT_SIDE, backbone_spec, build_model, count_parameters
from tankloc.modeling.training import FoldStream, TrainConfig, train_fold
from tankloc.seeds import derived_seed

log = logging.getLogger(__name__)

RUN_SCHEMA_VERSION = 1
RUN_FILE = "run.json"
TRACE_FILE = "trace.json"
METRICS_FILE = "metrics.json"

METRIC_KEYS = ("precision", "recall", "fscore")


def load_resized_uint8(path_or_bytes, side: int = INPUT_SIDE) -> np.ndarray:
    """Decode and resize to (side, side); uint8 HWC, unnormalized."""
    im = decode_image(path_or_bytes)
    if im.size != (side, side):
        im = im.resize((side, side), 2)  # PIL BILINEAR
    return np.asarray(im, dtype=np.uint8)


def build_image_cache(m: DatasetManifest, side: int = INPUT_SIDE) -> dict[str, np.ndarray]:
    """record_id -> resized uint8 image, loaded once per run."""
    return {r.record_id: load_resized_uint8(r.path, side) for r in m.records}


def _stream(
    m: DatasetManifest,
    record_ids: list[str],
    cache: dict[str, np.ndarray],
    normalization: Normalization,
    augment_cfg: AugmentConfig | None = None,
) -> FoldStream:
    class_index = {c: i for i, c in enumerate(m.classes)}
    label_of = {r.record_id: class_index[r.class_label] for r in m.records}
    images = np.stack([cache[rid] for rid in record_ids]) if record_ids else np.zeros(
        (0, INPUT_SIDE, INPUT_SIDE, 3), dtype=np.uint8
    )
    labels = np.asarray([label_of[rid] for rid in record_ids], dtype=np.int64)
    return FoldStream(
        images=images,
        labels=labels,
        classes=m.classes,
        normalization=normalization,
        augment_cfg=augment_cfg,
        record_ids=tuple(record_ids),
    )


def build_fold_streams(
    m: DatasetManifest,
    plan: SplitPlan,
    fold: int,
    cache: dict[str, np.ndarray],
    normalization: Normalization = IMAGENET_NORMALIZATION,
    augment_cfg: AugmentConfig | None = None,
) -> tuple[FoldStream, FoldStream]:
    train_ids, val_ids = carve_validation(m, plan, fold, plan.val_frac)
    return (
        _stream(m, train_ids, cache, normalization, augment_cfg),
        _stream(m, val_ids, cache, normalization),
    )


def build_eval_stream(
    m: DatasetManifest,
    plan: SplitPlan,
    fold: int,
    cache: dict[str, np.ndarray],
    role: str = "test",
    normalization: Normalization = IMAGENET_NORMALIZATION,
) -> FoldStream:
    if role == "test":
        ids = plan.test_ids(fold)
    elif role == "val":
        ids = sorted(plan.val_of[fold])
    else:
        raise ConfigError(f"role must be 'test' or 'val', got {role!r}")
    return _stream(m, ids, cache, normalization)


@dataclass
class RunRecord:
    run_id: str
    manifest_hash: str
    split_seed: int
    k: int
    archs: list[str]
    folds: list[int]
    train_config: dict
    augment_config: dict | None
    params_by_arch: dict[str, int] = field(default_factory=dict)
    artifacts: dict[str, dict[str, str]] = field(default_factory=dict)
    schema_version: int = RUN_SCHEMA_VERSION

    def save(self, run_dir: Path) -> None:
        (run_dir / RUN_FILE).write_text(json.dumps(asdict(self), indent=2, sort_keys=True))

    @classmethod
    def load(cls, run_dir: str | Path) -> "RunRecord":
        path = Path(run_dir) / RUN_FILE
        if not path.is_file():
            raise ConfigError(f"no run record at {path}")
        data = json.loads(path.read_text())
        if data.get("schema_version") != RUN_SCHEMA_VERSION:
            raise ConfigError(f"unsupported run schema_version: {data.get('schema_version')}")
        return cls(**data)


def default_augment_config(seed: int = 0) -> AugmentConfig:
    return AugmentConfig(
        hflip_prob=0.5,
        vflip_prob=0.5,
        rotation_choices=(0, 90, 180, 270),
        crop=CropConfig(),
        perspective=PerspectiveConfig(),
        seed=seed,
    )


def run_training(
    m: DatasetManifest,
    plan: SplitPlan,
    archs: list[str],
    folds: list[int],
    out_dir: str | Path,
    cfg: TrainConfig,
    augment_cfg: AugmentConfig | None,
    run_id: str | None = None,
    normalization: Normalization = IMAGENET_NORMALIZATION,
    trainer=None,
    builder=None,
    cache: dict[str, np.ndarray] | None = None,
) -> RunRecord:
    """Train every (architecture, fold) pair and persist the artifacts.

    ``trainer`` and ``builder`` default to train_fold and build_model;
    they are injectable for orchestration tests.
    """
    trainer = trainer or train_fold
    builder = builder or build_model
    for name in archs:
        backbone_spec(name)  # fail fast on unknown names
    for fold in folds:
        plan._check_fold(fold)
    run_id = run_id or time.strftime("run-%Y%m%d-%H%M%S")
    run_dir = Path(out_dir) / run_id
    run_dir.mkdir(parents=True, exist_ok=True)

    if cache is None:
        cache = build_image_cache(m)
    record = RunRecord(
        run_id=run_id,
        manifest_hash=manifest_hash(m),
        split_seed=plan.seed,
        k=plan.k,
        archs=list(archs),
        folds=list(folds),
        train_config=asdict(cfg),
        augment_config=asdict(augment_cfg) if augment_cfg else None,
    )
    for ai, arch in enumerate(archs):
        record.artifacts[arch] = {}
        for fold in folds:
            fold_dir = run_dir / arch / f"fold{fold}"
            log.info("training %s fold %d", arch, fold)
            model = builder(arch, len(m.classes), pretrained=cfg.pretrained)
            if arch not in record.params_by_arch:
                record.params_by_arch[arch] = count_parameters(model)
            train_s, val_s = build_fold_streams(m, plan, fold, cache, normalization, augment_cfg)
            fold_cfg = replace(cfg, seed=derived_seed(cfg.seed, ai, fold))
            ckpt, trace = trainer(model, train_s, val_s, fold_cfg, backbone=arch, fold=fold)
            save_checkpoint(ckpt, fold_dir)
            (fold_dir / TRACE_FILE).write_text(json.dumps(trace.to_dict(), indent=2))
            record.artifacts[arch][str(fold)] = str(fold_dir.relative_to(run_dir))
    record.save(run_dir)
    return record


def run_evaluation(
    run_dir: str | Path,
    m: DatasetManifest,
    plan: SplitPlan,
    out_path: str | Path,
    role: str = "test",
    normalization: Normalization = IMAGENET_NORMALIZATION,
    cache: dict[str, np.ndarray] | None = None,
    batch_size: int = 32,
) -> Path:
    """Predict every trained (arch, fold) on its held-out records."""
    run_dir = Path(run_dir)
    record = RunRecord.load(run_dir)
    if cache is None:
        cache = build_image_cache(m)
    rows: list[PredictionRow] = []
    for arch in record.archs:
        for fold in record.folds:
            fold_dir = run_dir / record.artifacts[arch][str(fold)]
            ckpt = load_checkpoint(fold_dir)
            if ckpt.classes != m.classes:
                raise ConfigError(
                    f"checkpoint at {fold_dir} was trained on different classes than the manifest"
                )
            stream = build_eval_stream(m, plan, fold, cache, role, normalization)
            if len(stream):
                scores = np.concatenate(
                    [
                        predict(ckpt, _normalized(stream, s, batch_size))
                        for s in range(0, len(stream), batch_size)
                    ]
                )
            else:
                scores = np.zeros((0, len(m.classes)))
            fold_rows = [
                PredictionRow(
                    fold=fold,
                    arch=arch,
                    record_id=stream.record_ids[i],
                    true_label=m.classes[stream.labels[i]],
                    scores=tuple(float(x) for x in scores[i]),
                )
                for i in range(len(stream))
            ]
            rows.extend(fold_rows)
            _write_fold_metrics(fold_dir, fold_rows, m.classes)
    write_predictions(out_path, m.classes, rows)
    return Path(out_path)


def _normalized(stream: FoldStream, start: int, batch_size: int) -> np.ndarray:
    batch = stream.images[start : start + batch_size].astype(np.float32) / 255.0
    return stream.normalization.apply(batch)


def _write_fold_metrics(fold_dir: Path, rows: list[PredictionRow], classes) -> None:
    if not rows:
        return
    true = [r.true_label for r in rows]
    pred = [classes[int(np.argmax(r.scores))] for r in rows]
    fm = macro_prf(confusion_matrix(true, pred, classes))
    payload = {
        "n": len(rows),
        "macro_precision": fm.macro_precision,
        "macro_recall": fm.macro_recall,
        "macro_fscore": fm.macro_fscore,
        "confusion": fm.confusion.tolist(),
    }
    (fold_dir / METRICS_FILE).write_text(json.dumps(payload, indent=2))


def fold_metric_table(rows: list[PredictionRow], classes: list[str]) -> dict[str, dict[str, list[float]]]:
    """arch -> metric -> per-fold macro values (fold-sorted)."""
    by_arch_fold: dict[str, dict[int, list[PredictionRow]]] = {}
    for r in rows:
        by_arch_fold.setdefault(r.arch, {}).setdefault(r.fold, []).append(r)
    out: dict[str, dict[str, list[float]]] = {}
    for arch, by_fold in by_arch_fold.items():
        vals: dict[str, list[float]] = {k: [] for k in METRIC_KEYS}
        for fold in sorted(by_fold):
            fold_rows = by_fold[fold]
            true = [r.true_label for r in fold_rows]
            pred = [classes[int(np.argmax(r.scores))] for r in fold_rows]
            fm = macro_prf(confusion_matrix(true, pred, classes))
            vals["precision"].append(fm.macro_precision)
            vals["recall"].append(fm.macro_recall)
            vals["fscore"].append(fm.macro_fscore)
        out[arch] = vals
    return out


def run_stats(
    predictions_path: str | Path,
    out_dir: str | Path,
    params_by_arch: dict[str, int] | None = None,
    alpha: float = 0.05,
) -> list[Path]:
    """ANOVA + Scott-Knott + ROC + trade-off front, rendered to files."""
    classes, rows = read_predictions(predictions_path)
    if not rows:
        raise ConfigError(f"no prediction rows in {predictions_path}")
    table = fold_metric_table(rows, classes)
    archs = sorted(table)

    summaries = {a: {k: summarize(v) for k, v in table[a].items()} for a in archs}
    anovas = {}
    groupings = {}
    if len(archs) >= 2:
        for metric in METRIC_KEYS:
            groups = {a: table[a][metric] for a in archs}
            anovas[metric] = one_way_anova(groups)
            groupings[metric] = scott_knott(groups, alpha=alpha)

    curves = {}
    for arch in archs:
        arch_rows = [r for r in rows if r.arch == arch]
        scores = np.asarray([r.scores for r in arch_rows])
        truth = [r.true_label for r in arch_rows]
        curves[arch] = roc_ovr(scores, truth, classes)

    if params_by_arch is None:
        params_by_arch = {a: backbone_spec(a).expected_params for a in archs}
    front = tradeoff_front(
        [(a, params_by_arch[a], summaries[a]["fscore"].mean) for a in archs]
    )
    return emit_report(summaries, anovas, groupings, curves, front, out_dir)


def run_calibration(
    predictions_path: str | Path,
    target_fpr: float = 0.05,
    adjacency_boost: float = 0.25,
    prior_enabled: bool = False,
    arch: str | None = None,
) -> DecisionPolicy:
    """Thresholds from held-out validation scores (one architecture)."""
    classes, rows = read_predictions(predictions_path)
    archs = sorted({r.arch for r in rows})
    if arch is None:
        if len(archs) != 1:
            raise ConfigError(
                f"predictions cover several architectures {archs}; pass one explicitly"
            )
        arch = archs[0]
    rows = [r for r in rows if r.arch == arch]
    if not rows:
        raise ConfigError(f"no prediction rows for architecture {arch!r}")
    scores = np.asarray([r.scores for r in rows])
    truth = [r.true_label for r in rows]
    ovr = roc_ovr(scores, truth, classes)
    base = calibrate_thresholds(ovr.per_class, target_fpr)
    return replace(base, adjacency_boost=adjacency_boost, prior_enabled=prior_enabled)
