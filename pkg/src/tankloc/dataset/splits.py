"""Stratified k-fold split plans with a per-fold validation carve-out.

Fold assignment is per class: the class's records are shuffled with a
seed-derived stream and dealt round-robin from a random offset, so each
fold tests floor(n/k) or ceil(n/k) records of every class. The validation
carve takes a stratified fraction (default 20%) out of each fold's
training portion. Everything is a pure function of (manifest, k, seed).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from tankloc.dataset.manifest import DatasetManifest
from tankloc.errors import SplitError
from tankloc.seeds import STREAM_FOLD_ASSIGN, STREAM_VAL_CARVE, derived_rng

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

DEFAULT_VAL_FRAC = 0.2


@dataclass(frozen=True)
class SplitPlan:
    k: int
    seed: int
    fold_of: dict[str, int]
    val_of: dict[int, frozenset[str]] = field(default_factory=dict)
    val_frac: float = DEFAULT_VAL_FRAC

    def test_ids(self, fold: int) -> list[str]:
        self._check_fold(fold)
        return sorted(r for r, f in self.fold_of.items() if f == fold)

    def train_ids(self, fold: int) -> list[str]:
        """Training ids for ``fold``, validation members included."""
        self._check_fold(fold)
        return sorted(r for r, f in self.fold_of.items() if f != fold)

    def _check_fold(self, fold: int) -> None:
        if not 0 <= fold < self.k:
            raise SplitError(f"fold {fold} out of range for k={self.k}")


def stratified_kfold(m: DatasetManifest, k: int = 10, seed: int = 0) -> SplitPlan:
    """Assign every record to one of ``k`` folds, stratified by class."""
    if k < 2:
        raise SplitError(f"k must be >= 2, got {k}")
    counts = m.class_counts()
    empty = [c for c, n in counts.items() if n == 0]
    if empty:
        raise SplitError(f"classes without records cannot be stratified: {empty}")
    thin = [c for c, n in counts.items() if n < k]
    if thin:
        log.warning(
            "stratification is degenerate for classes with fewer than k=%d records: %s",
            k,
            ", ".join(thin),
        )

    fold_of: dict[str, int] = {}
    for ci, label in enumerate(m.classes):
        ids = sorted(r.record_id for r in m.records if r.class_label == label)
        rng = derived_rng(seed, STREAM_FOLD_ASSIGN, ci)
        rng.shuffle(ids)
        offset = int(rng.integers(k))
        for i, rid in enumerate(ids):
            fold_of[rid] = (i + offset) % k

    plan = SplitPlan(k=k, seed=seed, fold_of=fold_of)
    val_of = {f: frozenset(carve_validation(m, plan, f)[1]) for f in range(k)}
    return SplitPlan(k=k, seed=seed, fold_of=fold_of, val_of=val_of)


def carve_validation(
    m: DatasetManifest,
    plan: SplitPlan,
    fold: int,
    frac: float = DEFAULT_VAL_FRAC,
) -> tuple[list[str], list[str]]:
    """Split ``fold``'s training portion into (train ids, validation ids).

    Per class, round(frac * class train count) records go to validation
    (nearest-even at exact halves, which cannot occur for frac=0.2). A
    class whose train portion has fewer than 2 records contributes none,
    with a warning. The two lists are disjoint and their union is the
    fold's full training portion.
    """
    if not 0 <= frac < 1:
        raise SplitError(f"validation fraction must be in [0, 1), got {frac}")
    plan._check_fold(fold)
    train_set = set(plan.train_ids(fold))
    train_ids: list[str] = []
    val_ids: list[str] = []
    for ci, label in enumerate(m.classes):
        ids = sorted(
            r.record_id for r in m.records if r.class_label == label and r.record_id in train_set
        )
        if not ids:
            continue
        if len(ids) < 2:
            log.warning(
                "class %r has %d training record(s) in fold %d; no validation carved",
                label,
                len(ids),
                fold,
            )
            train_ids.extend(ids)
            continue
        n_val = round(frac * len(ids))
        rng = derived_rng(plan.seed, STREAM_VAL_CARVE, fold, ci)
        rng.shuffle(ids)
        val_ids.extend(ids[:n_val])
        train_ids.extend(ids[n_val:])
    return sorted(train_ids), sorted(val_ids)


def save_split(plan: SplitPlan, path: str | Path) -> None:
    data = {
        "schema_version": SCHEMA_VERSION,
        "k": plan.k,
        "seed": plan.seed,
        "val_frac": plan.val_frac,
        "fold_of": dict(sorted(plan.fold_of.items())),
        "val_of": {str(f): sorted(ids) for f, ids in sorted(plan.val_of.items())},
    }
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True))


def load_split(path: str | Path) -> SplitPlan:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise SplitError(f"split file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise SplitError(f"split file is not valid JSON: {path}") from exc
    if data.get("schema_version") != SCHEMA_VERSION:
        raise SplitError(f"unsupported split schema_version: {data.get('schema_version')}")
    return SplitPlan(
        k=int(data["k"]),
        seed=int(data["seed"]),
        fold_of={r: int(f) for r, f in data["fold_of"].items()},
        val_of={int(f): frozenset(ids) for f, ids in data["val_of"].items()},
        val_frac=float(data.get("val_frac", DEFAULT_VAL_FRAC)),
    )
