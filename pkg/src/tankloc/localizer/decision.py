"""From class probabilities to an accept/reject localization decision.

The decision is the argmax class mapped to its region, accepted only when
its (optionally prior-adjusted) score clears the applicable threshold.
The adjacency prior multiplies scores of regions adjacent to (or equal
to) the visitor's last accepted region by (1 + beta) and renormalizes:
order-preserving within the boosted and unboosted sets, exactly removable
at beta = 0, and inert without a previous region.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from tankloc.errors import CalibrationError, ConfigError, RegionMapError
from tankloc.evaluation.roc import RocCurve
from tankloc.localizer.region_map import RegionMap

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

DEFAULT_ADJACENCY_BOOST = 0.25
DEFAULT_TARGET_FPR = 0.05


@dataclass(frozen=True)
class DecisionPolicy:
    global_threshold: float = 0.5
    per_class_thresholds: dict[str, float] = field(default_factory=dict)
    adjacency_boost: float = DEFAULT_ADJACENCY_BOOST
    prior_enabled: bool = False

    def __post_init__(self):
        if not 0.0 <= self.global_threshold <= 1.0:
            raise ConfigError(f"global_threshold must be in [0, 1], got {self.global_threshold}")
        for label, t in self.per_class_thresholds.items():
            if not 0.0 <= t <= 1.0:
                raise ConfigError(f"threshold for {label!r} must be in [0, 1], got {t}")
        if self.adjacency_boost < 0:
            raise ConfigError(f"adjacency_boost must be >= 0, got {self.adjacency_boost}")

    def threshold_for(self, class_label: str) -> float:
        return self.per_class_thresholds.get(class_label, self.global_threshold)


@dataclass(frozen=True)
class LocalizationDecision:
    status: str  # "accepted" | "rejected"
    region_id: str | None
    confidence: float
    ranked_alternatives: tuple[tuple[str, float], ...]
    prior_applied: bool


def apply_adjacency_prior(
    probs: np.ndarray,
    prev_region: str | None,
    region_map: RegionMap,
    beta: float = DEFAULT_ADJACENCY_BOOST,
    classes: Sequence[str] | None = None,
) -> np.ndarray:
    """Boost scores of regions adjacent to (or equal to) prev_region.

    score_i = p_i * (1 + beta) when region(i) is prev or adjacent to it,
    else p_i, renormalized to sum 1. Without prev_region this is the
    identity. Zero entries stay zero.
    """
    if beta < 0:
        raise ConfigError(f"adjacency boost must be >= 0, got {beta}")
    p = np.asarray(probs, dtype=np.float64)
    if classes is None:
        classes = region_map.class_labels
    if p.shape != (len(classes),):
        raise ConfigError(f"probability vector has shape {p.shape}, expected ({len(classes)},)")
    if prev_region is None:
        return p.copy()
    if prev_region not in region_map.by_id:
        raise RegionMapError(f"unknown prev_region {prev_region!r}")
    favored = set(region_map.by_id[prev_region].adjacent) | {prev_region}
    boost = np.array(
        [1.0 + beta if region_map.by_class[c].region_id in favored else 1.0 for c in classes]
    )
    scores = p * boost
    return scores / scores.sum()


def localize(
    probs: np.ndarray,
    policy: DecisionPolicy,
    region_map: RegionMap,
    prev_region: str | None = None,
    classes: Sequence[str] | None = None,
) -> LocalizationDecision:
    """Decide a region (or reject) from a class-probability vector.

    Ties at the argmax break toward the lowest class index. The per-class
    threshold overrides the global one; confidence is the winner's
    post-prior score.
    """
    if classes is None:
        classes = region_map.class_labels
    p = np.asarray(probs, dtype=np.float64)
    if p.shape != (len(classes),):
        raise ConfigError(f"probability vector has shape {p.shape}, expected ({len(classes)},)")

    prior_applied = policy.prior_enabled and prev_region is not None
    scores = (
        apply_adjacency_prior(p, prev_region, region_map, policy.adjacency_boost, classes)
        if prior_applied
        else p.astype(np.float64)
    )

    winner = int(np.argmax(scores))  # argmax returns the first (lowest) index on ties
    winner_class = classes[winner]
    region = region_map.by_class[winner_class]
    confidence = float(scores[winner])
    threshold = policy.threshold_for(winner_class)

    top = np.argsort(-scores, kind="stable")[:3]
    alternatives = tuple((classes[i], float(scores[i])) for i in top)

    if confidence >= threshold:
        return LocalizationDecision(
            status="accepted",
            region_id=region.region_id,
            confidence=confidence,
            ranked_alternatives=alternatives,
            prior_applied=prior_applied,
        )
    return LocalizationDecision(
        status="rejected",
        region_id=None,
        confidence=confidence,
        ranked_alternatives=alternatives,
        prior_applied=prior_applied,
    )


def calibrate_thresholds(
    per_class_curves: Mapping[str, RocCurve],
    target_fpr: float = DEFAULT_TARGET_FPR,
) -> DecisionPolicy:
    """Pick per-class thresholds from held-out ROC curves.

    Per class: the smallest curve threshold whose FPR stays within
    target_fpr (the most permissive setting that still honors the cap).
    When no finite point qualifies, the class becomes effectively
    reject-only (threshold 1.0) with a warning. The global threshold is
    the median of the per-class ones.
    """
    if not 0.0 <= target_fpr <= 1.0:
        raise ConfigError(f"target_fpr must be in [0, 1], got {target_fpr}")
    if not per_class_curves:
        raise CalibrationError("no curves given")
    thresholds: dict[str, float] = {}
    for label, curve in per_class_curves.items():
        if curve.fpr.size == 0:
            raise CalibrationError(f"empty ROC curve for class {label!r}")
        feasible = [
            t for f, t in zip(curve.fpr, curve.thresholds) if f <= target_fpr and np.isfinite(t)
        ]
        if not feasible:
            log.warning(
                "class %r: no operating point reaches FPR <= %.4g; threshold set to 1.0 (reject-only)",
                label,
                target_fpr,
            )
            thresholds[label] = 1.0
        else:
            thresholds[label] = float(min(feasible))
    return DecisionPolicy(
        global_threshold=float(np.median(list(thresholds.values()))),
        per_class_thresholds=thresholds,
    )


def save_policy(policy: DecisionPolicy, path: str | Path) -> None:
    data = {
        "schema_version": SCHEMA_VERSION,
        "global_threshold": policy.global_threshold,
        "per_class_thresholds": dict(sorted(policy.per_class_thresholds.items())),
        "adjacency_boost": policy.adjacency_boost,
        "prior_enabled": policy.prior_enabled,
    }
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True))


def load_policy(path: str | Path) -> DecisionPolicy:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"policy file not found: {path}") from exc
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported policy schema_version: {data.get('schema_version')}")
    return DecisionPolicy(
        global_threshold=float(data["global_threshold"]),
        per_class_thresholds={k: float(v) for k, v in data.get("per_class_thresholds", {}).items()},
        adjacency_boost=float(data.get("adjacency_boost", DEFAULT_ADJACENCY_BOOST)),
        prior_enabled=bool(data.get("prior_enabled", False)),
    )
