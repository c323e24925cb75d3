"""Versioned run-configuration file.

One JSON file with sections mirroring the training recipe, the
augmentation settings, and the decision policy; CLI flags override file
values. Missing sections fall back to defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from tankloc.dataset.images import AugmentConfig, CropConfig, PerspectiveConfig
from tankloc.errors import ConfigError
from tankloc.localizer.decision import DecisionPolicy
from tankloc.modeling.training import TrainConfig

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RunFileConfig:
    train: TrainConfig
    augment: AugmentConfig | None
    policy: DecisionPolicy


def _augment_from_dict(d: dict | None) -> AugmentConfig | None:
    if d is None:
        return None
    crop = d.get("crop")
    perspective = d.get("perspective")
    return AugmentConfig(
        hflip_prob=d.get("hflip_prob", 0.5),
        vflip_prob=d.get("vflip_prob", 0.5),
        rotation_choices=tuple(d.get("rotation_choices", (0, 90, 180, 270))),
        crop=CropConfig(**crop) if crop else None,
        perspective=PerspectiveConfig(**perspective) if perspective else None,
        seed=d.get("seed", 0),
    )


def load_run_config(path: str | Path | None) -> RunFileConfig:
    if path is None:
        return RunFileConfig(train=TrainConfig(), augment=AugmentConfig(), policy=DecisionPolicy())
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {path}") from exc
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema_version: {data.get('schema_version')}")
    try:
        train = TrainConfig(**data.get("train", {}))
        augment = _augment_from_dict(data.get("augment", {}))
        policy = DecisionPolicy(**data.get("policy", {})) if data.get("policy") else DecisionPolicy()
    except TypeError as exc:
        raise ConfigError(f"bad config field: {exc}") from exc
    return RunFileConfig(train=train, augment=augment, policy=policy)
