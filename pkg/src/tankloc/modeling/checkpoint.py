"""Trained-model checkpoints: prediction, save, and load."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from tankloc.dataset.images import Normalization
from tankloc.errors import ConfigError, ShapeMismatchError
from tankloc.modeling.registry import INPUT_SIDE, build_model

META_FILE = "checkpoint.json"
WEIGHTS_FILE = "checkpoint.pt"
SCHEMA_VERSION = 1


@dataclass
class ModelCheckpoint:
    backbone: str
    classes: tuple[str, ...]
    fold: int
    config_hash: str
    normalization: Normalization
    model: nn.Module | None = None

    def __post_init__(self):
        if self.model is not None:
            head_out = None
            for m in self.model.modules():
                if isinstance(m, nn.Linear):
                    head_out = m.out_features
            if head_out is not None and head_out != len(self.classes):
                raise ConfigError(
                    f"head emits {head_out} logits but checkpoint lists {len(self.classes)} classes"
                )


def _as_input_tensor(img: np.ndarray) -> tuple[torch.Tensor, bool]:
    arr = np.asarray(img, dtype=np.float32)
    single = arr.ndim == 3
    if single:
        arr = arr[None]
    if arr.ndim != 4 or arr.shape[1:] != (INPUT_SIDE, INPUT_SIDE, 3):
        raise ShapeMismatchError(
            f"expected image shape ({INPUT_SIDE}, {INPUT_SIDE}, 3) or a batch of it, got {np.asarray(img).shape}"
        )
    x = torch.from_numpy(arr).permute(0, 3, 1, 2).contiguous(memory_format=torch.channels_last)
    return x, single


def predict(ckpt: ModelCheckpoint, img: np.ndarray) -> np.ndarray:
    """Class-probability vector(s) for one normalized image or a batch.

    Softmax over the head logits: nonnegative entries summing to 1 per
    row, ordered by the checkpoint's class list.
    """
    if ckpt.model is None:
        raise ConfigError("checkpoint has no loaded model")
    x, single = _as_input_tensor(img)
    ckpt.model.eval()
    with torch.no_grad():
        probs = torch.softmax(ckpt.model(x), dim=-1).numpy()
    return probs[0] if single else probs


def save_checkpoint(ckpt: ModelCheckpoint, out_dir: str | Path) -> Path:
    if ckpt.model is None:
        raise ConfigError("cannot save a checkpoint without a model")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    torch.save(ckpt.model.state_dict(), out / WEIGHTS_FILE)
    meta = {
        "schema_version": SCHEMA_VERSION,
        "backbone": ckpt.backbone,
        "classes": list(ckpt.classes),
        "fold": ckpt.fold,
        "config_hash": ckpt.config_hash,
        "normalization": {"mean": list(ckpt.normalization.mean), "std": list(ckpt.normalization.std)},
    }
    (out / META_FILE).write_text(json.dumps(meta, indent=2, sort_keys=True))
    return out


def load_checkpoint(path: str | Path) -> ModelCheckpoint:
    path = Path(path)
    meta_path = path / META_FILE
    if not meta_path.is_file():
        raise ConfigError(f"no checkpoint metadata at {meta_path}")
    meta = json.loads(meta_path.read_text())
    if meta.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported checkpoint schema_version: {meta.get('schema_version')}")
    classes = tuple(meta["classes"])
    model = build_model(meta["backbone"], len(classes), pretrained=False)
    state = torch.load(path / WEIGHTS_FILE, map_location="cpu", weights_only=True)
    model.load_state_dict(state)
    model.eval()
    norm = meta["normalization"]
    return ModelCheckpoint(
        backbone=meta["backbone"],
        classes=classes,
        fold=int(meta["fold"]),
        config_hash=meta["config_hash"],
        normalization=Normalization(mean=tuple(norm["mean"]), std=tuple(norm["std"])),
        model=model,
    )
