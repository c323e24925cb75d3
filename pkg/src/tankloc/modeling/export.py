"""Portable deployment artifacts.

The embedded target serializes the network as a self-contained scripted
graph (TorchScript) with the class list and normalization constants
embedded, loadable without this package's model code; the mobile runtimes
consume exactly this format. The server target is the torch-native
checkpoint directory. Either way, reloading and predicting must reproduce
the checkpoint's probabilities within 1e-4.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from tankloc.dataset.images import Normalization
from tankloc.errors import ExportError
from tankloc.modeling.checkpoint import (
    ModelCheckpoint,
    _as_input_tensor,
    load_checkpoint,
    predict,
    save_checkpoint,
)
from tankloc.modeling.registry import INPUT_SIDE

META_KEY = "tankloc_meta.json"
EXPORT_SCHEMA_VERSION = 1


class _ProbabilityHead(nn.Module):
    """Wraps the classifier so the exported graph emits probabilities."""

    def __init__(self, model: nn.Module):
        super().__init__()
        self.model = model

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.model(x), dim=-1)


def export_checkpoint(
    ckpt: ModelCheckpoint, target: str, out_path: str | Path
) -> Path:
    """Write a deployment artifact; returns its path.

    target "embedded": scripted-graph file. target "server": checkpoint
    directory.
    """
    if target not in ("embedded", "server"):
        raise ExportError(f"unknown export target {target!r}; use 'embedded' or 'server'")
    if ckpt.model is None:
        raise ExportError("checkpoint has no built model to export")
    out_path = Path(out_path)
    if target == "server":
        return save_checkpoint(ckpt, out_path)

    ckpt.model.eval()
    wrapper = _ProbabilityHead(ckpt.model)
    example = torch.zeros(1, 3, INPUT_SIDE, INPUT_SIDE)
    try:
        with torch.no_grad():
            traced = torch.jit.trace(wrapper, example)
    except Exception as exc:
        raise ExportError(
            f"backbone {ckpt.backbone!r} is not supported by the embedded export path: {exc}"
        ) from exc
    meta = {
        "schema_version": EXPORT_SCHEMA_VERSION,
        "backbone": ckpt.backbone,
        "classes": list(ckpt.classes),
        "fold": ckpt.fold,
        "config_hash": ckpt.config_hash,
        "normalization": {"mean": list(ckpt.normalization.mean), "std": list(ckpt.normalization.std)},
        "target": "embedded",
    }
    out_path.parent.mkdir(parents=True, exist_ok=True)
    torch.jit.save(traced, str(out_path), _extra_files={META_KEY: json.dumps(meta)})
    return out_path


@dataclass
class ExportedModel:
    classes: tuple[str, ...]
    normalization: Normalization
    backbone: str
    _predict_fn: object

    def predict(self, img: np.ndarray) -> np.ndarray:
        return self._predict_fn(img)


def load_exported(path: str | Path) -> ExportedModel:
    """Load either artifact flavor back into a predictor."""
    path = Path(path)
    if path.is_dir():
        ckpt = load_checkpoint(path)
        return ExportedModel(
            classes=ckpt.classes,
            normalization=ckpt.normalization,
            backbone=ckpt.backbone,
            _predict_fn=lambda img: predict(ckpt, img),
        )

    extra = {META_KEY: ""}
    try:
        module = torch.jit.load(str(path), _extra_files=extra)
    except Exception as exc:
        raise ExportError(f"cannot load exported artifact {path}: {exc}") from exc
    meta = json.loads(extra[META_KEY])
    if meta.get("schema_version") != EXPORT_SCHEMA_VERSION:
        raise ExportError(f"unsupported export schema_version: {meta.get('schema_version')}")
    module.eval()
    norm = meta["normalization"]

    def jit_predict(img: np.ndarray) -> np.ndarray:
        x, single = _as_input_tensor(img)
        with torch.no_grad():
            probs = module(x).numpy()
        return probs[0] if single else probs

    return ExportedModel(
        classes=tuple(meta["classes"]),
        normalization=Normalization(mean=tuple(norm["mean"]), std=tuple(norm["std"])),
        backbone=meta["backbone"],
        _predict_fn=jit_predict,
    )
