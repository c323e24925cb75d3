"""The training recipe: Adam on cross-entropy with early stopping.

Runs up to ``max_epochs`` epochs in fixed-size batches, monitors the
validation loss each epoch, stops after ``patience`` consecutive epochs
without an improvement greater than ``min_delta`` over the running best,
and checkpoints the best-epoch weights. Batch order, augmentation draws,
and weight init all derive from one seed, so two runs with the same seed
produce byte-identical traces on deterministic hardware.
"""

from __future__ import annotations

import hashlib
import json
import queue
import threading
from dataclasses import asdict, dataclass, field
from typing import Iterator

import numpy as np
import torch
from torch import nn

from tankloc.dataset.images import AugmentConfig, Normalization, augment
from tankloc.errors import ConfigError, TrainingDivergedError
from tankloc.seeds import STREAM_AUGMENT, STREAM_EPOCH, STREAM_TRAIN, derived_rng, derived_seed

VAL_BATCH_SIZE = 32
_PREFETCH_DEPTH = 3


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 12
    max_epochs: int = 1000
    early_stop_min_delta: float = 0.1  # validation-loss units
    early_stop_patience: int = 30
    seed: int = 0
    pretrained: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.early_stop_min_delta < 0:
            raise ConfigError(f"early_stop_min_delta must be >= 0, got {self.early_stop_min_delta}")
        if self.early_stop_patience < 1:
            raise ConfigError(f"early_stop_patience must be >= 1, got {self.early_stop_patience}")


def config_hash(cfg: TrainConfig) -> str:
    blob = json.dumps(asdict(cfg), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


class EarlyStopping:
    """Counter over epochs that fail to beat the best loss by > min_delta.

    The running best tracks the strict minimum (so best_epoch points at
    the first occurrence of the minimum); the improvement gate uses
    min_delta. Cannot fire before epoch patience + 1.
    """

    def __init__(self, min_delta: float = 0.1, patience: int = 30):
        if patience < 1:
            raise ConfigError(f"patience must be >= 1, got {patience}")
        if min_delta < 0:
            raise ConfigError(f"min_delta must be >= 0, got {min_delta}")
        self.min_delta = min_delta
        self.patience = patience
        self.best: float | None = None
        self.best_epoch = 0
        self.counter = 0
        self.epoch = 0

    def update(self, val_loss: float) -> bool:
        """Record one epoch's validation loss; True means stop now."""
        self.epoch += 1
        if self.best is None:
            self.best = val_loss
            self.best_epoch = self.epoch
            return False
        if self.best - val_loss > self.min_delta:
            self.counter = 0
        else:
            self.counter += 1
        if val_loss < self.best:
            self.best = val_loss
            self.best_epoch = self.epoch
        return self.counter >= self.patience


def early_stop_check(
    val_losses: list[float], min_delta: float = 0.1, patience: int = 30
) -> tuple[bool, int]:
    """Replay a loss sequence; (would training have stopped, best epoch).

    Epochs are 1-based. When the stop fires mid-sequence, later entries
    are ignored: training would never have produced them.
    """
    if not val_losses:
        raise ConfigError("val_losses must be non-empty")
    stopper = EarlyStopping(min_delta=min_delta, patience=patience)
    for loss in val_losses:
        if stopper.update(loss):
            return True, stopper.best_epoch
    return False, stopper.best_epoch


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float


@dataclass(frozen=True)
class TrainingTrace:
    epochs: tuple[EpochRecord, ...]
    stopped_epoch: int
    best_epoch: int
    stop_reason: str  # "early_stop" | "max_epochs"

    def __post_init__(self):
        if self.stop_reason not in ("early_stop", "max_epochs"):
            raise ConfigError(f"invalid stop_reason {self.stop_reason!r}")
        if not 1 <= self.best_epoch <= self.stopped_epoch:
            raise ConfigError(
                f"best_epoch {self.best_epoch} outside [1, stopped_epoch={self.stopped_epoch}]"
            )
        val = [r.val_loss for r in self.epochs]
        if min(val) != val[self.best_epoch - 1]:
            raise ConfigError("best_epoch does not index the minimum validation loss")

    def to_dict(self) -> dict:
        return {
            "epochs": [asdict(r) for r in self.epochs],
            "stopped_epoch": self.stopped_epoch,
            "best_epoch": self.best_epoch,
            "stop_reason": self.stop_reason,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingTrace":
        return cls(
            epochs=tuple(EpochRecord(**r) for r in d["epochs"]),
            stopped_epoch=d["stopped_epoch"],
            best_epoch=d["best_epoch"],
            stop_reason=d["stop_reason"],
        )


@dataclass
class FoldStream:
    """In-memory image stream for one side of a fold (train or val)."""

    images: np.ndarray  # N x side x side x 3, uint8, resized, unnormalized
    labels: np.ndarray  # N class indices
    classes: tuple[str, ...]
    normalization: Normalization
    augment_cfg: AugmentConfig | None = None
    record_ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.images.ndim != 4 or self.images.shape[0] != self.labels.shape[0]:
            raise ConfigError(
                f"stream images/labels mismatch: {self.images.shape} vs {self.labels.shape}"
            )

    def __len__(self) -> int:
        return int(self.labels.shape[0])


def _to_batch(
    images: np.ndarray,
    labels: np.ndarray,
    idx: np.ndarray,
    normalization: Normalization,
    augment_cfg: AugmentConfig | None,
    aug_rng: np.random.Generator | None,
) -> tuple[torch.Tensor, torch.Tensor]:
    batch = images[idx].astype(np.float32) / 255.0
    if augment_cfg is not None:
        batch = np.stack([augment(img, augment_cfg, aug_rng) for img in batch])
    batch = normalization.apply(batch)
    x = torch.from_numpy(batch).permute(0, 3, 1, 2).contiguous(memory_format=torch.channels_last)
    y = torch.from_numpy(labels[idx].astype(np.int64))
    return x, y


def _prefetched(gen: Iterator, depth: int = _PREFETCH_DEPTH) -> Iterator:
    """Run a generator in a worker thread so batch prep overlaps compute."""
    q: queue.Queue = queue.Queue(maxsize=depth)
    sentinel = object()
    error: list[BaseException] = []

    def worker():
        try:
            for item in gen:
                q.put(item)
        except BaseException as exc:  # re-raised on the consumer side
            error.append(exc)
        finally:
            q.put(sentinel)

    threading.Thread(target=worker, daemon=True).start()
    while True:
        item = q.get()
        if item is sentinel:
            if error:
                raise error[0]
            return
        yield item


def train_fold(
    model: nn.Module,
    train_stream: FoldStream,
    val_stream: FoldStream,
    cfg: TrainConfig,
    backbone: str = "",
    fold: int = 0,
):
    """Optimize the model on one fold; returns (checkpoint, trace).

    The checkpoint holds the best-epoch weights (minimum validation
    loss), not the last-epoch ones.
    """
    from tankloc.modeling.checkpoint import ModelCheckpoint

    if len(train_stream) == 0:
        raise ConfigError("training stream is empty")
    if len(val_stream) == 0:
        raise ConfigError("validation stream is empty")
    if train_stream.classes != val_stream.classes:
        raise ConfigError("train/validation streams disagree on the class list")
    n_classes = len(train_stream.classes)

    torch.manual_seed(derived_seed(cfg.seed, STREAM_TRAIN))
    torch.set_flush_denormal(True)
    model = model.to(memory_format=torch.channels_last)

    with torch.no_grad():
        probe_x, _ = _to_batch(
            train_stream.images, train_stream.labels, np.array([0]),
            train_stream.normalization, None, None,
        )
        out_dim = model(probe_x).shape[-1]
    if out_dim != n_classes:
        raise ConfigError(f"model head emits {out_dim} logits for {n_classes} classes")

    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    loss_fn = nn.CrossEntropyLoss()
    stopper = EarlyStopping(cfg.early_stop_min_delta, cfg.early_stop_patience)

    records: list[EpochRecord] = []
    best_state: dict | None = None
    best_val = float("inf")
    stop_reason = "max_epochs"
    stopped_epoch = cfg.max_epochs

    for epoch in range(1, cfg.max_epochs + 1):
        model.train()
        order = derived_rng(cfg.seed, STREAM_EPOCH, epoch).permutation(len(train_stream))
        aug_rng = derived_rng(cfg.seed, STREAM_AUGMENT, epoch)
        batches = (
            _to_batch(
                train_stream.images, train_stream.labels, order[s : s + cfg.batch_size],
                train_stream.normalization, train_stream.augment_cfg, aug_rng,
            )
            for s in range(0, len(train_stream), cfg.batch_size)
        )
        loss_sum = 0.0
        for bi, (x, y) in enumerate(_prefetched(batches)):
            optimizer.zero_grad(set_to_none=True)
            loss = loss_fn(model(x), y)
            if not torch.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch {bi}", epoch=epoch, batch=bi
                )
            loss.backward()
            optimizer.step()
            loss_sum += float(loss.detach()) * len(y)
        train_loss = loss_sum / len(train_stream)

        model.eval()
        val_sum = 0.0
        with torch.no_grad():
            for s in range(0, len(val_stream), VAL_BATCH_SIZE):
                idx = np.arange(s, min(s + VAL_BATCH_SIZE, len(val_stream)))
                x, y = _to_batch(
                    val_stream.images, val_stream.labels, idx,
                    val_stream.normalization, None, None,
                )
                val_sum += float(loss_fn(model(x), y)) * len(y)
        val_loss = val_sum / len(val_stream)

        records.append(EpochRecord(epoch=epoch, train_loss=train_loss, val_loss=val_loss))
        if val_loss < best_val:
            best_val = val_loss
            best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
        if stopper.update(val_loss):
            stop_reason = "early_stop"
            stopped_epoch = epoch
            break
        stopped_epoch = epoch

    model.load_state_dict(best_state)
    model.eval()
    trace = TrainingTrace(
        epochs=tuple(records),
        stopped_epoch=stopped_epoch,
        best_epoch=stopper.best_epoch,
        stop_reason=stop_reason,
    )
    checkpoint = ModelCheckpoint(
        backbone=backbone,
        classes=train_stream.classes,
        fold=fold,
        config_hash=config_hash(cfg),
        normalization=train_stream.normalization,
        model=model,
    )
    return checkpoint, trace
