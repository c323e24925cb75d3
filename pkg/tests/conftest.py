import io

import numpy as np
import pytest
import torch
from PIL import Image
from torch import nn

from tankloc.dataset.manifest import DatasetManifest, ImageRecord

# Production corpus shape: the 24 tank classes with their real image counts.
TANK_CLASS_COUNTS = {
    "Africa": 265,
    "Amazon rapids": 78,
    "America": 196,
    "Asia": 61,
    "Australian lake": 143,
    "Caiman": 85,
    "Cavefish": 81,
    "Creeks": 116,
    "Electric fish": 85,
    "Europe": 182,
    "External": 212,
    "Flooded plain": 264,
    "Flooded plain (dry)": 95,
    "Flooded plain (flooding)": 233,
    "Mimicry": 116,
    "Neotropic": 229,
    "Oceania": 104,
    "Pufferfish": 110,
    "Resurgences": 71,
    "Rivers of Bonito": 413,
    "Rivers of Pantanal": 172,
    "Paths": 114,
    "Veredas": 59,
    "Waterfall bay": 170,
}

DEVICE_COUNTS = [264, 316, 181, 109, 148, 316, 627, 481, 829, 383]


def make_manifest(class_counts: dict[str, int]) -> DatasetManifest:
    """In-memory manifest with the given per-class record counts."""
    records = []
    for label, n in class_counts.items():
        for i in range(n):
            rid = f"{label}/img_{i:04d}.jpg"
            records.append(ImageRecord(record_id=rid, path=rid, class_label=label))
    return DatasetManifest(records=tuple(records), classes=tuple(sorted(class_counts)))


def tiny_png_bytes(color=(120, 30, 200), size=(8, 8)) -> bytes:
    buf = io.BytesIO()
    Image.new("RGB", size, color).save(buf, format="PNG")
    return buf.getvalue()


def write_image_tree(root, class_counts: dict[str, int], size=(8, 8)):
    """Class-per-directory tree of small decodable PNGs."""
    blob_cache = {}
    for label, n in class_counts.items():
        d = root / label
        d.mkdir(parents=True)
        for i in range(n):
            color = (i * 37 % 256, 80, 10)
            if color not in blob_cache:
                blob_cache[color] = tiny_png_bytes(color, size)
            (d / f"img_{i:04d}.png").write_bytes(blob_cache[color])


@pytest.fixture
def small_tree(tmp_path):
    write_image_tree(tmp_path / "corpus", {"reef": 3, "river": 3})
    return tmp_path / "corpus"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# Well-separated base colors for synthetic texture classes.
PALETTE = np.array(
    [
        (200, 40, 40),
        (40, 200, 40),
        (40, 40, 200),
        (200, 200, 40),
        (200, 40, 200),
        (40, 200, 200),
        (230, 140, 30),
        (120, 70, 190),
    ],
    dtype=np.float64,
)


def texture_image(class_idx: int, rng: np.random.Generator, side: int = 256) -> np.ndarray:
    """One synthetic image: class color plus class-frequency stripes.

    Per-image jitter (base-color shift, stripe phase/orientation, noise)
    keeps within-class variance high enough that small-batch training
    generalizes instead of memorizing, while classes stay far apart in
    mean color.
    """
    base = PALETTE[class_idx % len(PALETTE)] + rng.uniform(-25, 25, size=3)
    phase = rng.uniform(0, 2 * np.pi)
    xs = np.linspace(0, 2 * np.pi * (class_idx + 2), side) + phase
    stripes = 18.0 * np.sin(xs)[None, :, None]
    if rng.random() < 0.5:
        stripes = stripes.transpose(1, 0, 2)
    noise = rng.normal(0, 10.0, size=(side, side, 3))
    img = base[None, None, :] + stripes + noise
    return np.clip(img, 0, 255).astype(np.uint8)


def texture_corpus(n_classes: int, per_class: int, side: int = 256, seed: int = 0):
    """(images uint8 N x side x side x 3, labels int64 N), class-ordered."""
    rng = np.random.default_rng(seed)
    images = np.empty((n_classes * per_class, side, side, 3), dtype=np.uint8)
    labels = np.empty(n_classes * per_class, dtype=np.int64)
    i = 0
    for ci in range(n_classes):
        for _ in range(per_class):
            images[i] = texture_image(ci, rng, side)
            labels[i] = ci
            i += 1
    return images, labels


def region_square(i: int) -> tuple:
    x = float(i % 6)
    y = float(i // 6)
    return ((x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1))


def make_region_map(labels, adjacency=None):
    """RegionMap over the given class labels; chain adjacency by default."""
    from tankloc.localizer.region_map import Region, RegionMap

    n = len(labels)
    if adjacency is None:
        adjacency = {
            f"r{i}": tuple(f"r{j}" for j in (i - 1, i + 1) if 0 <= j < n) for i in range(n)
        }
    regions = tuple(
        Region(
            region_id=f"r{i}",
            class_label=label,
            display_name=label.title(),
            polygon=region_square(i),
            adjacent=adjacency.get(f"r{i}", ()),
            trivia=f"About {label}.",
        )
        for i, label in enumerate(labels)
    )
    return RegionMap(regions=regions, bounds=(0.0, 0.0, 6.0, 6.0))


class TinyNet(nn.Module):
    """Minimal 256-input classifier for exercising the training loop."""

    def __init__(self, num_classes: int):
        super().__init__()
        self.conv = nn.Conv2d(3, 8, kernel_size=16, stride=16)
        self.act = nn.ReLU()
        self.pool = nn.AdaptiveAvgPool2d(2)
        self.fc = nn.Linear(8 * 4, num_classes)

    def forward(self, x):
        x = self.pool(self.act(self.conv(x))).flatten(1)
        return self.fc(x)


def tiny_streams(n_classes=4, per_class=12, val_per_class=4, seed=0, augment_cfg=None):
    """Small train/val FoldStream pair over the texture corpus."""
    from tankloc.dataset.images import Normalization
    from tankloc.modeling.training import FoldStream

    images, labels = texture_corpus(n_classes, per_class + val_per_class, seed=seed)
    classes = tuple(f"class{i}" for i in range(n_classes))
    train_idx, val_idx = [], []
    for ci in range(n_classes):
        idx = np.nonzero(labels == ci)[0]
        train_idx.extend(idx[:per_class])
        val_idx.extend(idx[per_class:])
    norm = Normalization.identity()
    train = FoldStream(
        images=images[train_idx], labels=labels[train_idx], classes=classes,
        normalization=norm, augment_cfg=augment_cfg,
    )
    val = FoldStream(
        images=images[val_idx], labels=labels[val_idx], classes=classes, normalization=norm,
    )
    return train, val
