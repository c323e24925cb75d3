"""Image decoding, the fixed 256x256 resize, and training augmentation.

Decoding honors embedded EXIF orientation before any geometry op
(smartphone photos routinely carry rotation tags). Augmentation is pure
numpy and fully determined by the generator passed in, in the fixed order
flips -> rotation -> crop -> perspective.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, ImageOps

from tankloc.dataset.manifest import ImageRecord
from tankloc.errors import ConfigError, ImageDecodeError

TARGET_SIDE = 256


@dataclass(frozen=True)
class Normalization:
    """Per-channel mean/std applied to [0,1] pixel values."""

    mean: tuple[float, float, float]
    std: tuple[float, float, float]

    def apply(self, img: np.ndarray) -> np.ndarray:
        mean = np.asarray(self.mean, dtype=np.float32)
        std = np.asarray(self.std, dtype=np.float32)
        return (img - mean) / std

    def unapply(self, img: np.ndarray) -> np.ndarray:
        mean = np.asarray(self.mean, dtype=np.float32)
        std = np.asarray(self.std, dtype=np.float32)
        return img * std + mean

    @classmethod
    def identity(cls) -> "Normalization":
        return cls(mean=(0.0, 0.0, 0.0), std=(1.0, 1.0, 1.0))


# Published channel statistics of the pretraining corpus used by the
# backbone providers; transfer learning requires matching them.
IMAGENET_NORMALIZATION = Normalization(
    mean=(0.485, 0.456, 0.406), std=(0.229, 0.224, 0.225)
)


def decode_image(source: str | Path | bytes, record_id: str | None = None) -> Image.Image:
    """Decode to an RGB PIL image with EXIF orientation applied."""
    try:
        if isinstance(source, bytes):
            im = Image.open(io.BytesIO(source))
        else:
            im = Image.open(source)
        im = ImageOps.exif_transpose(im)
        return im.convert("RGB")
    except ImageDecodeError:
        raise
    except Exception as exc:
        raise ImageDecodeError(f"cannot decode image: {exc}", record_id=record_id) from exc


def load_and_resize(
    record: ImageRecord | str | Path | bytes,
    side: int = TARGET_SIDE,
    normalization: Normalization = IMAGENET_NORMALIZATION,
) -> np.ndarray:
    """Decode, resize to exactly (side, side), normalize; float32 HWC."""
    if isinstance(record, ImageRecord):
        im = decode_image(record.path, record_id=record.record_id)
    else:
        im = decode_image(record)
    if im.size != (side, side):
        im = im.resize((side, side), Image.BILINEAR)
    arr = np.asarray(im, dtype=np.float32) / 255.0
    return normalization.apply(arr).astype(np.float32)


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Classic 2-tap bilinear resize (half-pixel centers, clamped edges)."""
    in_h, in_w = img.shape[:2]
    if (in_h, in_w) == (out_h, out_w):
        return img.astype(np.float32, copy=True)

    def axis_coords(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        centers = (np.arange(n_out, dtype=np.float64) + 0.5) * n_in / n_out - 0.5
        lo = np.floor(centers).astype(np.int64)
        frac = (centers - lo).astype(np.float32)
        lo0 = np.clip(lo, 0, n_in - 1)
        lo1 = np.clip(lo + 1, 0, n_in - 1)
        return lo0, lo1, frac

    y0, y1, fy = axis_coords(in_h, out_h)
    x0, x1, fx = axis_coords(in_w, out_w)
    img = img.astype(np.float32)
    top = img[y0][:, x0] * (1 - fx)[None, :, None] + img[y0][:, x1] * fx[None, :, None]
    bot = img[y1][:, x0] * (1 - fx)[None, :, None] + img[y1][:, x1] * fx[None, :, None]
    return (top * (1 - fy)[:, None, None] + bot * fy[:, None, None]).astype(np.float32)


@dataclass(frozen=True)
class CropConfig:
    # Upscale to pre_resize_side, then cut a random out_side window:
    # ~12% jitter margin while keeping the required 256 output.
    pre_resize_side: int = 288
    out_side: int = TARGET_SIDE


@dataclass(frozen=True)
class PerspectiveConfig:
    prob: float = 0.5
    distortion_scale: float = 0.5


@dataclass(frozen=True)
class AugmentConfig:
    hflip_prob: float = 0.5
    vflip_prob: float = 0.5
    rotation_choices: tuple[int, ...] = (0, 90, 180, 270)
    crop: CropConfig | None = field(default_factory=CropConfig)
    perspective: PerspectiveConfig | None = field(default_factory=PerspectiveConfig)
    seed: int = 0

    def __post_init__(self):
        for name in ("hflip_prob", "vflip_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {p}")
        if self.perspective is not None and not 0.0 <= self.perspective.prob <= 1.0:
            raise ConfigError(f"perspective.prob must be in [0, 1], got {self.perspective.prob}")
        if not set(self.rotation_choices) <= {0, 90, 180, 270}:
            raise ConfigError(f"rotation_choices must be within (0, 90, 180, 270), got {self.rotation_choices}")
        if self.crop is not None:
            if self.crop.out_side != TARGET_SIDE:
                raise ConfigError(f"crop.out_side must be {TARGET_SIDE}, got {self.crop.out_side}")
            if self.crop.pre_resize_side < self.crop.out_side:
                raise ConfigError("crop.pre_resize_side must be >= crop.out_side")

    @classmethod
    def identity(cls) -> "AugmentConfig":
        return cls(hflip_prob=0.0, vflip_prob=0.0, rotation_choices=(0,), crop=None, perspective=None)


def _perspective_warp(img: np.ndarray, cfg: PerspectiveConfig, rng: np.random.Generator) -> np.ndarray:
    h, w = img.shape[:2]
    dx = int(cfg.distortion_scale * (w // 2))
    dy = int(cfg.distortion_scale * (h // 2))
    topleft = (rng.integers(0, dx + 1), rng.integers(0, dy + 1))
    topright = (w - 1 - rng.integers(0, dx + 1), rng.integers(0, dy + 1))
    botright = (w - 1 - rng.integers(0, dx + 1), h - 1 - rng.integers(0, dy + 1))
    botleft = (rng.integers(0, dx + 1), h - 1 - rng.integers(0, dy + 1))
    start = [(0, 0), (w - 1, 0), (w - 1, h - 1), (0, h - 1)]
    end = [topleft, topright, botright, botleft]

    # Homography taking output corners (end) back to input corners (start),
    # for inverse warping.
    a = np.zeros((8, 8), dtype=np.float64)
    b = np.zeros(8, dtype=np.float64)
    for i, ((ex, ey), (sx, sy)) in enumerate(zip(end, start)):
        a[2 * i] = [ex, ey, 1, 0, 0, 0, -sx * ex, -sx * ey]
        a[2 * i + 1] = [0, 0, 0, ex, ey, 1, -sy * ex, -sy * ey]
        b[2 * i] = sx
        b[2 * i + 1] = sy
    coef = np.linalg.solve(a, b)

    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    denom = coef[6] * xs + coef[7] * ys + 1.0
    src_x = (coef[0] * xs + coef[1] * ys + coef[2]) / denom
    src_y = (coef[3] * xs + coef[4] * ys + coef[5]) / denom

    inside = (src_x >= 0) & (src_x <= w - 1) & (src_y >= 0) & (src_y <= h - 1)
    x0 = np.clip(np.floor(src_x), 0, w - 1).astype(np.int64)
    y0 = np.clip(np.floor(src_y), 0, h - 1).astype(np.int64)
    x1 = np.clip(x0 + 1, 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)
    fx = (src_x - x0).astype(np.float32)[..., None]
    fy = (src_y - y0).astype(np.float32)[..., None]
    out = (
        img[y0, x0] * (1 - fx) * (1 - fy)
        + img[y0, x1] * fx * (1 - fy)
        + img[y1, x0] * (1 - fx) * fy
        + img[y1, x1] * fx * fy
    )
    out[~inside] = 0.0
    return out.astype(np.float32)


def augment(img: np.ndarray, cfg: AugmentConfig, rng: np.random.Generator) -> np.ndarray:
    """Apply flips -> rotation -> crop -> perspective; 256x256x3 out."""
    if img.ndim != 3 or img.shape[2] != 3:
        raise ConfigError(f"augment expects an HxWx3 image, got shape {img.shape}")
    out = img
    if cfg.hflip_prob > 0 and rng.random() < cfg.hflip_prob:
        out = out[:, ::-1]
    if cfg.vflip_prob > 0 and rng.random() < cfg.vflip_prob:
        out = out[::-1]
    if cfg.rotation_choices:
        degrees = int(rng.choice(np.asarray(sorted(cfg.rotation_choices))))
        if degrees:
            out = np.rot90(out, k=degrees // 90)
    if cfg.crop is not None:
        pre = cfg.crop.pre_resize_side
        side = cfg.crop.out_side
        out = bilinear_resize(out, pre, pre)
        top = int(rng.integers(0, pre - side + 1))
        left = int(rng.integers(0, pre - side + 1))
        out = out[top : top + side, left : left + side]
    if cfg.perspective is not None and cfg.perspective.prob > 0 and rng.random() < cfg.perspective.prob:
        out = _perspective_warp(np.ascontiguousarray(out), cfg.perspective, rng)
    return np.array(out, dtype=np.float32, copy=True)
