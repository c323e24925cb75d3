from tankloc.dataset.manifest import (
    DatasetManifest,
    ImageRecord,
    IngestReport,
    filter_min_count,
    ingest,
    load_manifest,
    manifest_hash,
    save_manifest,
)
from tankloc.dataset.splits import (
    SplitPlan,
    carve_validation,
    load_split,
    save_split,
    stratified_kfold,
)
from tankloc.dataset.images import (
    IMAGENET_NORMALIZATION,
    AugmentConfig,
    CropConfig,
    Normalization,
    PerspectiveConfig,
    augment,
    bilinear_resize,
    decode_image,
    load_and_resize,
)

__all__ = [
    "AugmentConfig",
    "CropConfig",
    "DatasetManifest",
    "IMAGENET_NORMALIZATION",
    "ImageRecord",
    "IngestReport",
    "Normalization",
    "PerspectiveConfig",
    "SplitPlan",
    "augment",
    "bilinear_resize",
    "carve_validation",
    "decode_image",
    "filter_min_count",
    "ingest",
    "load_and_resize",
    "load_manifest",
    "load_split",
    "manifest_hash",
    "save_manifest",
    "save_split",
    "stratified_kfold",
]
