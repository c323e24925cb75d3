"""Exception hierarchy shared across the package.

Every error carries a stable ``error_code`` so the CLI and the HTTP layer
can emit machine-readable failures without string matching.
"""

from __future__ import annotations


class TanklocError(Exception):
    """Base class for all package errors."""

    error_code = "INTERNAL"

    def __init__(self, message: str, detail: object = None):
        super().__init__(message)
        self.message = message
        self.detail = detail

    def to_json_dict(self) -> dict:
        return {
            "error_code": self.error_code,
            "message": self.message,
            "detail": self.detail,
        }


class ConfigError(TanklocError):
    """Invalid configuration value (bad probability, zero patience, ...)."""

    error_code = "CONFIG"


class IngestError(TanklocError):
    """Corpus root missing or unusable; no manifest can be produced."""

    error_code = "INGEST"


class ManifestError(TanklocError):
    """Manifest invariant violated (duplicate paths, empty class table, ...)."""

    error_code = "MANIFEST"


class SplitError(TanklocError):
    """Split plan cannot be built or is inconsistent with the manifest."""

    error_code = "SPLIT"


class ImageDecodeError(TanklocError):
    """An image file could not be decoded; carries the offending record id."""

    error_code = "IMAGE_DECODE"

    def __init__(self, message: str, record_id: str | None = None):
        super().__init__(message, detail={"record_id": record_id})
        self.record_id = record_id


class UnknownBackboneError(TanklocError):
    """Backbone name not present in the registry; lists valid names."""

    error_code = "UNKNOWN_BACKBONE"


class WeightFetchError(TanklocError):
    """Pretrained weights could not be obtained from the provider.

    ``retriable`` distinguishes transient fetch failures (network) from
    permanent ones (no published weights for a builtin backbone).
    """

    error_code = "WEIGHT_FETCH"

    def __init__(self, message: str, retriable: bool = True):
        super().__init__(message, detail={"retriable": retriable})
        self.retriable = retriable


class RegistryError(TanklocError):
    """Registry anchor violated (exact stock parameter count mismatch)."""

    error_code = "REGISTRY"


class TrainingDivergedError(TanklocError):
    """Non-finite loss; carries the epoch and batch where it happened."""

    error_code = "TRAINING_DIVERGED"

    def __init__(self, message: str, epoch: int, batch: int):
        super().__init__(message, detail={"epoch": epoch, "batch": batch})
        self.epoch = epoch
        self.batch = batch


class ShapeMismatchError(TanklocError):
    """Prediction input does not have the expected image shape."""

    error_code = "SHAPE_MISMATCH"


class ExportError(TanklocError):
    """Checkpoint export failed; message names the unsupported layer/op."""

    error_code = "EXPORT"


class EvaluationError(TanklocError):
    """Invalid metric input (unknown label, empty matrix, too few values)."""

    error_code = "EVALUATION"


class RegionMapError(TanklocError):
    """Region map failed validation; detail lists the offending regions."""

    error_code = "REGION_MAP"


class CalibrationError(TanklocError):
    """Threshold calibration got an empty or unusable curve."""

    error_code = "CALIBRATION"


class ReportError(TanklocError):
    """Report emission failed (inconsistent inputs or unwritable directory)."""

    error_code = "REPORT"
