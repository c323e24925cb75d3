from tankloc.modeling.registry import (
    BACKBONE_NAMES,
    BackboneSpec,
    ParamAudit,
    audit_parameters,
    backbone_spec,
    build_model,
    count_parameters,
)
from tankloc.modeling.training import (
    EarlyStopping,
    FoldStream,
    TrainConfig,
    TrainingTrace,
    early_stop_check,
    train_fold,
)
from tankloc.modeling.checkpoint import (
    ModelCheckpoint,
    load_checkpoint,
    predict,
    save_checkpoint,
)
from tankloc.modeling.export import ExportedModel, export_checkpoint, load_exported

__all__ = [
    "BACKBONE_NAMES",
    "BackboneSpec",
    "EarlyStopping",
    "ExportedModel",
    "FoldStream",
    "ModelCheckpoint",
    "ParamAudit",
    "TrainConfig",
    "TrainingTrace",
    "audit_parameters",
    "backbone_spec",
    "build_model",
    "count_parameters",
    "early_stop_check",
    "export_checkpoint",
    "load_checkpoint",
    "load_exported",
    "predict",
    "save_checkpoint",
    "train_fold",
]
