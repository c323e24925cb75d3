from tankloc.evaluation.anova import AnovaResult, one_way_anova
from tankloc.evaluation.metrics import (
    FoldMetrics,
    SummaryStats,
    confusion_matrix,
    macro_prf,
    summarize,
)
from tankloc.evaluation.roc import OvrRocResult, RocCurve, binary_roc, roc_ovr
from tankloc.evaluation.scott_knott import ScottKnottGrouping, SplitDiagnostic, scott_knott
from tankloc.evaluation.tradeoff import TradeoffPoint, tradeoff_front
from tankloc.evaluation.report import (
    PredictionRow,
    emit_report,
    read_predictions,
    write_predictions,
)

__all__ = [
    "AnovaResult",
    "FoldMetrics",
    "OvrRocResult",
    "PredictionRow",
    "RocCurve",
    "ScottKnottGrouping",
    "SplitDiagnostic",
    "SummaryStats",
    "TradeoffPoint",
    "binary_roc",
    "confusion_matrix",
    "emit_report",
    "macro_prf",
    "one_way_anova",
    "read_predictions",
    "roc_ovr",
    "scott_knott",
    "summarize",
    "tradeoff_front",
    "write_predictions",
]
