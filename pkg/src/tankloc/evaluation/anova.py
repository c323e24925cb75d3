"""One-way analysis of variance across architecture groups."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from tankloc.errors import EvaluationError
from tankloc.evaluation.distributions import f_sf


@dataclass(frozen=True)
class AnovaResult:
    f_statistic: float
    p_value: float
    df_between: int
    df_within: int
    ss_between: float
    ss_within: float
    mse: float

    def __post_init__(self):
        if not (math.isinf(self.f_statistic) or self.f_statistic >= 0):
            raise EvaluationError(f"F statistic must be nonnegative, got {self.f_statistic}")
        if not 0.0 <= self.p_value <= 1.0:
            raise EvaluationError(f"p-value must be in [0, 1], got {self.p_value}")


def one_way_anova(groups: Mapping[str, Sequence[float]]) -> AnovaResult:
    """F test of equal group means.

    Degenerate inputs get sentinel results instead of NaNs: zero
    within-group variance with distinct means reports F=inf, p=0; all
    values identical reports F=0, p=1.
    """
    if len(groups) < 2:
        raise EvaluationError(f"ANOVA needs at least 2 groups, got {len(groups)}")
    arrays = {name: np.asarray(vals, dtype=np.float64) for name, vals in groups.items()}
    for name, arr in arrays.items():
        if arr.ndim != 1 or arr.size < 2:
            raise EvaluationError(f"group {name!r} needs at least 2 values")
        if not np.all(np.isfinite(arr)):
            raise EvaluationError(f"group {name!r} contains non-finite values")

    n_total = sum(a.size for a in arrays.values())
    grand = sum(a.sum() for a in arrays.values()) / n_total
    ss_between = float(sum(a.size * (a.mean() - grand) ** 2 for a in arrays.values()))
    ss_within = float(sum(((a - a.mean()) ** 2).sum() for a in arrays.values()))
    df_between = len(arrays) - 1
    df_within = n_total - len(arrays)
    mse = ss_within / df_within

    if ss_within == 0.0:
        if ss_between > 0.0:
            return AnovaResult(math.inf, 0.0, df_between, df_within, ss_between, 0.0, 0.0)
        return AnovaResult(0.0, 1.0, df_between, df_within, 0.0, 0.0, 0.0)

    f_stat = (ss_between / df_between) / mse
    return AnovaResult(
        f_statistic=f_stat,
        p_value=f_sf(f_stat, df_between, df_within),
        df_between=df_between,
        df_within=df_within,
        ss_between=ss_between,
        ss_within=ss_within,
        mse=mse,
    )
