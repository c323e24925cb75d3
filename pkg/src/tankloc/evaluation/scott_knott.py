"""Scott-Knott clustering of treatment means.

Recursively bisects the descending-sorted means at the cut that maximizes
the between-group sum of squares B0, and keeps the cut when the likelihood
ratio lambda = pi/(2*(pi-2)) * B0 / sigma0^2 exceeds the upper-alpha
chi-square quantile with k/(pi-2) degrees of freedom, where sigma0^2 is
the maximum-likelihood scale estimate combining the node's mean spread
with the full-design residual mean square. Unlike pairwise post-hoc
procedures, the resulting groups can never overlap.

The method assumes a balanced design: every treatment must carry the same
number of replicates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from tankloc.errors import ConfigError, EvaluationError
from tankloc.evaluation.anova import one_way_anova
from tankloc.evaluation.distributions import chi2_isf

_LAMBDA_FACTOR = math.pi / (2.0 * (math.pi - 2.0))
_DOF_FACTOR = 1.0 / (math.pi - 2.0)


@dataclass(frozen=True)
class SplitDiagnostic:
    """Decision record for one examined node of the recursion."""

    members: tuple[str, ...]
    b0: float
    lambda_stat: float
    critical_value: float
    dof: float
    cut_index: int
    split: bool


@dataclass(frozen=True)
class ScottKnottGrouping:
    groups: tuple[tuple[str, ...], ...]
    letters: tuple[str, ...]
    means: dict[str, float]
    diagnostics: tuple[SplitDiagnostic, ...]

    def letter_of(self, name: str) -> str:
        for group, letter in zip(self.groups, self.letters):
            if name in group:
                return letter
        raise KeyError(name)


def _best_cut(means: Sequence[float]) -> tuple[int, float]:
    """Maximal-B0 contiguous cut; returns (cut index, B0)."""
    k = len(means)
    total = sum(means)
    best_j, best_b0 = 1, -math.inf
    left = 0.0
    for j in range(1, k):
        left += means[j - 1]
        right = total - left
        b0 = left * left / j + right * right / (k - j) - total * total / k
        if b0 > best_b0:
            best_j, best_b0 = j, b0
    return best_j, best_b0


def scott_knott(
    groups: Mapping[str, Sequence[float]], alpha: float = 0.05
) -> ScottKnottGrouping:
    """Partition architectures into statistically homogeneous groups."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    sizes = {len(vals) for vals in groups.values()}
    if len(sizes) != 1:
        raise EvaluationError(
            f"Scott-Knott assumes a balanced design; replicate counts differ: {sorted(sizes)}"
        )
    replicates = sizes.pop()

    anova = one_way_anova(groups)
    nu = anova.df_within
    mse = anova.mse

    means = {name: sum(vals) / len(vals) for name, vals in groups.items()}
    order = sorted(means, key=lambda n: (-means[n], n))

    diagnostics: list[SplitDiagnostic] = []
    leaves: list[tuple[str, ...]] = []

    def recurse(names: list[str]) -> None:
        k = len(names)
        if k == 1:
            leaves.append(tuple(names))
            return
        node_means = [means[n] for n in names]
        cut, b0 = _best_cut(node_means)
        mbar = sum(node_means) / k
        sigma0_sq = (sum((m - mbar) ** 2 for m in node_means) + nu * mse / replicates) / (k + nu)
        if sigma0_sq == 0.0:
            lam = math.inf if b0 > 0.0 else 0.0
        else:
            lam = _LAMBDA_FACTOR * b0 / sigma0_sq
        dof = k * _DOF_FACTOR
        critical = chi2_isf(alpha, dof)
        split = lam > critical
        diagnostics.append(
            SplitDiagnostic(
                members=tuple(names),
                b0=b0,
                lambda_stat=lam,
                critical_value=critical,
                dof=dof,
                cut_index=cut,
                split=split,
            )
        )
        if split:
            recurse(names[:cut])
            recurse(names[cut:])
        else:
            leaves.append(tuple(names))

    recurse(list(order))

    letters = tuple(_letter(i) for i in range(len(leaves)))
    return ScottKnottGrouping(
        groups=tuple(leaves),
        letters=letters,
        means=means,
        diagnostics=tuple(diagnostics),
    )


def _letter(i: int) -> str:
    out = ""
    i += 1
    while i:
        i, rem = divmod(i - 1, 26)
        out = chr(ord("a") + rem) + out
    return out
