"""Parameter-count versus f-score trade-off front.

The front is the upper-left convex hull of the Pareto set when minimizing
parameters and maximizing f-score: walking it by ascending parameter
count, the marginal f-score gained per extra parameter never increases.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from tankloc.errors import EvaluationError


@dataclass(frozen=True)
class TradeoffPoint:
    name: str
    params: int
    mean_fscore: float
    on_front: bool


def tradeoff_front(points: Iterable[tuple[str, int, float]]) -> list[TradeoffPoint]:
    """Flag the best size/accuracy trade-offs; returns ascending params."""
    pts = list(points)
    if not pts:
        raise EvaluationError("tradeoff_front needs at least one point")
    names = [name for name, _, _ in pts]
    if len(set(names)) != len(names):
        raise EvaluationError("duplicate architecture names in trade-off input")
    for name, params, _ in pts:
        if params <= 0:
            raise EvaluationError(f"{name!r} has non-positive parameter count {params}")

    # Pareto pass: ascending params with best f-score first among ties;
    # a survivor must strictly beat every cheaper point's f-score.
    ordered = sorted(pts, key=lambda p: (p[1], -p[2], p[0]))
    pareto: list[tuple[str, int, float]] = []
    best_f = -float("inf")
    for p in ordered:
        if p[2] > best_f or (pareto and p[1] == pareto[-1][1] and p[2] == pareto[-1][2]):
            pareto.append(p)
            best_f = max(best_f, p[2])

    # Upper concave hull over the Pareto points (equal-coordinate
    # duplicates collapse onto one vertex). Collinear points stay on the
    # front: their marginal trade-off is non-increasing, not increasing.
    vertices: list[tuple[int, float]] = []
    for _, x, y in pareto:
        if vertices and (x, y) == vertices[-1]:
            continue
        while len(vertices) >= 2:
            (x1, y1), (x2, y2) = vertices[-2], vertices[-1]
            cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
            if cross > 0:  # middle vertex lies below the new chord
                vertices.pop()
            else:
                break
        vertices.append((x, y))
    hull = set(vertices)

    out = [
        TradeoffPoint(name=name, params=params, mean_fscore=f, on_front=(params, f) in hull)
        for name, params, f in ordered
    ]
    # Only Pareto survivors may carry a hull flag.
    pareto_keys = {(n, x, y) for n, x, y in pareto}
    return [
        p if (p.name, p.params, p.mean_fscore) in pareto_keys else TradeoffPoint(p.name, p.params, p.mean_fscore, False)
        for p in out
    ]
