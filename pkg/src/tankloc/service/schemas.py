"""Request/response models for the localization API.

Responses use snake_case keys; errors everywhere follow
{error_code, message, detail}. Confidence values are full precision
internally and rounded to 4 decimals only at serialization.
"""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, field_serializer


class ErrorBody(BaseModel):
    error_code: str
    message: str
    detail: Any = None


class Alternative(BaseModel):
    class_label: str
    region_id: str | None = None
    score: float

    @field_serializer("score")
    def _round_score(self, v: float) -> float:
        return round(v, 4)


class LocalizeResponse(BaseModel):
    status: str  # "accepted" | "rejected"
    region_id: str | None = None
    display_name: str | None = None
    confidence: float
    alternatives: list[Alternative]
    map_highlight: list[tuple[float, float]] | None = None
    trivia: str | None = None
    prior_applied: bool = False
    guidance: str | None = None

    @field_serializer("confidence")
    def _round_confidence(self, v: float) -> float:
        return round(v, 4)


class RegionModel(BaseModel):
    region_id: str
    class_label: str
    display_name: str
    polygon: list[tuple[float, float]]
    adjacent: list[str]
    trivia: str


class MapResponse(BaseModel):
    schema_version: int
    bounds: tuple[float, float, float, float]
    regions: list[RegionModel]


class HealthResponse(BaseModel):
    status: str  # "ok" | "degraded"
    model_loaded: bool
    map_loaded: bool
    backbone: str | None = None
    num_classes: int | None = None
