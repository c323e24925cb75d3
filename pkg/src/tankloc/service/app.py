"""The localization HTTP service.

Stateless by design: artifacts (model, map, policy) load once at startup
and are never mutated; the client supplies its own last accepted region
(prev_region), so identical requests against the same artifacts return
identical bodies. Inference runs in a thread pool behind a bounded
semaphore so concurrent requests share the model without starvation.

Endpoints: POST /api/v1/localize, GET /api/v1/map, GET /api/v1/health.
"""

from __future__ import annotations

import asyncio
import hashlib
import json
import logging
import time
from dataclasses import dataclass, replace
from typing import Protocol

import numpy as np
from fastapi import FastAPI, File, Form, Request, Response, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from tankloc.dataset.images import Normalization, load_and_resize
from tankloc.errors import ImageDecodeError
from tankloc.localizer.decision import DecisionPolicy, localize
from tankloc.localizer.region_map import RegionMap, region_map_dict
from tankloc.service.schemas import (
    Alternative,
    ErrorBody,
    HealthResponse,
    LocalizeResponse,
    MapResponse,
)

log = logging.getLogger(__name__)

REJECTION_GUIDANCE = (
    "Tank not recognized with enough confidence. Step closer, avoid glare, and try another photo."
)


class Predictor(Protocol):
    """What the service needs from a model: classes and probabilities."""

    classes: tuple[str, ...]
    normalization: Normalization

    def predict(self, img: np.ndarray) -> np.ndarray: ...


class CheckpointPredictor:
    """Predictor backed by a trained checkpoint directory or export file."""

    def __init__(self, artifact_path):
        from tankloc.modeling.export import load_exported

        self._model = load_exported(artifact_path)
        self.classes = self._model.classes
        self.normalization = self._model.normalization
        self.backbone = self._model.backbone

    def predict(self, img: np.ndarray) -> np.ndarray:
        return self._model.predict(img)


@dataclass
class ServiceState:
    predictor: Predictor | None = None
    region_map: RegionMap | None = None
    policy: DecisionPolicy = DecisionPolicy()
    max_concurrent_inferences: int = 4


class ApiError(Exception):
    def __init__(self, status_code: int, error_code: str, message: str, detail=None):
        super().__init__(message)
        self.status_code = status_code
        self.body = ErrorBody(error_code=error_code, message=message, detail=detail)


def _canonical_map_payload(region_map: RegionMap) -> tuple[bytes, str]:
    blob = json.dumps(region_map_dict(region_map), sort_keys=True, separators=(",", ":")).encode()
    return blob, hashlib.sha256(blob).hexdigest()


def create_app(state: ServiceState) -> FastAPI:
    if state.predictor is not None and state.region_map is not None:
        state.region_map.check_classes(state.predictor.classes)

    app = FastAPI(title="tankloc", version="1.0")
    inference_gate = asyncio.Semaphore(state.max_concurrent_inferences)
    map_payload = (
        _canonical_map_payload(state.region_map) if state.region_map is not None else None
    )

    @app.exception_handler(ApiError)
    async def api_error_handler(_: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status_code, content=exc.body.model_dump())

    @app.exception_handler(RequestValidationError)
    async def validation_handler(_: Request, exc: RequestValidationError):
        body = ErrorBody(error_code="VALIDATION", message="invalid request", detail=exc.errors())
        return JSONResponse(status_code=422, content=json.loads(body.model_dump_json()))

    @app.middleware("http")
    async def record_latency(request: Request, call_next):
        started = time.perf_counter()
        response = await call_next(request)
        elapsed_ms = (time.perf_counter() - started) * 1000
        response.headers["x-latency-ms"] = f"{elapsed_ms:.1f}"
        log.info("%s %s -> %d in %.1f ms", request.method, request.url.path, response.status_code, elapsed_ms)
        return response

    @app.post("/api/v1/localize", response_model=LocalizeResponse)
    async def localize_photo(
        image: UploadFile = File(...),
        prev_region: str | None = Form(default=None),
        threshold: float | None = Form(default=None),
    ):
        if state.predictor is None:
            raise ApiError(503, "MODEL_NOT_LOADED", "no model loaded; try again later")
        if state.region_map is None:
            raise ApiError(503, "MAP_NOT_LOADED", "no region map loaded; try again later")
        predictor = state.predictor
        region_map = state.region_map

        raw = await image.read()
        try:
            img = load_and_resize(raw, normalization=predictor.normalization)
        except ImageDecodeError as exc:
            raise ApiError(400, "IMAGE_DECODE", "request body is not a decodable image",
                           detail=str(exc)) from exc

        if prev_region is not None and prev_region not in region_map.by_id:
            raise ApiError(
                422, "UNKNOWN_REGION", f"prev_region {prev_region!r} is not on the map"
            )
        policy = state.policy
        if threshold is not None:
            if not 0.0 <= threshold <= 1.0:
                raise ApiError(422, "INVALID_THRESHOLD", "threshold must be in [0, 1]")
            # A request-supplied threshold replaces the policy's thresholds.
            policy = replace(policy, global_threshold=threshold, per_class_thresholds={})

        async with inference_gate:
            probs = await run_in_threadpool(predictor.predict, img)
        decision = localize(probs, policy, region_map, prev_region, classes=predictor.classes)

        alternatives = [
            Alternative(
                class_label=label,
                region_id=region_map.by_class[label].region_id,
                score=score,
            )
            for label, score in decision.ranked_alternatives
        ]
        if decision.status == "accepted":
            region = region_map.by_id[decision.region_id]
            return LocalizeResponse(
                status="accepted",
                region_id=region.region_id,
                display_name=region.display_name,
                confidence=decision.confidence,
                alternatives=alternatives,
                map_highlight=[tuple(p) for p in region.polygon],
                trivia=region.trivia,
                prior_applied=decision.prior_applied,
            )
        return LocalizeResponse(
            status="rejected",
            confidence=decision.confidence,
            alternatives=alternatives,
            prior_applied=decision.prior_applied,
            guidance=REJECTION_GUIDANCE,
        )

    @app.get("/api/v1/map", response_model=MapResponse)
    async def get_map(request: Request):
        if map_payload is None:
            raise ApiError(503, "MAP_NOT_LOADED", "no region map loaded; try again later")
        blob, etag = map_payload
        if request.headers.get("if-none-match") == etag:
            return Response(status_code=304, headers={"etag": etag})
        return Response(content=blob, media_type="application/json", headers={"etag": etag})

    @app.get("/api/v1/health", response_model=HealthResponse)
    async def health():
        model_loaded = state.predictor is not None
        map_loaded = state.region_map is not None
        return HealthResponse(
            status="ok" if (model_loaded and map_loaded) else "degraded",
            model_loaded=model_loaded,
            map_loaded=map_loaded,
            backbone=getattr(state.predictor, "backbone", None) if model_loaded else None,
            num_classes=len(state.predictor.classes) if model_loaded else None,
        )

    return app
