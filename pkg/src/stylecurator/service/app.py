"""FastAPI service: the review workflow plus thin wrappers over the core package.

The review endpoints feed the browser UI and persist curator labels into
the same append-only log the curriculum stage-2 composition consumes; the
compute endpoints expose the pure planning/metric functions to clients.
"""

from __future__ import annotations

import mimetypes
from pathlib import Path
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .. import planner
from ..errors import CurationError
from ..metrics import (
    AestheticHead,
    MetricConfig,
    cosine,
    cpc_at,
    cpc_range,
    forward,
)
from ..records import iter_ndjson_text, triplet_from_obj, validate_manifest
from . import schemas
from .session import ReviewSession


def create_app(
    session: ReviewSession,
    ui_dir: Path | None = None,
    head: AestheticHead | None = None,
    metric_cfg: MetricConfig | None = None,
) -> FastAPI:
    cfg = metric_cfg or MetricConfig()
    app = FastAPI(title="stylecurator", version="0.1.0")

    @app.exception_handler(CurationError)
    async def on_domain_error(request, exc: CurationError):
        return JSONResponse(status_code=400, content=exc.to_record())

    @app.get("/api/progress", response_model=schemas.Progress)
    def progress():
        return session.progress()

    @app.get("/api/triplets", response_model=list[schemas.TripletView])
    def triplets(
        filter: Literal["unlabeled", "all"] = Query(default="unlabeled"),
        page: int = Query(default=0, ge=0),
        page_size: int = Query(default=20, ge=1, le=500),
    ):
        return session.batch(filter, page, page_size)

    @app.post("/api/labels", response_model=schemas.LabelAck)
    def submit_label(body: schemas.LabelSubmission):
        try:
            progress = session.submit(body.triplet_id, body.label, body.curator)
        except KeyError:
            raise HTTPException(
                status_code=404, detail=f"unknown triplet_id {body.triplet_id!r}"
            ) from None
        return {"triplet_id": body.triplet_id, "label": body.label, "progress": progress}

    @app.get("/images/{image_id:path}")
    def image(image_id: str):
        try:
            path = session.image_path(image_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no image {image_id!r}") from None
        media_type = mimetypes.guess_type(path.name)[0] or "application/octet-stream"
        return Response(content=path.read_bytes(), media_type=media_type)

    @app.post("/api/plan/inference", response_model=schemas.InferencePlanResponse)
    def plan_inference(body: schemas.InferencePlanRequest):
        plan = planner.plan_inference_resolution(body.content_w, body.content_h)
        return plan.to_obj()

    @app.post("/api/plan/training", response_model=schemas.TrainingPlanResponse)
    def plan_training(body: schemas.TrainingPlanRequest):
        w, h = planner.plan_training_resolution(
            body.width, body.height, body.min_edge, body.multiple
        )
        return {"width": w, "height": h}

    @app.post("/api/plan/prompt", response_model=schemas.PromptResponse)
    def plan_prompt(body: schemas.PromptRequest):
        return {"prompt": planner.render_prompt(body.template, body.arg)}

    @app.post("/api/score/pair", response_model=schemas.PairScoreResponse)
    def score_pair(body: schemas.PairScoreRequest):
        csd = cosine(body.style_csd, body.result_csd)
        out: dict = {"csd_score": csd}
        if body.caption_clip is not None and body.result_clip is not None:
            s = cosine(body.caption_clip, body.result_clip)
            if cfg.clamp_negative:
                s = max(s, 0.0)
            clip = cfg.clip_scale * s
            out["clip_score"] = clip
            out["cpc_at"] = cpc_at(clip, csd, cfg.cpc_threshold)
            out["cpc_range"] = cpc_range(clip, csd, cfg)
        if head is not None and body.result_clip is not None:
            out["aesthetic"] = forward(body.result_clip, head)
        return out

    @app.post("/api/validate", response_model=schemas.ValidateResponse)
    def validate(body: schemas.ValidateRequest):
        triplets = [
            triplet_from_obj(obj, None, line_no)
            for line_no, obj in iter_ndjson_text(body.manifest_text)
        ]
        catalog = set(body.catalog_ids) if body.catalog_ids is not None else None
        report = validate_manifest(triplets, catalog)
        return report.to_obj()

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:

        @app.get("/")
        def index():
            return JSONResponse(
                {
                    "service": "stylecurator review",
                    "triplets": session.size,
                    "hint": "build the review UI and pass --ui-dir to serve it here",
                }
            )

    return app
