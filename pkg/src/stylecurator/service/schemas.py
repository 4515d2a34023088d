"""Pydantic request/response models for the HTTP surface."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class Progress(BaseModel):
    high: int
    low: int
    unlabeled: int
    total: int


class TripletView(BaseModel):
    triplet_id: str
    style_ref: str
    content_ref: str
    target: str
    style_url: str
    content_url: str
    target_url: str
    label: Literal["high", "low", "unlabeled"]
    source: str
    prompt: str


class LabelSubmission(BaseModel):
    triplet_id: str
    label: Literal["high", "low"]
    curator: str = Field(min_length=1)


class LabelAck(BaseModel):
    triplet_id: str
    label: Literal["high", "low"]
    progress: Progress


class InferencePlanRequest(BaseModel):
    content_w: int = Field(ge=1)
    content_h: int = Field(ge=1)


class InferencePlanResponse(BaseModel):
    output_w: int
    output_h: int
    style_side: int


class TrainingPlanRequest(BaseModel):
    width: int = Field(ge=1)
    height: int = Field(ge=1)
    min_edge: int = 1024
    multiple: int = 16


class TrainingPlanResponse(BaseModel):
    width: int
    height: int


class PromptRequest(BaseModel):
    template: Literal["default", "material", "style"] = "default"
    arg: Optional[str] = None


class PromptResponse(BaseModel):
    prompt: str


class PairScoreRequest(BaseModel):
    style_csd: list[float]
    result_csd: list[float]
    caption_clip: Optional[list[float]] = None
    result_clip: Optional[list[float]] = None


class PairScoreResponse(BaseModel):
    csd_score: float
    clip_score: Optional[float] = None
    aesthetic: Optional[float] = None
    cpc_at: Optional[float] = None
    cpc_range: Optional[float] = None


class ValidateRequest(BaseModel):
    manifest_text: str
    catalog_ids: Optional[list[str]] = None


class ViolationOut(BaseModel):
    rule: str
    subject: str
    detail: str


class ValidateResponse(BaseModel):
    ok: bool
    violations: list[ViolationOut]


class ErrorRecord(BaseModel):
    error: str
    message: str
    details: dict = Field(default_factory=dict)
