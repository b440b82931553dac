"""Request/response schemas for the trendforge HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class DescribeRequest(BaseModel):
    values: list[float] = Field(min_length=2)


class DescribeResponse(BaseModel):
    text: str
    generator: str


class SummarizeRequest(BaseModel):
    values: list[float] = Field(min_length=25)
    stride: int | None = None
    kernel_size: int | None = None


class SummarizeResponse(BaseModel):
    values: list[float]
    stride: int
    kernel_size: int


class SlotCandidate(BaseModel):
    slot: str
    text: str


class SlotScore(BaseModel):
    slot: str
    score: int


class Progress(BaseModel):
    scored_items: int
    total_items: int


class NextItemResponse(BaseModel):
    done: bool
    progress: Progress
    item_id: str | None = None
    split: str | None = None
    plot_url: str | None = None
    candidates: list[SlotCandidate] = []
    scored: list[SlotScore] = []


class ScoreRequest(BaseModel):
    item_id: str
    rater_id: str
    slot: str
    score: int


class ScoreResponse(BaseModel):
    status: str
    item_id: str
    slot: str


class ModelScore(BaseModel):
    model_id: str
    split: str
    score: float


class RaterProgress(BaseModel):
    rater_id: str
    scored: int
    expected: int


class SummaryResponse(BaseModel):
    complete: bool
    results: list[ModelScore] = []
    total_items: int
    raters: list[RaterProgress] = []
