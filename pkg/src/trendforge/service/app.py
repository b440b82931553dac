"""FastAPI service: stateless describers plus the blind-scoring evaluation API."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.staticfiles import StaticFiles

from .. import __version__
from ..description import describe_rules
from ..emitter import render_plot
from ..evaluation import (
    AlreadyScored,
    EvalSet,
    InvalidScore,
    ScoreStore,
    UnknownItem,
    presentation_order,
    record_score,
    slot_label,
    summary_scores,
)
from ..trend_summary import TrendSummary, default_kernel_size, default_stride, round_summary, smooth_downsample
from .models import (
    DescribeRequest,
    DescribeResponse,
    HealthResponse,
    ModelScore,
    NextItemResponse,
    Progress,
    RaterProgress,
    ScoreRequest,
    ScoreResponse,
    SlotCandidate,
    SlotScore,
    SummarizeRequest,
    SummarizeResponse,
    SummaryResponse,
)


def create_app(
    eval_set: EvalSet | None = None,
    store: ScoreStore | None = None,
    allow_overwrite: bool = False,
    static_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="trendforge", version=__version__)
    plots: dict[str, bytes] = {}

    @app.get("/api/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/api/describe", response_model=DescribeResponse)
    def describe(request: DescribeRequest) -> DescribeResponse:
        summary = TrendSummary(
            values=round_summary(request.values), kernel_size=1, stride=1
        )
        description = describe_rules(summary)
        return DescribeResponse(text=description.text, generator=description.generator)

    @app.post("/api/summarize", response_model=SummarizeResponse)
    def summarize_endpoint(request: SummarizeRequest) -> SummarizeResponse:
        stride = request.stride or default_stride(len(request.values))
        kernel_size = request.kernel_size or default_kernel_size(stride)
        smoothed = smooth_downsample(request.values, kernel_size, stride)
        return SummarizeResponse(
            values=list(round_summary(smoothed)), stride=stride, kernel_size=kernel_size
        )

    def require_eval() -> tuple[EvalSet, ScoreStore]:
        if eval_set is None or store is None:
            raise HTTPException(503, "no evaluation set loaded")
        return eval_set, store

    def item_complete(evs: EvalSet, st: ScoreStore, index: int, rater_id: str) -> bool:
        item = evs.items[index]
        return all(
            st.get(item.item_id, rater_id, c.model_id) is not None
            for c in item.candidates
        )

    @app.get("/api/next", response_model=NextItemResponse)
    def next_item(rater: str = Query(min_length=1)) -> NextItemResponse:
        evs, st = require_eval()
        scored_items = sum(
            1 for i in range(len(evs.items)) if item_complete(evs, st, i, rater)
        )
        progress = Progress(scored_items=scored_items, total_items=len(evs.items))
        for index, item in enumerate(evs.items):
            if item_complete(evs, st, index, rater):
                continue
            order = presentation_order(evs, index, rater)
            candidates = [
                SlotCandidate(slot=slot_label(pos), text=item.candidates[ci].text)
                for pos, ci in enumerate(order)
            ]
            scored = [
                SlotScore(slot=slot_label(pos), score=rec.score)
                for pos, ci in enumerate(order)
                if (rec := st.get(item.item_id, rater, item.candidates[ci].model_id))
                is not None
            ]
            return NextItemResponse(
                done=False,
                progress=progress,
                item_id=item.item_id,
                split=item.split.value,
                plot_url=f"/api/item/{item.item_id}/plot",
                candidates=candidates,
                scored=scored,
            )
        return NextItemResponse(done=True, progress=progress)

    @app.get("/api/item/{item_id}/plot")
    def item_plot(item_id: str) -> Response:
        evs, _ = require_eval()
        try:
            item = evs.item(item_id)
        except UnknownItem as exc:
            raise HTTPException(404, str(exc)) from exc
        if item_id not in plots:
            plots[item_id] = render_plot(item.window)
        return Response(content=plots[item_id], media_type="image/png")

    @app.post("/api/score", response_model=ScoreResponse)
    def score(request: ScoreRequest) -> ScoreResponse:
        evs, st = require_eval()
        try:
            status = record_score(
                evs,
                st,
                item_id=request.item_id,
                rater_id=request.rater_id,
                slot=request.slot,
                score=request.score,
                overwrite=allow_overwrite,
            )
        except InvalidScore as exc:
            raise HTTPException(400, str(exc)) from exc
        except UnknownItem as exc:
            raise HTTPException(404, str(exc)) from exc
        except AlreadyScored as exc:
            raise HTTPException(409, str(exc)) from exc
        return ScoreResponse(
            status=status, item_id=request.item_id, slot=request.slot.upper()
        )

    @app.get("/api/summary", response_model=SummaryResponse)
    def summary() -> SummaryResponse:
        evs, st = require_eval()
        expected = sum(len(it.candidates) for it in evs.items)
        raters = [
            RaterProgress(
                rater_id=r,
                scored=sum(1 for rec in st.records() if rec.rater_id == r),
                expected=expected,
            )
            for r in st.raters()
        ]
        try:
            results = summary_scores(evs, st)
            complete = True
        except Exception:
            # coverage still has holes: report progress only, no model identities
            return SummaryResponse(
                complete=False, total_items=len(evs.items), raters=raters
            )
        return SummaryResponse(
            complete=complete,
            total_items=len(evs.items),
            raters=raters,
            results=[
                ModelScore(model_id=model, split=split, score=value)
                for model, by_split in sorted(results.items())
                for split, value in sorted(by_split.items())
            ],
        )

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app
