"""HTTP service for the expert review workflow.

Thin JSON layer over the store: queue reads, decision writes (idempotent),
process model display, pipeline runs, gold export/import, and metric
reports. When a built frontend bundle is present it is served statically
from the same process.
"""

from __future__ import annotations

import json
import logging
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from regrel.corpus import StudySet
from regrel.evaluation import GoldStandard, evaluate, load_predictions, save_predictions
from regrel.labels import LabelSet, RelevanceType
from regrel.llm_judge import JudgeConfig, judge_study_set, judgments_to_predictions, write_judgments
from regrel.process import ProcessModel
from regrel.retrieval import (
    PipelineConfig,
    RetrievalContext,
    binarize_top_k,
    read_rankings,
    resolve_final_k,
    run_pipeline,
    write_rankings,
)
from regrel.service.store import (
    ConflictError,
    Store,
    StoreError,
    items_from_judgments,
    items_from_ranking,
)

log = logging.getLogger(__name__)


class DecisionRequest(BaseModel):
    action: str
    type: str | None = None
    reviewer: str
    idempotency_key: str


class RankRunRequest(BaseModel):
    set_id: str
    model_id: str
    method: str = "B"
    level: int = Field(default=1, ge=1, le=3)
    provider: str = "fallback"
    initial_k: int = 100
    final_k: int | str = "gold_count"
    enqueue_top_k: int | None = None


class JudgeRunRequest(BaseModel):
    set_id: str
    model_id: str
    iteration: str = "v3"
    provider: str = "remote"
    replies_path: str | None = None  # for provider == "scripted"
    enqueue: bool = True


class GoldImportRequest(BaseModel):
    records: list[dict]
    model_id: str | None = None


def _chat_provider(request: JudgeRunRequest):
    if request.provider == "remote":
        from regrel.providers import ProviderConfig, RemoteChatProvider

        return RemoteChatProvider(ProviderConfig.from_env("REGREL_CHAT_URL", "REGREL_CHAT_TOKEN"))
    if request.provider == "scripted":
        from regrel.llm_judge import ScriptedChatProvider

        if not request.replies_path:
            raise StoreError("scripted provider requires replies_path")
        return ScriptedChatProvider.from_file(request.replies_path)
    raise StoreError(f"unknown chat provider: {request.provider!r}")


def create_app(store: Store, run_jobs_inline: bool = True,
               frontend_dist: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="regrel review service")

    @app.exception_handler(StoreError)
    async def on_store_error(request: Request, exc: StoreError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(ConflictError)
    async def on_conflict(request: Request, exc: ConflictError):
        return JSONResponse(
            status_code=409, content={"error": str(exc), "current": exc.current}
        )

    def enrich(item) -> dict:
        payload = item.to_json()
        run = store.find_run(item.run_id)
        study_set: StudySet | None = None
        model: ProcessModel | None = None
        if run:
            set_id = run.params.get("set_id")
            model_id = run.params.get("model_id")
            study_set = store.study_sets.get(set_id)
            model = store.models.get(model_id)
        if study_set is None:
            for candidate in store.study_sets.values():
                if any(p.para_id == item.para_id for p in candidate.paragraphs):
                    study_set = candidate
                    break
        if study_set is not None:
            try:
                para = study_set.paragraph(item.para_id)
            except KeyError:
                para = None
            if para is not None:
                doc = study_set.documents.get(para.doc_id)
                payload["paragraph"] = {
                    "body": para.body,
                    "section_title": para.section_title,
                    "subsection": para.subsection,
                    "group": para.group,
                    "document": doc.to_json() if doc else {"doc_id": para.doc_id},
                }
        if model is None and store.models:
            model = next(iter(store.models.values()))
        if model is not None and item.query_node_id:
            try:
                node = model.node(item.query_node_id)
                payload["node"] = {
                    "node_id": node.node_id,
                    "name": node.name,
                    "description": node.description,
                    "level": node.level,
                    "kind": node.kind,
                }
                payload["model_id"] = model.model_id
            except Exception:
                pass
        return payload

    @app.get("/api/queue")
    def get_queue(
        status: str | None = "pending",
        level: str | None = None,
        method: str | None = None,
        page: int = Query(default=1, ge=1),
        page_size: int = Query(default=20, ge=1, le=200),
    ):
        # empty filter values mean "no filter" (the URL template carries them)
        if status in ("", "all"):
            status = None
        level_num = int(level) if level else None
        if not method:
            method = None
        items = store.queue(status=status, level=level_num, method=method)
        start = (page - 1) * page_size
        page_items = items[start: start + page_size]
        return {
            "items": [enrich(i) for i in page_items],
            "page": page,
            "page_size": page_size,
            "total": len(items),
            "progress": store.progress(),
        }

    @app.post("/api/items/{item_id}/decision")
    def post_decision(item_id: str, request: DecisionRequest):
        result = store.decide(
            item_id=item_id,
            action=request.action,
            reviewer=request.reviewer,
            idempotency_key=request.idempotency_key,
            new_type=request.type,
        )
        return result

    @app.get("/api/process/{model_id}")
    def get_process(model_id: str):
        try:
            return store.model(model_id).to_json()
        except StoreError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/api/runs/{run_id}")
    def get_run(run_id: str):
        try:
            return store.run(run_id).to_json()
        except StoreError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    def _execute(run_id: str, job) -> None:
        store.set_run_status(run_id, "running")
        try:
            output = job()
            store.set_run_status(run_id, "done", output_path=str(output))
        except Exception as exc:  # job failures land in the run record
            log.exception("run %s failed", run_id)
            store.set_run_status(run_id, "failed", error=str(exc))

    def _launch(run_id: str, job) -> None:
        if run_jobs_inline:
            _execute(run_id, job)
        else:
            threading.Thread(target=_execute, args=(run_id, job), daemon=True).start()

    @app.post("/api/runs/rank")
    def post_rank_run(request: RankRunRequest):
        study_set = store.study_set(request.set_id)
        model = store.model(request.model_id)
        run = store.create_run("rank", request.model_dump())

        def job() -> Path:
            config = PipelineConfig(
                method=request.method,
                initial_k=request.initial_k,
                final_k=request.final_k,
            )
            ctx = RetrievalContext.build(study_set, providers=request.provider)
            rankings = [
                run_pipeline(study_set, model, node.node_id, config, ctx)
                for node in model.nodes_at(request.level)
            ]
            out = store.run_dir(run.run_id) / "ranking.jsonl"
            write_rankings(out, rankings)
            if request.enqueue_top_k:
                items = []
                for ranking in rankings:
                    items.extend(
                        items_from_ranking(
                            run.run_id, ranking, request.level,
                            request.enqueue_top_k, config.method_name,
                        )
                    )
                store.enqueue_items(items)
            return out

        _launch(run.run_id, job)
        return store.run(run.run_id).to_json()

    @app.post("/api/runs/judge")
    def post_judge_run(request: JudgeRunRequest):
        study_set = store.study_set(request.set_id)
        model = store.model(request.model_id)
        provider = _chat_provider(request)
        run = store.create_run("judge", request.model_dump())

        def job() -> Path:
            config = JudgeConfig(iteration=request.iteration)
            judgments = judge_study_set(provider, model, study_set, config)
            out = store.run_dir(run.run_id) / "judgments.jsonl"
            write_judgments(out, judgments)
            preds = judgments_to_predictions(judgments)
            save_predictions(
                preds, store.run_dir(run.run_id) / "predictions.jsonl", method="llm_judge"
            )
            if request.enqueue:
                store.enqueue_items(items_from_judgments(run.run_id, judgments, model))
            return out

        _launch(run.run_id, job)
        return store.run(run.run_id).to_json()

    @app.get("/api/gold/export")
    def get_gold_export():
        lines = [json.dumps(obj, ensure_ascii=False) for obj in store.export_gold()]
        return PlainTextResponse("\n".join(lines) + ("\n" if lines else ""),
                                 media_type="application/x-ndjson")

    @app.post("/api/gold/import")
    def post_gold_import(request: GoldImportRequest):
        count = store.import_gold(request.records, model_id=request.model_id)
        return {"imported": count}

    @app.get("/api/reports/{run_id}")
    def get_report(run_id: str):
        run = store.run(run_id)
        if run.status != "done":
            raise HTTPException(status_code=409, detail=f"run is {run.status}")
        study_set = store.study_set(run.params["set_id"])
        model = store.models.get(run.params.get("model_id"))
        gold_labels = {
            pid: labels
            for pid, labels in store.gold_standard().labels.items()
            if pid in set(study_set.para_ids)
        }
        missing = [pid for pid in study_set.para_ids if pid not in gold_labels]
        if missing:
            raise HTTPException(
                status_code=409,
                detail=f"gold does not cover the study set ({len(missing)} paragraphs missing)",
            )
        gold = GoldStandard(study_set.use_case_id, gold_labels)
        preds = _predictions_for_run(store, run, study_set, model, gold)
        report = evaluate(preds, gold, groups=study_set.groups, model=model)
        payload = report.to_json()
        payload["run_id"] = run_id
        report_path = store.run_dir(run_id) / "report.json"
        report_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        return payload

    if frontend_dist and Path(frontend_dist).exists():
        app.mount("/", StaticFiles(directory=frontend_dist, html=True), name="ui")

    return app


def _predictions_for_run(
    store: Store, run, study_set: StudySet, model: ProcessModel | None, gold: GoldStandard
) -> dict[str, LabelSet]:
    """Predictions implied by a run's output. Judge runs carry typed labels;
    rank runs are binary, so picked paragraphs get the weakest relevant type."""
    run_dir = store.run_dir(run.run_id)
    if run.kind == "judge":
        return load_predictions(run_dir / "predictions.jsonl")
    rankings = read_rankings(run_dir / "ranking.jsonl")
    level = int(run.params.get("level", 1))
    config = PipelineConfig(
        method=run.params.get("method", "B"),
        initial_k=int(run.params.get("initial_k", 100)),
        final_k=run.params.get("final_k", "gold_count"),
    )
    preds = {pid: LabelSet() for pid in study_set.para_ids}
    for ranking in rankings:
        k = resolve_final_k(config, gold, ranking.query_node_id, level)
        for para_id in binarize_top_k(ranking, k):
            labels = preds[para_id]
            if level == 1:
                labels.level1 = RelevanceType.INFORMATIVE
            elif level == 2:
                labels.level2[ranking.query_node_id] = RelevanceType.INFORMATIVE
            else:
                labels.level3[ranking.query_node_id] = RelevanceType.INFORMATIVE
    if model is not None:
        from regrel.evaluation import normalize_predictions

        preds = normalize_predictions(preds, model)
    return preds
