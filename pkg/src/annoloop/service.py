"""HTTP JSON API for the annotation console and scripted clients.

The service is stateless beyond the event log and the corpus files: every
mutation is one workflow event, so kill-and-restart (replay) preserves all
task states. Static bearer tokens map to actors with one of three roles;
annotators label, adjudicators work the queue, admins drive QC.

All error responses share the envelope ``{code, message, detail}``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Depends, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel
from starlette.exceptions import HTTPException as StarletteHTTPException

from .corpus import Corpus, export_jsonl, ingest_jsonl
from .errors import AnnoloopError, ConfigError, GatingError, WorkflowError
from .gateway import ModelJudgment, judgments_to_layer, read_judgments_jsonl
from .metrics import (
    MetricReport,
    UNDEFINED,
    agreement_report,
    classification_report,
    kappa_csv,
)
from .schema import default_schema, load_schema
from .workflow import TASK_PENDING, TaskRecord, Workflow

PAGE_SIZE = 50

ROLE_ANNOTATOR = "annotator"
ROLE_ADJUDICATOR = "adjudicator"
ROLE_ADMIN = "admin"
_ROLES = (ROLE_ANNOTATOR, ROLE_ADJUDICATOR, ROLE_ADMIN)


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8400
    schema_path: str | None = None
    corpus_files: dict[str, str] = field(default_factory=dict)  # layer -> path
    judgments_path: str | None = None
    event_log: str = "events.jsonl"
    tokens: dict[str, dict] = field(default_factory=dict)  # token -> {actor, role}

    def validate(self) -> None:
        for token, entry in self.tokens.items():
            if entry.get("role") not in _ROLES:
                raise ConfigError(
                    f"token {token[:6]}... has unknown role {entry.get('role')!r}"
                )
            if not entry.get("actor"):
                raise ConfigError(f"token {token[:6]}... has no actor")


def load_config(path: str | Path, overrides: dict | None = None) -> ServiceConfig:
    """Config precedence: explicit overrides (CLI) > environment > file."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    config = ServiceConfig(
        host=data.get("host", "127.0.0.1"),
        port=int(data.get("port", 8400)),
        schema_path=data.get("schema"),
        corpus_files=dict(data.get("corpus", {})),
        judgments_path=data.get("judgments"),
        event_log=data.get("event_log", "events.jsonl"),
        tokens=dict(data.get("tokens", {})),
    )
    env_port = os.environ.get("ANNOLOOP_PORT")
    if env_port:
        config.port = int(env_port)
    env_host = os.environ.get("ANNOLOOP_HOST")
    if env_host:
        config.host = env_host
    for key, value in (overrides or {}).items():
        if value is not None:
            setattr(config, key, value)
    config.validate()
    return config


@dataclass
class Session:
    actor: str
    role: str


@dataclass
class AppState:
    config: ServiceConfig
    corpus: Corpus
    workflow: Workflow


def build_state(config: ServiceConfig) -> AppState:
    schema = load_schema(config.schema_path) if config.schema_path else default_schema()
    corpus = Corpus(schema=schema)
    for layer, path in config.corpus_files.items():
        if Path(path).exists():
            ingest_jsonl(path, layer, into=corpus)
    judgments: list[ModelJudgment] = []
    if config.judgments_path and Path(config.judgments_path).exists():
        judgments = read_judgments_jsonl(config.judgments_path)
        if "model" not in config.corpus_files:
            judgments_to_layer(corpus, judgments)
    workflow = Workflow.open(config.event_log, corpus, judgments=judgments)
    return AppState(config=config, corpus=corpus, workflow=workflow)


# ---------------------------------------------------------------------------
# Request/response models
# ---------------------------------------------------------------------------


class JudgmentRequest(BaseModel):
    values: dict[str, int]


class FlagRequest(BaseModel):
    note: str


class AdjudicateRequest(BaseModel):
    decision: dict[str, int] | None = None
    note: str = ""


class AuditRequest(BaseModel):
    fraction: float
    targeted: bool = False
    seed: int = 0


def _judgment_view(judgment: ModelJudgment) -> dict:
    return {
        "label_id": judgment.label_id,
        "score": judgment.score,
        "rationale": judgment.rationale,
        "model_id": judgment.model_id,
        "prompt_version": judgment.prompt_version,
    }


def _report_rows(report: MetricReport) -> list[dict]:
    return [
        {
            "language": r.language,
            "label": r.label_id,
            "metric": r.metric,
            "value": None if r.value is UNDEFINED else r.value,
            "defined": r.value is not UNDEFINED,
        }
        for r in report.rows
    ]


def create_app(state: AppState) -> FastAPI:
    app = FastAPI(title="annoloop service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    workflow = state.workflow
    corpus = state.corpus

    def _envelope(status: int, code: str, message: str, detail=None) -> JSONResponse:
        return JSONResponse(
            status_code=status,
            content={"code": code, "message": message, "detail": detail},
        )

    @app.exception_handler(GatingError)
    async def _gating_handler(request: Request, exc: GatingError):
        return _envelope(409, "gating_error", str(exc))

    @app.exception_handler(WorkflowError)
    async def _workflow_handler(request: Request, exc: WorkflowError):
        status = 404 if str(exc).startswith("unknown") else 409
        return _envelope(status, "workflow_error", str(exc))

    @app.exception_handler(AnnoloopError)
    async def _domain_handler(request: Request, exc: AnnoloopError):
        return _envelope(400, type(exc).__name__.replace("Error", "").lower() + "_error", str(exc))

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return _envelope(422, "validation_error", "invalid request body", exc.errors())

    @app.exception_handler(StarletteHTTPException)
    async def _http_handler(request: Request, exc: StarletteHTTPException):
        return _envelope(exc.status_code, "http_error", str(exc.detail))

    def session(request: Request) -> Session:
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            raise StarletteHTTPException(401, "missing bearer token")
        token = header[7:].strip()
        entry = state.config.tokens.get(token)
        if entry is None:
            raise StarletteHTTPException(401, "unknown token")
        return Session(actor=entry["actor"], role=entry["role"])

    def require(session_obj: Session, *roles: str) -> Session:
        if session_obj.role not in roles and session_obj.role != ROLE_ADMIN:
            raise StarletteHTTPException(
                403, f"role {session_obj.role!r} may not call this endpoint"
            )
        return session_obj

    def _task_view(task: TaskRecord) -> dict:
        inst = corpus.instance(task.instance_id)
        batch = workflow.batch(task.batch_id)
        return {
            "task_id": task.task_id,
            "batch_id": task.batch_id,
            "instance_id": task.instance_id,
            "text": inst.text,
            "language": inst.language,
            "labels": list(batch.label_group),
            "state": task.state,
            "human_values": task.human_values,
            "warnings": task.warnings,
            "flags": task.flags,
            "revealed": task.revealed,
            "audited": task.audited,
            "adjudication": task.adjudication,
            "final_values": task.final_values,
        }

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/batches")
    def list_batches(sess: Session = Depends(session)) -> dict:
        items = []
        for batch in workflow.batches.values():
            tasks = workflow.batch_tasks(batch.batch_id)
            items.append(
                {
                    "batch_id": batch.batch_id,
                    "labels": list(batch.label_group),
                    "state": batch.state,
                    "task_count": len(tasks),
                    "pending": sum(1 for t in tasks if t.state == TASK_PENDING),
                }
            )
        return {"items": items}

    @app.get("/batches/{batch_id}/next-task")
    def next_task(batch_id: str, sess: Session = Depends(session)) -> dict:
        require(sess, ROLE_ANNOTATOR)
        for task in workflow.batch_tasks(batch_id):
            if task.state == TASK_PENDING:
                view = _task_view(task)
                # model data is structurally absent pre-judgment
                return {"task": view}
        return {"task": None}

    @app.post("/tasks/{task_id}/judgment")
    def submit_judgment(
        task_id: str, body: JudgmentRequest, sess: Session = Depends(session)
    ) -> dict:
        require(sess, ROLE_ANNOTATOR)
        task = workflow.submit_judgment(task_id, sess.actor, body.values)
        return {"task": _task_view(task), "warnings": task.warnings}

    @app.post("/tasks/{task_id}/reveal")
    def reveal(task_id: str, sess: Session = Depends(session)) -> dict:
        require(sess, ROLE_ANNOTATOR, ROLE_ADJUDICATOR)
        judgments = workflow.reveal_model(task_id, sess.actor)
        return {"judgments": [_judgment_view(j) for j in judgments]}

    @app.post("/tasks/{task_id}/flag")
    def flag(task_id: str, body: FlagRequest, sess: Session = Depends(session)) -> dict:
        require(sess, ROLE_ANNOTATOR, ROLE_ADJUDICATOR)
        task = workflow.flag(task_id, sess.actor, body.note)
        return {"task": _task_view(task)}

    @app.get("/batches/{batch_id}/adjudication-queue")
    def adjudication_queue(
        batch_id: str,
        cursor: str | None = None,
        page_size: int = PAGE_SIZE,
        sess: Session = Depends(session),
    ) -> dict:
        require(sess, ROLE_ADJUDICATOR)
        queue = workflow.adjudication_queue(batch_id)
        offset = int(cursor) if cursor else 0
        page_size = max(1, min(page_size, PAGE_SIZE))
        page = queue[offset : offset + page_size]
        batch = workflow.batch(batch_id)
        items = []
        for task in page:
            model_values = workflow.model_values(task.instance_id, batch.label_group)
            human = task.human_values or {}
            items.append(
                {
                    **_task_view(task),
                    "model_values": model_values,
                    "model_judgments": [
                        _judgment_view(workflow.judgments[(task.instance_id, label)])
                        for label in batch.label_group
                        if (task.instance_id, label) in workflow.judgments
                    ],
                    "disagreeing_labels": sorted(
                        label
                        for label in batch.label_group
                        if label in model_values and human.get(label) != model_values[label]
                    ),
                }
            )
        next_cursor = (
            str(offset + page_size) if offset + page_size < len(queue) else None
        )
        return {"items": items, "next_cursor": next_cursor, "total": len(queue)}

    @app.post("/tasks/{task_id}/adjudicate")
    def adjudicate(
        task_id: str, body: AdjudicateRequest, sess: Session = Depends(session)
    ) -> dict:
        require(sess, ROLE_ADJUDICATOR)
        task = workflow.adjudicate(
            task_id, sess.actor, decision=body.decision, note=body.note
        )
        return {"task": _task_view(task)}

    @app.get("/batches/{batch_id}/progress")
    def progress(batch_id: str, sess: Session = Depends(session)) -> dict:
        tasks = workflow.batch_tasks(batch_id)
        batch = workflow.batch(batch_id)
        counts: dict[str, int] = {}
        for task in tasks:
            counts[task.state] = counts.get(task.state, 0) + 1
        per_label: dict[str, int] = {}
        for task in tasks:
            if task.human_values:
                for label, value in task.human_values.items():
                    if value == 1:
                        per_label[label] = per_label.get(label, 0) + 1
        return {
            "batch_id": batch_id,
            "state": batch.state,
            "task_states": counts,
            "positive_counts": per_label,
            "queue_size": len(workflow.adjudication_queue(batch_id)),
        }

    @app.get("/reports/metrics")
    def metrics_report(
        pred_layer: str = "model",
        gold_layer: str = "final",
        batch_id: str | None = None,
        sess: Session = Depends(session),
    ) -> dict:
        ids = workflow.batch(batch_id).instance_ids if batch_id else None
        report = classification_report(
            pred_layer, gold_layer, corpus, instance_ids=ids
        )
        return {"metadata": report.metadata, "rows": _report_rows(report)}

    @app.get("/reports/kappa")
    def kappa_report(
        layer_a: str = "original",
        layer_b: str = "final",
        batch_id: str | None = None,
        format: str = "json",
        sess: Session = Depends(session),
    ):
        ids = workflow.batch(batch_id).instance_ids if batch_id else None
        report = agreement_report(layer_a, layer_b, corpus, instance_ids=ids)
        if format == "csv":
            return PlainTextResponse(kappa_csv(report), media_type="text/csv")
        return {"metadata": report.metadata, "rows": _report_rows(report)}

    @app.post("/batches/{batch_id}/qc")
    def begin_qc(batch_id: str, sess: Session = Depends(session)) -> dict:
        require(sess, ROLE_ADMIN)
        batch = workflow.begin_qc(batch_id, sess.actor)
        return {"batch_id": batch_id, "state": batch.state}

    @app.post("/batches/{batch_id}/audit")
    def audit(
        batch_id: str, body: AuditRequest, sess: Session = Depends(session)
    ) -> dict:
        require(sess, ROLE_ADMIN)
        selected = workflow.audit_sample(
            batch_id, body.fraction, body.targeted, body.seed, sess.actor
        )
        return {"selected": selected}

    @app.post("/batches/{batch_id}/finalize")
    def finalize(batch_id: str, sess: Session = Depends(session)) -> dict:
        require(sess, ROLE_ADMIN)
        result = workflow.finalize_batch(batch_id, sess.actor)
        final_path = state.config.corpus_files.get("final")
        if final_path:
            export_jsonl(corpus, "final", final_path)
        return {
            "batch_id": batch_id,
            "finalized_count": result.finalized_count,
            "kappa": _report_rows(result.kappa_report),
        }

    return app


def serve(config: ServiceConfig) -> None:
    """Build state and run uvicorn; blocks until shutdown."""
    import uvicorn

    state = build_state(config)
    app = create_app(state)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
