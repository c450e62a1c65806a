"""HTTP surface over the engine.

Thin mappings: /v1/ask onto the orchestrator pipeline, /v1/eval onto the
query engine (no LLM calls), /v1/triples onto store lookup/insert,
/v1/sources onto source removal, /v1/ingest and /v1/review/apply onto the
construction workflow. Engine errors map one-to-one onto machine codes;
every response carries a request id echoed into the transcript log.
"""
from __future__ import annotations

import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import __version__
from .config import Config
from .construction import ReviewFile, ReviewItem, apply_review, extract
from .errors import (AllPatternsEmpty, BackendError, ConfigError,
                     DecompositionFailed, DimensionMismatch, EmptyLabel,
                     IncompleteReview, KgdssError, KgParseError, LlmTimeout,
                     NoKnowledge, QuerySyntaxError, ScriptExhausted,
                     ScriptMismatch, SourceMismatch, StepParseFailed,
                     TemplateError)
from .fol import parse_query
from .llm import Transcript
from .orchestrator import AskOptions, ask, eval_trace
from .retrieval import build_index
from .store import TripleStore, load, parse_record, save

_STATUS_BY_CODE = {
    EmptyLabel.code: 400,
    AllPatternsEmpty.code: 400,
    KgParseError.code: 400,
    QuerySyntaxError.code: 400,
    SourceMismatch.code: 409,
    IncompleteReview.code: 409,
    DecompositionFailed.code: 422,
    NoKnowledge.code: 422,
    DimensionMismatch.code: 500,
    TemplateError.code: 500,
    ConfigError.code: 500,
    LlmTimeout.code: 502,
    BackendError.code: 502,
    ScriptExhausted.code: 502,
    ScriptMismatch.code: 502,
    StepParseFailed.code: 502,
}


@dataclass
class ApiError(Exception):
    status: int
    code: str
    message: str
    stage: str | None = None

    def body(self) -> dict:
        payload = {"code": self.code, "message": self.message}
        if self.stage:
            payload["stage"] = self.stage
        return payload

    @classmethod
    def from_engine(cls, exc: KgdssError) -> "ApiError":
        return cls(status=_STATUS_BY_CODE.get(exc.code, 500), code=exc.code,
                   message=str(exc), stage=exc.stage)


@dataclass
class EngineState:
    """Everything one server process holds; store is None until a KB loads."""

    config: Config
    store: TripleStore | None = None
    index: object = None
    embedder: object = None
    backend: object = None
    templates: object = None
    transcript: Transcript = field(default_factory=Transcript)

    @classmethod
    def from_config(cls, config: Config) -> "EngineState":
        state = cls(config=config)
        state.embedder = config.make_embedder()
        state.backend = config.make_backend()
        state.templates = config.make_templates()
        state.transcript = Transcript(path=config.transcript_path)
        if config.kb_path:
            state.load_kb(config.kb_path, config.schema_path)
        return state

    def load_kb(self, path: str, schema_path: str | None = None) -> None:
        self.store = load(path, schema_path)
        self.index = build_index(self.store, self.embedder)

    def require_store(self) -> TripleStore:
        if self.store is None:
            raise ApiError(503, "kb_not_loaded", "no knowledge base loaded")
        return self.store

    def after_mutation(self) -> None:
        """Save-on-mutation (atomic rename) and index rebuild."""
        if self.config.kb_path:
            save(self.store, self.config.kb_path, self.config.schema_path)
        self.index = build_index(self.store, self.embedder)

    def check_write_token(self, request: Request) -> None:
        token = request.headers.get("X-Write-Token")
        if not self.config.write_token or token != self.config.write_token:
            raise ApiError(401, "write_token_required",
                           "mutations need a valid X-Write-Token header")

    def options_from(self, overrides: dict | None) -> AskOptions:
        opts = self.config.ask_options()
        if not overrides:
            return opts
        allowed = {"k", "expand_depth", "mode", "max_attempts", "min_score",
                   "decomposition", "fallback", "self_check",
                   "synthesis_temperature", "history"}
        for key, value in overrides.items():
            if key not in allowed:
                raise ApiError(400, "unknown_option", f"unknown ask option {key!r}")
            if key == "history":
                value = [tuple(pair) for pair in value]
            setattr(opts, key, value)
        return opts


def create_app(state: EngineState) -> FastAPI:
    app = FastAPI(title="kgdss", version=__version__)

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return _error_response(request, exc)

    @app.exception_handler(KgdssError)
    async def engine_error_handler(request: Request, exc: KgdssError):
        return _error_response(request, ApiError.from_engine(exc))

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return _error_response(
            request, ApiError(400, "malformed_body", str(exc.errors()[:3])))

    def _error_response(request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(status_code=exc.status, content={"error": exc.body()},
                            headers={"X-Request-Id": _request_id(request)})

    def _request_id(request: Request) -> str:
        if not hasattr(request.state, "request_id"):
            request.state.request_id = uuid.uuid4().hex[:12]
        return request.state.request_id

    @app.middleware("http")
    async def stamp_request_id(request: Request, call_next):
        rid = _request_id(request)
        response = await call_next(request)
        response.headers.setdefault("X-Request-Id", rid)
        return response

    @app.get("/health")
    async def health():
        store = state.store
        return {"version": __version__,
                "kb_loaded": store is not None,
                "kb_digest": store.digest() if store is not None else None,
                "triples": len(store) if store is not None else 0}

    @app.post("/v1/ask")
    async def ask_endpoint(body: dict, request: Request):
        question = (body or {}).get("question", "")
        if not isinstance(question, str) or not question.strip():
            raise ApiError(400, "empty_question", "question must be non-empty text")
        store = state.require_store()
        opts = state.options_from(body.get("options"))
        transcript = state.transcript.with_request(_request_id(request))
        answer = ask(store.snapshot(), state.index, state.embedder, state.backend,
                     state.templates, question, opts, transcript)
        return answer.to_dict()

    @app.post("/v1/eval")
    async def eval_endpoint(body: dict):
        query_text = (body or {}).get("query", "")
        if not isinstance(query_text, str) or not query_text:
            raise ApiError(400, "empty_query", "query must be non-empty text")
        store = state.require_store()
        universe = body.get("universe")
        q = parse_query(query_text)
        entities, trace = eval_trace(store.snapshot(), q, state.templates, universe)
        return {"entities": sorted(entities), "trace": trace.to_dict()}

    @app.get("/v1/triples")
    async def triples_endpoint(head: str | None = None, relation: str | None = None,
                               tail: str | None = None, source: str | None = None):
        store = state.require_store()
        matches = store.lookup(head=head, relation=relation, tail=tail,
                               source_doc=source)
        return {"triples": [_record(t) for t in
                            sorted(matches, key=lambda t: t.triple_id)]}

    @app.post("/v1/triples")
    async def add_triple_endpoint(body: dict, request: Request):
        store = state.require_store()
        state.check_write_token(request)
        triple = parse_record(body, line_no=0)
        tid, created = store.insert(triple)
        state.after_mutation()
        return {"triple_id": tid, "created": created}

    @app.delete("/v1/sources/{doc}")
    async def delete_source_endpoint(doc: str, request: Request):
        store = state.require_store()
        state.check_write_token(request)
        removed = store.remove_by_source(doc)
        if removed:
            state.after_mutation()
        return {"removed": removed}

    @app.post("/v1/ingest")
    async def ingest_endpoint(body: dict, request: Request):
        text = (body or {}).get("text", "")
        source_doc = (body or {}).get("source_doc", "")
        if not text.strip() or not source_doc.strip():
            raise ApiError(400, "malformed_body", "text and source_doc are required")
        state.require_store()
        transcript = state.transcript.with_request(_request_id(request))
        batch = extract(text, source_doc, state.backend, state.templates, transcript)
        return {
            "source_doc": batch.source_doc,
            "parsed": [_record(t, with_id=False) for t in batch.parsed],
            "rejects": [{"chunk": chunk, "reason": reason}
                        for chunk, reason in batch.rejects],
        }

    @app.post("/v1/review/apply")
    async def review_apply_endpoint(body: dict, request: Request):
        store = state.require_store()
        state.check_write_token(request)
        items = (body or {}).get("review")
        if not isinstance(items, list):
            raise ApiError(400, "malformed_body", "review must be a list of records")
        review = ReviewFile([ReviewItem(
            batch_id=obj.get("batch_id", ""), head=obj["head"],
            relation=obj["relation"], tail=obj["tail"],
            source_doc=obj.get("source_doc"), clause=obj.get("clause"),
            verdict=obj.get("verdict"), reason=obj.get("reason"),
            edit=obj.get("edit")) for obj in items])
        added, edited, rejected = apply_review(store, review)
        state.after_mutation()
        return {"added": added, "edited": edited, "rejected": rejected}

    return app


def _record(t, with_id: bool = True) -> dict:
    record = {"head": t.head.label, "relation": t.relation.label,
              "tail": t.tail.label, "source_doc": t.source_doc, "clause": t.clause}
    if with_id:
        record["triple_id"] = t.triple_id
    return record
