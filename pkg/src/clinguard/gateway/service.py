"""HTTP gateway: classification + routing in one endpoint, plus the
annotation and report APIs the pipeline tooling and review UI consume.

Fail-closed by construction: configuration is validated before the app
exists, every classifier failure returns a blocking decision with an error
status, and no code path can answer a query whose classification errored.
Raw query text is never echoed in responses and never written to the audit
log (only digests are).
"""
from __future__ import annotations

import logging
import time
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException, Header, Query, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..audit import AuditError, AuditLog
from ..backends import ClassificationError, ClassifierBackend, TransportError
from ..evaluation.bundles import BundleError, bundle_files, list_bundles, read_bundle_file
from ..evaluation.experiments import standalone_backend
from ..pipeline.pool import LabeledQuery
from ..routing import (
    RoutingDecision,
    fail_closed_decision,
    load_policy_file,
    load_templates_file,
    route,
    validate_policy,
    validate_templates,
)
from ..taxonomy import load_taxonomy_file
from .annotations import AnnotationError, AnnotationStore, ConflictError, UnknownItemError
from .config import GatewayConfig

logger = logging.getLogger(__name__)

MEDIA_TYPE = "application/vnd.clinguard.v1+json"
API_VERSION = "v1"


class VndJsonResponse(JSONResponse):
    media_type = MEDIA_TYPE


class ClassifyRouteRequest(BaseModel):
    text: str = Field(min_length=1)
    locale: str | None = None


class AnnotationItemsRequest(BaseModel):
    items: list[dict]


class AnnotationActionRequest(BaseModel):
    action: str
    base_revision: int
    new_label: str | None = None
    new_text: str | None = None


def _decision_body(decision: RoutingDecision) -> dict:
    return {
        "label_id": decision.label_id,
        "action": decision.action.value,
        "tools": sorted(t.value for t in decision.tools),
        "message_template_id": decision.message_template_id,
        "log_unsafe": decision.log_unsafe,
    }


def _item_body(item: LabeledQuery) -> dict:
    return item.to_record()


def build_gateway_backend(config: GatewayConfig) -> ClassifierBackend:
    """Instantiate the configured active backend against the active taxonomy."""
    taxonomy = load_taxonomy_file(config.taxonomy_path)
    spec = dict(config.backend_spec(config.active_backend))
    spec.setdefault("timeout_s", config.request_timeout_s)
    return standalone_backend(spec, taxonomy)


def create_app(
    config: GatewayConfig, backend_override: ClassifierBackend | None = None
) -> FastAPI:
    """Build the service. Raises (fails fast) on any invalid configuration."""
    taxonomy = load_taxonomy_file(config.taxonomy_path)
    policy = load_policy_file(config.policy_path)
    validate_policy(policy, taxonomy)
    templates = load_templates_file(config.templates_path)
    validate_templates(policy, templates)
    backend = backend_override or build_gateway_backend(config)
    audit = AuditLog(config.audit_log_path)
    store = AnnotationStore(config.dataset_store_dir, taxonomy)
    reports_dir = Path(config.reports_dir)
    reports_dir.mkdir(parents=True, exist_ok=True)

    app = FastAPI(title="clinguard gateway", default_response_class=VndJsonResponse)
    app.state.taxonomy = taxonomy
    app.state.policy = policy
    app.state.backend = backend
    app.state.audit = audit
    app.state.store = store
    app.state.config = config

    def record_unsafe_safely(decision: RoutingDecision, text: str) -> None:
        # Audit failures are reported, never allowed to block the response.
        try:
            audit.record_unsafe(decision, text)
        except AuditError:
            logger.exception("audit append failed for label %s", decision.label_id)

    @app.get("/health")
    def health() -> dict:
        return {
            "status": "ok",
            "api_version": API_VERSION,
            "taxonomy_version": taxonomy.version,
            "taxonomy_digest": taxonomy.source_digest,
            "policy_version": policy.version,
            "backend_id": backend.backend_id,
        }

    @app.post("/v1/classify-route")
    def classify_route(body: ClassifyRouteRequest) -> Response:
        request_id = uuid.uuid4().hex
        started = time.perf_counter()
        try:
            prediction = backend.classify(taxonomy, body.text)
        except (ClassificationError, TransportError) as exc:
            logger.warning("classification failed (%s); failing closed", exc)
            decision = fail_closed_decision("unclassified")
            record_unsafe_safely(decision, body.text)
            return VndJsonResponse(
                status_code=502,
                content={
                    "request_id": request_id,
                    "error_code": "classification_failed",
                    "decision": _decision_body(decision),
                    "message": templates.resolve(
                        decision.message_template_id, body.locale or config.locale
                    ),
                },
            )
        classify_s = time.perf_counter() - started
        route_started = time.perf_counter()
        decision = route(taxonomy, policy, prediction.label_id)
        route_s = time.perf_counter() - route_started
        if decision.log_unsafe:
            record_unsafe_safely(decision, body.text)
        payload = {
            "request_id": request_id,
            "label_id": prediction.label_id,
            "decision": _decision_body(decision),
            "message": templates.resolve(
                decision.message_template_id, body.locale or config.locale
            ),
            "latency": {"classify_s": classify_s, "route_s": route_s},
        }
        if config.include_scores:
            payload["scores"] = list(prediction.scores)
        return VndJsonResponse(content=payload)

    @app.get("/v1/taxonomy")
    def get_taxonomy() -> dict:
        return {
            "version": taxonomy.version,
            "source_digest": taxonomy.source_digest,
            "default_locale": taxonomy.default_locale,
            "leaves": [
                {
                    "id": leaf.id,
                    "display_name": leaf.display_name,
                    "path": list(leaf.path),
                    "description": leaf.description,
                    "examples": list(leaf.examples),
                }
                for leaf in taxonomy.leaves
            ],
        }

    @app.get("/v1/annotation/items")
    def list_annotation_items(
        provenance: str | None = None,
        label: str | None = None,
        source: str | None = None,
        pending: bool = Query(default=False),
        include_removed: bool = Query(default=False),
        offset: int = Query(default=0, ge=0),
        limit: int = Query(default=50, ge=1, le=500),
    ) -> dict:
        items, total = store.list_items(
            provenance=provenance,
            label=label,
            source=source,
            pending_only=pending,
            include_removed=include_removed,
            offset=offset,
            limit=limit,
        )
        return {
            "items": [_item_body(i) for i in items],
            "total": total,
            "offset": offset,
            "limit": limit,
        }

    @app.post("/v1/annotation/items")
    def add_annotation_items(body: AnnotationItemsRequest) -> dict:
        try:
            ids = store.add_records(body.items)
        except (AnnotationError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"ids": ids}

    @app.post("/v1/annotation/items/{item_id}/action")
    def annotation_action(
        item_id: str,
        body: AnnotationActionRequest,
        request: Request,
    ) -> Response:
        annotator_id = request.headers.get(config.annotator_header)
        if not annotator_id:
            raise HTTPException(
                status_code=400,
                detail=f"missing {config.annotator_header} header",
            )
        try:
            item = store.apply(
                item_id,
                annotator_id=annotator_id,
                action=body.action,
                base_revision=body.base_revision,
                new_label=body.new_label,
                new_text=body.new_text,
            )
        except UnknownItemError:
            raise HTTPException(status_code=404, detail=f"unknown item {item_id}")
        except ConflictError as exc:
            return VndJsonResponse(
                status_code=409,
                content={"error_code": "conflict", "current": _item_body(exc.current)},
            )
        except AnnotationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return VndJsonResponse(content={"item": _item_body(item)})

    @app.get("/v1/annotation/progress")
    def annotation_progress() -> dict:
        return {"actions_by_annotator": store.progress()}

    @app.get("/v1/reports")
    def reports_index() -> dict:
        return {"bundles": list_bundles(reports_dir)}

    @app.get("/v1/reports/{digest}")
    def report_bundle(digest: str) -> dict:
        try:
            files = bundle_files(reports_dir, digest)
        except BundleError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {"digest": digest, "files": files}

    @app.get("/v1/reports/{digest}/files/{relpath:path}")
    def report_file(digest: str, relpath: str) -> Response:
        try:
            content = read_bundle_file(reports_dir, digest, relpath)
        except BundleError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return Response(content=content, media_type="application/octet-stream")

    if config.ui_dir:
        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app
