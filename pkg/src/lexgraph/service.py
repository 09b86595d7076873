"""HTTP front end: one endpoint per registered primitive plus plan execution.

Response bodies for primitives are exactly the canonical serialization of the
result, so a client can compare them byte-for-byte with an engine-direct
call. The instant used for defaulted temporal arguments is echoed in the
``X-Pinned-Now`` header.
"""

from __future__ import annotations

import json
import threading
from typing import Any, Dict, Iterator, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response, StreamingResponse
from starlette.concurrency import run_in_threadpool

from . import canonical, registry, schemas
from .engine import Engine
from .errors import HTTP_STATUS, Busy, LexGraphError, PlanError, SchemaViolation
from .model import format_instant
from .plan import PlanRun, parse_plan, verify_audit_log

API_PREFIX = "/v1"
PINNED_HEADER = "X-Pinned-Now"
NDJSON = "application/x-ndjson"
CANONICAL_JSON = "application/json; charset=utf-8"


def error_response(exc: LexGraphError) -> Response:
    # a plan naming an unknown primitive is a malformed document, not a missing route
    status = 400 if isinstance(exc, PlanError) else HTTP_STATUS.get(exc.code, 400)
    return Response(canonical.canonical_bytes({"error": exc.to_dict()}), status, media_type=CANONICAL_JSON)


async def _json_body(request: Request) -> Any:
    raw = await request.body()
    if not raw.strip():
        return {}
    try:
        return json.loads(raw)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaViolation(f"request body is not valid JSON: {exc}") from None


def _pin(engine: Engine, request: Request) -> Engine:
    instant = request.headers.get(PINNED_HEADER) or request.query_params.get("pinned_now")
    return engine.pinned(instant)


def call_primitive(engine: Engine, name: str, args: Any) -> bytes:
    """Engine-direct canonical bytes for a call; the service body is exactly this."""
    return canonical.canonical_bytes(registry.invoke(engine, name, args))


def create_app(engine: Engine, max_inflight_plans: int = 4) -> FastAPI:
    app = FastAPI(
        title="lexgraph",
        version="1",
        description="Point-in-time retrieval, discovery and auditable plans over a versioned legal graph.",
    )
    plan_slots = threading.BoundedSemaphore(max_inflight_plans)

    @app.exception_handler(LexGraphError)
    async def _domain_error(request: Request, exc: LexGraphError):
        return error_response(exc)

    def primitive_endpoint(name: str):
        async def endpoint(request: Request) -> Response:
            args = await _json_body(request)
            pinned = _pin(engine, request)
            body = await run_in_threadpool(call_primitive, pinned, name, args)
            return Response(body, media_type=CANONICAL_JSON, headers={PINNED_HEADER: format_instant(pinned.now_instant())})

        endpoint.__name__ = f"primitive_{name}"
        return endpoint

    error_ref = {"application/json": {"schema": {"$ref": "#/components/schemas/ApiError"}}}
    for name, prim in sorted(registry.REGISTRY.items()):
        app.add_api_route(
            f"{API_PREFIX}/primitives/{name}",
            primitive_endpoint(name),
            methods=["POST"],
            name=name,
            summary=prim.description or name,
            tags=[prim.category],
            openapi_extra={
                "requestBody": {
                    "required": any(p.required for p in prim.params),
                    "content": {"application/json": {"schema": schemas.request_schema(prim)}},
                },
                "responses": {
                    "200": {
                        "description": "Canonical result",
                        "headers": {PINNED_HEADER: {"schema": {"type": "string"}}},
                        "content": {"application/json": {"schema": schemas.result_schema(prim)}},
                    },
                    "400": {"description": "Schema violation", "content": error_ref},
                    "404": {"description": "Not found", "content": error_ref},
                    "409": {"description": "Conflict", "content": error_ref},
                },
            },
        )

    @app.post(f"{API_PREFIX}/primitives/{{name}}", include_in_schema=False)
    async def unknown_primitive(name: str) -> Response:
        registry.lookup(name)  # raises UnknownPrimitive
        raise AssertionError("unreachable")

    @app.get(f"{API_PREFIX}/primitives")
    def list_primitives() -> Dict[str, Any]:
        return {
            name: {
                "category": p.category,
                "resolver": p.resolver,
                "returns": p.returns,
                "params": schemas.request_schema(p),
            }
            for name, p in sorted(registry.REGISTRY.items())
        }

    @app.post(
        f"{API_PREFIX}/plans/execute",
        openapi_extra={
            "requestBody": {
                "required": True,
                "content": {"application/json": {"schema": {
                    "type": "object",
                    "properties": {
                        "plan": {"type": "object"},
                        "pinned_now": {"type": "string"},
                        "candidate_policy": {"type": "object"},
                    },
                    "required": ["plan"],
                }}},
            },
            "responses": {"200": {"description": "Audit log, one canonical JSON line per record", "content": {NDJSON: {}}}},
        },
    )
    async def execute(request: Request) -> Response:
        body = await _json_body(request)
        if not isinstance(body, dict) or "plan" not in body:
            raise SchemaViolation("body must be an object with a 'plan' field")
        plan = parse_plan(body["plan"])
        if not plan_slots.acquire(blocking=False):
            raise Busy("too many plans in flight")
        try:
            run = PlanRun(plan, engine, body.get("pinned_now"), body.get("candidate_policy"))
        except BaseException:
            plan_slots.release()
            raise

        def lines() -> Iterator[bytes]:
            try:
                yield canonical.canonical_bytes(run.header) + b"\n"
                for record in run.stream():
                    yield canonical.canonical_bytes(record.to_dict()) + b"\n"
            finally:
                plan_slots.release()

        return StreamingResponse(lines(), media_type=NDJSON, headers={PINNED_HEADER: run.pinned_now})

    @app.post(
        f"{API_PREFIX}/plans/verify",
        openapi_extra={
            "requestBody": {"required": True, "content": {NDJSON: {"schema": {"type": "string"}}}},
            "responses": {"200": {"description": "Verification report", "content": {
                "application/json": {"schema": {"$ref": "#/components/schemas/VerificationReport"}}}}},
        },
    )
    async def verify(request: Request) -> Response:
        raw = await request.body()
        report = await run_in_threadpool(verify_audit_log, None, raw, engine.store, engine)
        return Response(canonical.canonical_bytes(report.to_dict()), media_type=CANONICAL_JSON)

    @app.get(f"{API_PREFIX}/openapi.json", include_in_schema=False)
    def versioned_openapi() -> JSONResponse:
        return JSONResponse(app.openapi())

    base_openapi = app.openapi

    def openapi() -> Dict[str, Any]:
        if app.openapi_schema is None:
            doc = base_openapi()
            comps = doc.setdefault("components", {}).setdefault("schemas", {})
            comps.update(schemas.COMPONENTS)
            app.openapi_schema = doc
        return app.openapi_schema

    app.openapi = openapi
    return app
