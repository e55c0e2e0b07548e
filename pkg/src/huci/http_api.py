"""HTTP bindings: the node harvest/admin API and the federation query API.

Both are thin FastAPI wrappers over the in-process services; all wire
payloads are JSON (dumps may be text/plain for csv/nt).
"""

from __future__ import annotations

import json

from fastapi import FastAPI, HTTPException, Query, Request, Response
from fastapi.middleware.cors import CORSMiddleware

from .ingest import DatasetHeader, IngestError
from .model import (
    ModelError,
    UnknownResourceError,
    citation_from_dict,
    citation_to_dict,
    resource_from_dict,
    resource_to_dict,
)
from .node import (
    DEFAULT_PAGE_SIZE,
    Node,
    NodeError,
    RestrictedContextError,
    UnknownCitationError,
)
from . import queries

__all__ = ["create_node_app", "create_query_app"]

_MEDIA_TYPES = {"json": "application/json", "csv": "text/plain",
                "nt": "text/plain"}

LOOPBACK_HOSTS = {"127.0.0.1", "::1", "localhost", "testclient", None}


def _is_local(request: Request, token: str | None) -> bool:
    host = request.client.host if request.client else None
    if host in LOOPBACK_HOSTS:
        return True
    auth = request.headers.get("authorization", "")
    return bool(token) and auth == f"Bearer {token}"


def create_node_app(node: Node, operator_token: str | None = None) -> FastAPI:
    app = FastAPI(title=f"huci node {node.node_id}")

    @app.get("/meta")
    def meta():
        return node.serve_meta()

    @app.get("/dump")
    def dump(format: str = "json"):
        try:
            data = node.serve_dump(format)
        except ValueError as e:
            raise HTTPException(400, str(e))
        return Response(content=data, media_type=_MEDIA_TYPES[format])

    @app.get("/changes")
    def changes(since: int = Query(0), page_size: int = DEFAULT_PAGE_SIZE):
        try:
            return node.serve_changes(since, page_size).to_dict()
        except NodeError as e:
            raise HTTPException(400, str(e))

    @app.get("/resources/{resource_id}")
    def get_resource(resource_id: str):
        r = node.get_resource(resource_id)
        if r is None:
            raise HTTPException(404, "unknown-resource")
        return resource_to_dict(r)

    @app.get("/citations/{citation_id}/context")
    def get_context(citation_id: str, request: Request):
        requester = "local" if _is_local(request, operator_token) else "remote"
        try:
            return node.serve_context(citation_id, requester)
        except RestrictedContextError:
            return Response(content=json.dumps({"error": "restricted-context"}),
                            status_code=403, media_type="application/json")
        except UnknownCitationError:
            raise HTTPException(404, "unknown-citation")

    @app.get("/citations/{citation_id}")
    def get_citation(citation_id: str):
        c = node.get_citation(citation_id)
        if c is None:
            raise HTTPException(404, "unknown-citation")
        return citation_to_dict(c)

    @app.post("/admin/ingest")
    async def admin_ingest(request: Request):
        if not _is_local(request, operator_token):
            raise HTTPException(403, "local-only")
        body = await request.json()
        try:
            header = DatasetHeader(
                provider_id=body["header"]["provider_id"],
                license=body["header"].get("license", "unspecified"),
                created=body["header"].get("created"),
            )
            resources = [resource_from_dict(d) for d in body.get("resources", [])]
            citations = [citation_from_dict(d) for d in body.get("citations", [])]
        except (KeyError, TypeError, IngestError, ModelError) as e:
            raise HTTPException(400, f"bad dataset bundle: {e}")
        return node.ingest_dataset(header, resources, citations)

    @app.post("/admin/policy")
    async def admin_policy(request: Request):
        if not _is_local(request, operator_token):
            raise HTTPException(403, "local-only")
        body = await request.json()
        try:
            return node.set_access_policy(body["citation_ids"], body["access"])
        except (KeyError, NodeError) as e:
            raise HTTPException(400, str(e))

    return app


# reference language distribution for the coverage report when none is
# configured: the even humanities baseline used throughout the docs
DEFAULT_REFERENCE = {"en": 0.30, "it": 0.25, "fr": 0.20, "de": 0.20,
                     "other": 0.05}


def create_query_app(get_index, reference: dict[str, float] | None = None,
                     get_exporter=None) -> FastAPI:
    """Query binding over a callable returning the current QueryIndex;
    `get_exporter` optionally returns (resources, citations) for /export."""
    app = FastAPI(title="huci query API")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    ref = reference or DEFAULT_REFERENCE

    def _index() -> queries.QueryIndex:
        return get_index()

    @app.get("/query/backward/{resource_id}")
    def backward(resource_id: str):
        try:
            idx = _index()
            ids = queries.backward_chain(idx, resource_id)
        except UnknownResourceError:
            raise HTTPException(404, "unknown-resource")
        return {"resource_id": resource_id,
                "results": [resource_to_dict(idx.resources[i]) for i in ids]}

    @app.get("/query/forward/{resource_id}")
    def forward(resource_id: str):
        try:
            idx = _index()
            ids = queries.forward_chain(idx, resource_id)
        except UnknownResourceError:
            raise HTTPException(404, "unknown-resource")
        return {"resource_id": resource_id,
                "results": [resource_to_dict(idx.resources[i]) for i in ids]}

    @app.get("/query/cocited/{resource_id}")
    def cocited(resource_id: str, scope: str = "publication"):
        try:
            idx = _index()
            counts = queries.co_citations(idx, resource_id, scope)
        except UnknownResourceError:
            raise HTTPException(404, "unknown-resource")
        except ValueError as e:
            raise HTTPException(400, str(e))
        return {"resource_id": resource_id,
                "counts": dict(sorted(counts.items()))}

    @app.get("/query/count/{resource_id}")
    def count(resource_id: str, level: str = "work"):
        try:
            n = queries.citation_count(_index(), resource_id, level)
        except UnknownResourceError:
            raise HTTPException(404, "unknown-resource")
        except ModelError as e:
            raise HTTPException(400, str(e))
        return {"resource_id": resource_id, "level": level, "count": n}

    @app.get("/query/search")
    def search(title: str = Query("")):
        idx = _index()
        hits = queries.search_title(idx, title, limit=100)
        return {"results": [resource_to_dict(r) for r in hits]}

    @app.get("/report/coverage")
    def coverage():
        return queries.coverage_report(_index(), ref)

    @app.get("/resources/{resource_id}")
    def get_resource(resource_id: str):
        r = _index().resources.get(resource_id)
        if r is None:
            raise HTTPException(404, "unknown-resource")
        return resource_to_dict(r)

    @app.get("/citations/{citation_id}/context")
    def get_context(citation_id: str):
        c = _index().citations.get(citation_id)
        if c is None or c.context is None:
            raise HTTPException(404, "unknown-citation")
        if c.context.access != "open":
            return Response(content=json.dumps({"error": "restricted-context"}),
                            status_code=403, media_type="application/json")
        ctx = {"access": "open", "excerpt": c.context.excerpt,
               "window": c.context.window}
        if c.context.group is not None:
            ctx["group"] = c.context.group
        return ctx

    @app.get("/export")
    def export(format: str = "json"):
        if get_exporter is None:
            idx = _index()
            resources, citations = (list(idx.resources.values()),
                                    list(idx.citations.values()))
        else:
            resources, citations = get_exporter()
        from .export import export_bytes
        try:
            data = export_bytes(resources, citations, format,
                                header={"provider_id": "federation",
                                        "license": "cc0"})
        except ValueError as e:
            raise HTTPException(400, str(e))
        return Response(content=data, media_type=_MEDIA_TYPES[format])

    return app
