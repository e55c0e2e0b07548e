"""Operator command surface: run a node, ingest datasets, drive federation
harvests, query the merged index, report, estimate and export.

Machine output is a single JSON document on stdout; diagnostics go to stderr.
Exit codes: 0 success, 1 operational error, 2 usage error.
"""

from __future__ import annotations

import json
import socket
import sys
from pathlib import Path

import click

from . import queries
from .federation import Federation, FederationConfig, FederationError
from .ingest import (
    AlignmentMapping,
    DatasetHeader,
    IngestError,
    parse_and_align,
)
from .model import UnknownResourceError
from .node import Node
from .resolution import ResolutionConfig


def _emit(doc) -> None:
    click.echo(json.dumps(doc, indent=2, ensure_ascii=False))


def _fail(message: str, code: int = 1):
    click.echo(message, err=True)
    sys.exit(code)


@click.group()
def main():
    """huci: a desk-scale federated citation index for the humanities."""


# --- node ---

@main.group()
def node():
    """Provider node operations."""


@node.command("serve")
@click.option("--data", "data_dir", required=True, type=click.Path())
@click.option("--port", default=8080, show_default=True)
@click.option("--node-id", default="node", show_default=True)
@click.option("--token", envvar="HUCI_TOKEN", default=None)
def node_serve(data_dir, port, node_id, token):
    """Serve the node harvest/admin API until interrupted."""
    import uvicorn
    from .http_api import create_node_app

    n = Node(node_id, data_dir=data_dir)
    app = create_node_app(n, operator_token=token)
    try:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind(("127.0.0.1", port))
    except OSError as e:
        _fail(f"cannot bind port {port}: {e}")
    bound_port = sock.getsockname()[1]
    click.echo(f"listening={bound_port}")
    sys.stdout.flush()
    uvicorn.run(app, fd=sock.fileno(), log_level="warning")


@main.command("ingest")
@click.option("--data", "data_dir", required=True, type=click.Path())
@click.option("--node-id", default="node", show_default=True)
@click.option("--provider-id", default=None,
              help="Defaults to the dataset.json sidecar or the node id.")
@click.option("--license", "license_", default=None,
              type=click.Choice(["cc0", "other-open", "unspecified"]))
@click.option("--format", "fmt", default="auto", show_default=True,
              type=click.Choice(["auto", "marc-json", "flat-json", "csv", "bundle"]))
@click.option("--mapping", "mapping_file", type=click.Path(exists=True))
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True))
def cmd_ingest(data_dir, node_id, provider_id, license_, fmt, mapping_file, paths):
    """Ingest provider metadata files (or a dump-shaped JSON bundle) into a
    node data directory."""
    from .model import citation_from_dict, resource_from_dict

    mapping = None
    if mapping_file:
        with open(mapping_file, encoding="utf-8") as fh:
            mapping = AlignmentMapping.from_dict(json.load(fh))

    sidecar = Path(paths[0]).parent / "dataset.json"
    header_doc = {}
    if sidecar.exists():
        header_doc = json.loads(sidecar.read_text(encoding="utf-8"))
    header = DatasetHeader(
        provider_id=provider_id or header_doc.get("provider_id") or node_id,
        license=license_ or header_doc.get("license", "unspecified"),
        created=header_doc.get("created"),
    )

    n = Node(node_id, data_dir=data_dir)
    totals = {"created": 0, "updated": 0, "rejected": 0, "rejections": []}
    any_record = False
    for path in paths:
        data = Path(path).read_bytes()
        resources, citations, failures = [], [], []
        doc = None
        if fmt in {"auto", "bundle"}:
            try:
                doc = json.loads(data)
            except (UnicodeDecodeError, json.JSONDecodeError):
                doc = None
        if isinstance(doc, dict) and "resources" in doc:
            resources = [resource_from_dict(d) for d in doc["resources"]]
            citations = [citation_from_dict(d) for d in doc.get("citations", [])]
        elif fmt == "bundle":
            _fail(f"{path}: not a dataset bundle")
        else:
            try:
                aligned, failures = parse_and_align(
                    data, fmt, mapping, header.provider_id)
            except IngestError as e:
                _fail(f"{path}: {e}")
            resources = [a.resource for a in aligned]
        note = f"{header.provider_id} ({path}"
        note += f", mapping={mapping_file})" if mapping_file else ")"
        report = n.ingest_dataset(header, resources, citations,
                                  source_note=note)
        any_record = any_record or bool(resources or citations or failures)
        totals["created"] += report["created"]
        totals["updated"] += report["updated"]
        totals["rejected"] += report["rejected"] + len(failures)
        totals["rejections"] += report["rejections"] + [
            {"index": i, "reason": r} for i, r in failures]
    _emit(totals)
    if any_record and totals["created"] + totals["updated"] == 0:
        sys.exit(1)


# --- federation ---

def _load_federation(config_file, data_dir) -> Federation:
    config = FederationConfig.from_file(config_file) if config_file \
        else FederationConfig()
    return Federation(config, data_dir=data_dir)


@main.group()
def federate():
    """Federation harvesting and status."""


@federate.command("harvest")
@click.option("--config", "config_file", required=True, type=click.Path(exists=True))
@click.option("--data", "data_dir", required=True, type=click.Path())
def federate_harvest(config_file, data_dir):
    fed = _load_federation(config_file, data_dir)
    results = []
    failures = 0
    attempted = 0
    for entry in fed.config.nodes:
        if not entry.enabled:
            results.append({"node_id": entry.node_id, "skipped": "disabled"})
            continue
        attempted += 1
        try:
            results.append(fed.harvest(entry.node_id))
        except FederationError as e:
            failures += 1
            fed._note(entry.node_id, error=str(e))
            results.append({"node_id": entry.node_id, "error": str(e)})
    fed.merge()
    _emit({"harvests": results, "status": fed.federation_status()})
    if attempted and failures == attempted:
        sys.exit(1)


@federate.command("status")
@click.option("--config", "config_file", type=click.Path(exists=True))
@click.option("--data", "data_dir", required=True, type=click.Path())
def federate_status(config_file, data_dir):
    fed = _load_federation(config_file, data_dir)
    fed.merge()
    _emit(fed.federation_status())


@federate.command("serve")
@click.option("--config", "config_file", type=click.Path(exists=True))
@click.option("--data", "data_dir", required=True, type=click.Path())
@click.option("--port", default=8090, show_default=True)
@click.option("--reference", "reference_file", type=click.Path(exists=True),
              help="JSON language reference distribution for /report/coverage.")
def federate_serve(config_file, data_dir, port, reference_file):
    """Serve the query API over the merged federation index."""
    import uvicorn
    from .http_api import create_query_app

    fed = _load_federation(config_file, data_dir)
    fed.merge()
    reference = None
    if reference_file:
        reference = json.loads(Path(reference_file).read_text(encoding="utf-8"))
    app = create_query_app(
        lambda: queries.QueryIndex.from_federation(fed.index),
        reference=reference)
    try:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind(("127.0.0.1", port))
    except OSError as e:
        _fail(f"cannot bind port {port}: {e}")
    click.echo(f"listening={sock.getsockname()[1]}")
    sys.stdout.flush()
    uvicorn.run(app, fd=sock.fileno(), log_level="warning")


def _query_index(data_dir) -> queries.QueryIndex:
    fed = Federation(FederationConfig(), data_dir=data_dir)
    fed.merge()
    return queries.QueryIndex.from_federation(fed.index)


# --- queries / reports ---

@main.command("query")
@click.argument("operation",
                type=click.Choice(["backward", "forward", "cocited", "count"]))
@click.argument("resource_id")
@click.option("--data", "data_dir", required=True, type=click.Path())
@click.option("--scope", default="publication",
              type=click.Choice(["publication", "proximal"]))
@click.option("--level", default="work",
              type=click.Choice(["item", "manifestation", "expression", "work"]))
def cmd_query(operation, resource_id, data_dir, scope, level):
    idx = _query_index(data_dir)
    try:
        if operation == "backward":
            out = {"results": queries.backward_chain(idx, resource_id)}
        elif operation == "forward":
            out = {"results": queries.forward_chain(idx, resource_id)}
        elif operation == "cocited":
            counts = queries.co_citations(idx, resource_id, scope)
            out = {"counts": dict(sorted(counts.items()))}
        else:
            out = {"count": queries.citation_count(idx, resource_id, level),
                   "level": level}
    except UnknownResourceError as e:
        _fail(str(e))
    _emit(out)


@main.command("report")
@click.argument("kind", type=click.Choice(["coverage"]))
@click.option("--data", "data_dir", required=True, type=click.Path())
@click.option("--reference", "reference_file", required=True,
              type=click.Path(exists=True))
def cmd_report(kind, data_dir, reference_file):
    reference = json.loads(Path(reference_file).read_text(encoding="utf-8"))
    idx = _query_index(data_dir)
    try:
        _emit(queries.coverage_report(idx, reference))
    except ValueError as e:
        _fail(str(e))


@main.command("estimate")
@click.option("--params", "params_file", required=True,
              type=click.Path(exists=True))
def cmd_estimate(params_file):
    doc = json.loads(Path(params_file).read_text(encoding="utf-8"))
    try:
        params = queries.CapacityParams.from_dict(doc)
    except (KeyError, ValueError) as e:
        _fail(f"bad params: {e}")
    _emit(queries.estimate_capacity(params))


@main.command("export")
@click.option("--data", "data_dir", required=True, type=click.Path())
@click.option("--format", "fmt", default="json", show_default=True,
              type=click.Choice(["json", "csv", "nt"]))
@click.option("--out", "out_path", required=True, type=click.Path())
def cmd_export(data_dir, fmt, out_path):
    fed = Federation(FederationConfig(), data_dir=data_dir)
    fed.merge()
    Path(out_path).write_bytes(fed.export(fmt))
    _emit({"written": out_path, "format": fmt})


if __name__ == "__main__":
    main()
