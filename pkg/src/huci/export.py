"""Canonical CSV / JSON / N-Triples serialization.

All three formats are deterministic: equal entity sets produce byte-identical
output. Restricted context excerpts never reach any serialization.
"""

from __future__ import annotations

import csv
import io
import json
import re
import urllib.parse

from .model import (
    BibliographicResource,
    Citation,
    citation_to_dict,
    redact_citation,
    resource_to_dict,
)

__all__ = [
    "export_json",
    "export_csv",
    "export_nt",
    "export_bytes",
    "NT_NAMESPACE",
    "NT_RESOURCE_BASE",
    "validate_nt_line",
]

NT_NAMESPACE = "https://huci.example/ns#"
NT_RESOURCE_BASE = "https://huci.example/resource/"


def _sorted_entities(resources, citations):
    rs = sorted(resources, key=lambda r: r.id)
    cs = [redact_citation(c) for c in
          sorted(citations, key=lambda c: c.citation_id)]
    return rs, cs


def export_json(resources, citations, header: dict | None = None) -> bytes:
    rs, cs = _sorted_entities(resources, citations)
    doc = {
        "header": header or {},
        "resources": [resource_to_dict(r) for r in rs],
        "citations": [citation_to_dict(c) for c in cs],
    }
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _csv_authors(r: BibliographicResource) -> str:
    return "|".join(
        f"{a.family}, {a.given}" if a.given else a.family for a in r.authors)


def _resource_row(r: BibliographicResource) -> list[str]:
    return [
        r.id,
        r.title,
        _csv_authors(r),
        "" if r.year is None else str(r.year),
        r.language or "",
        r.typology,
        r.frbr_level,
        r.parent_id or "",
        "|".join(p.render() for p in r.identifiers),
        "|".join(r.collections),
        "true" if r.is_primary_source else "false",
    ]


RESOURCE_CSV_HEADER = ("id,title,authors,year,language,typology,frbr_level,"
                       "parent_id,identifiers,collections,is_primary_source")
CITATION_CSV_HEADER = ("citation_id,citing_id,cited_id,citing_year,cited_year,"
                       "license,context_available,collection")


def export_csv(resources, citations, header: dict | None = None) -> bytes:
    """Two RFC 4180 sections (resources, citations) separated by a blank line."""
    rs, cs = _sorted_entities(resources, citations)
    by_id = {r.id: r for r in rs}
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RESOURCE_CSV_HEADER.split(","))
    for r in rs:
        writer.writerow(_resource_row(r))
    out.write("\n")
    writer.writerow(CITATION_CSV_HEADER.split(","))
    for c in cs:
        citing = by_id.get(c.citing_id)
        cited = by_id.get(c.cited_id)
        context_available = (c.context is not None
                            and c.context.access == "open"
                            and bool(c.context.excerpt))
        collections = sorted(set(
            (citing.collections if citing else ()) or ()))
        writer.writerow([
            c.citation_id,
            c.citing_id,
            c.cited_id,
            "" if citing is None or citing.year is None else str(citing.year),
            "" if cited is None or cited.year is None else str(cited.year),
            c.license,
            "true" if context_available else "false",
            "|".join(collections),
        ])
    return out.getvalue().encode("utf-8")


def _iri(resource_id: str) -> str:
    return NT_RESOURCE_BASE + urllib.parse.quote(resource_id, safe="")


def _lit(value: str) -> str:
    escaped = (value.replace("\\", "\\\\").replace('"', '\\"')
               .replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t"))
    return f'"{escaped}"'


def export_nt(resources, citations, header: dict | None = None) -> bytes:
    rs, cs = _sorted_entities(resources, citations)
    ns = NT_NAMESPACE
    lines = []
    for r in rs:
        subj = f"<{_iri(r.id)}>"
        lines.append(f"{subj} <{ns}title> {_lit(r.title)} .")
        lines.append(f"{subj} <{ns}typology> {_lit(r.typology)} .")
        lines.append(f"{subj} <{ns}frbrLevel> {_lit(r.frbr_level)} .")
        if r.year is not None:
            lines.append(f"{subj} <{ns}year> {_lit(str(r.year))} .")
        if r.language:
            lines.append(f"{subj} <{ns}language> {_lit(r.language)} .")
        if r.parent_id:
            lines.append(f"{subj} <{ns}parent> <{_iri(r.parent_id)}> .")
        for p in r.identifiers:
            lines.append(f"{subj} <{ns}identifier> {_lit(p.render())} .")
        for coll in r.collections:
            lines.append(f"{subj} <{ns}collection> {_lit(coll)} .")
        if r.is_primary_source:
            lines.append(f"{subj} <{ns}primarySource> {_lit('true')} .")
    for c in cs:
        lines.append(f"<{_iri(c.citing_id)}> <{ns}cites> <{_iri(c.cited_id)}> .")
    lines = sorted(set(lines))
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


_NT_LINE_RE = re.compile(
    r'^<[a-z][a-z0-9+.-]*://\S+?> <[a-z][a-z0-9+.-]*://\S+?> '
    r'(<[a-z][a-z0-9+.-]*://\S+?>|"(?:[^"\\\n\r]|\\.)*") \.$')


def validate_nt_line(line: str) -> bool:
    """Grammar check: subject/predicate IRIs absolute, object IRI or escaped
    literal, terminating dot."""
    return _NT_LINE_RE.match(line) is not None


def export_bytes(resources, citations, fmt: str,
                 header: dict | None = None) -> bytes:
    exporter = {"json": export_json, "csv": export_csv, "nt": export_nt}.get(fmt)
    if exporter is None:
        raise ValueError(f"unknown-format: {fmt!r}")
    return exporter(resources, citations, header)
