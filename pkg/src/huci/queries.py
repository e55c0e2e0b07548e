"""Application-facing queries over a merged index (or a single node's
stores): citation chaining, co-citation, FRBR-level counts, coverage/bias
reporting, capacity estimation and title search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import (
    BibliographicResource,
    Citation,
    UnknownResourceError,
    frbr_map,
)
from .resolution import normalize_title

__all__ = [
    "QueryIndex",
    "backward_chain",
    "forward_chain",
    "co_citations",
    "citation_count",
    "coverage_report",
    "CapacityParams",
    "estimate_capacity",
    "search_title",
]


@dataclass
class QueryIndex:
    """Read-only view: resources and citations by id, plus an alias table
    mapping clustered ids / identifier strings to canonical ids."""
    resources: dict[str, BibliographicResource]
    citations: dict[str, Citation]
    lookup: dict[str, str] | None = None

    @classmethod
    def from_federation(cls, index) -> "QueryIndex":
        return cls(index.resources, index.citations, index.lookup)

    @classmethod
    def from_node(cls, node) -> "QueryIndex":
        return cls(dict(node.resources), dict(node.citations))

    def resolve(self, any_id: str) -> str:
        if any_id in self.resources:
            return any_id
        if self.lookup and any_id in self.lookup:
            canonical = self.lookup[any_id]
            if canonical in self.resources:
                return canonical
        raise UnknownResourceError(f"unknown-resource: {any_id}")


def backward_chain(index: QueryIndex, resource_id: str) -> list[str]:
    """Everything the resource cites, sorted by id."""
    rid = index.resolve(resource_id)
    return sorted({c.cited_id for c in index.citations.values()
                   if c.citing_id == rid})


def forward_chain(index: QueryIndex, resource_id: str) -> list[str]:
    """Everything citing the resource, sorted by id."""
    rid = index.resolve(resource_id)
    return sorted({c.citing_id for c in index.citations.values()
                   if c.cited_id == rid})


def co_citations(index: QueryIndex, resource_id: str,
                 scope: str = "publication") -> dict[str, int]:
    """Resources cited together with the given one.

    publication scope: one count per citing publication. proximal scope:
    both citations must carry non-empty open excerpts with window=paragraph
    and an identical context group key.
    """
    rid = index.resolve(resource_id)
    counts: dict[str, int] = {}
    if scope == "publication":
        for citer in forward_chain(index, rid):
            for other in backward_chain(index, citer):
                if other != rid:
                    counts[other] = counts.get(other, 0) + 1
        return counts
    if scope != "proximal":
        raise ValueError(f"unknown co-citation scope: {scope!r}")

    def proximal_key(c: Citation):
        ctx = c.context
        if (ctx is None or ctx.access != "open" or not ctx.excerpt
                or ctx.window != "paragraph" or ctx.group is None):
            return None
        return (c.citing_id, ctx.group)

    target_keys = {proximal_key(c) for c in index.citations.values()
                   if c.cited_id == rid}
    target_keys.discard(None)
    for c in index.citations.values():
        if c.cited_id == rid:
            continue
        if proximal_key(c) in target_keys:
            counts[c.cited_id] = counts.get(c.cited_id, 0) + 1
    return counts


def citation_count(index: QueryIndex, resource_id: str, level: str) -> int:
    """Distinct citing resources at `level` whose citations' cited endpoint
    maps to the same node as the queried resource (distinct-pair counting)."""
    rid = index.resolve(resource_id)
    target = frbr_map(rid, level, index.resources)
    citers = set()
    for c in index.citations.values():
        if frbr_map(c.cited_id, level, index.resources) == target:
            citers.add(frbr_map(c.citing_id, level, index.resources))
    return len(citers)


def coverage_report(index: QueryIndex,
                    reference: dict[str, float]) -> dict:
    """Language shares against a reference distribution (TVD summary),
    typology counts, decade histogram and collection counts."""
    total_ref = sum(reference.values())
    if abs(total_ref - 1.0) > 1e-6:
        raise ValueError(
            f"invalid-reference-distribution: sums to {total_ref}")
    resources = list(index.resources.values())
    n = len(resources)
    lang_counts: dict[str, int] = {}
    typology_counts: dict[str, int] = {}
    year_histogram: dict[int, int] = {}
    collection_counts: dict[str, int] = {}
    for r in resources:
        lang = r.language or "und"
        lang_counts[lang] = lang_counts.get(lang, 0) + 1
        typology_counts[r.typology] = typology_counts.get(r.typology, 0) + 1
        if r.year is not None:
            decade = math.floor(r.year / 10) * 10
            year_histogram[decade] = year_histogram.get(decade, 0) + 1
        for coll in r.collections:
            collection_counts[coll] = collection_counts.get(coll, 0) + 1
    shares = {lang: count / n for lang, count in lang_counts.items()} if n else {}
    all_langs = set(shares) | set(reference)
    deltas = {lang: shares.get(lang, 0.0) - reference.get(lang, 0.0)
              for lang in sorted(all_langs)}
    tvd = 0.5 * sum(abs(d) for d in deltas.values())
    return {
        "language_shares": dict(sorted(shares.items())),
        "language_deltas": deltas,
        "tvd": tvd,
        "typology_counts": dict(sorted(typology_counts.items())),
        "year_histogram": dict(sorted(year_histogram.items())),
        "collection_counts": dict(sorted(collection_counts.items())),
    }


@dataclass(frozen=True)
class CapacityParams:
    total_articles_per_year: int
    ah_fraction: float
    years: int
    corpus_bytes: int
    corpus_articles: int
    corpus_triples: int
    corpus_resources: int

    def __post_init__(self):
        if not 0.0 <= self.ah_fraction <= 1.0:
            raise ValueError("ah_fraction must be in [0,1]")
        if self.years <= 0:
            raise ValueError("years must be positive")
        for name in ("corpus_articles", "corpus_resources"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "CapacityParams":
        return cls(
            total_articles_per_year=int(data["total_articles_per_year"]),
            ah_fraction=float(data["ah_fraction"]),
            years=int(data["years"]),
            corpus_bytes=int(data["corpus_bytes"]),
            corpus_articles=int(data["corpus_articles"]),
            corpus_triples=int(data["corpus_triples"]),
            corpus_resources=int(data["corpus_resources"]),
        )


def _sig4(x: float) -> float:
    if x == 0:
        return 0.0
    exp = math.floor(math.log10(abs(x)))
    factor = 10.0 ** (exp - 3)
    return round(x / factor) * factor


def estimate_capacity(params: CapacityParams) -> dict:
    """Desk arithmetic for storage/triple capacity; decimal units (GB=1e9,
    TB=1e12); values reported to 4 significant figures."""
    annual = params.total_articles_per_year * params.ah_fraction
    bytes_per_article = params.corpus_bytes / params.corpus_articles
    total_bytes = annual * params.years * bytes_per_article
    triples_per_resource = params.corpus_triples / params.corpus_resources
    total_triples = annual * params.years * triples_per_resource
    return {
        "annual_articles": _sig4(annual),
        "bytes_per_article": _sig4(bytes_per_article),
        "total_bytes": _sig4(total_bytes),
        "triples_per_resource": _sig4(triples_per_resource),
        "total_triples": _sig4(total_triples),
    }


def search_title(index: QueryIndex, query: str, limit: int = 100) -> list:
    """Case-insensitive normalized-title substring search."""
    needle = normalize_title(query)
    if not needle:
        return []
    hits = [r for r in index.resources.values()
            if needle in normalize_title(r.title)]
    hits.sort(key=lambda r: r.id)
    return hits[:limit]
