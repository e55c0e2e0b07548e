"""Core domain model: resources, citations, identifiers, compliance,
FRBR aggregation and provenance/change tracking.

All value types are immutable (frozen dataclasses); stores hand out
snapshots and are mutated only through their owning service.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field, replace

__all__ = [
    "PID_SCHEMES",
    "TYPOLOGIES",
    "FRBR_LEVELS",
    "FRBR_ORDER",
    "LICENSES",
    "PersistentIdentifier",
    "Author",
    "CitationContext",
    "BibliographicResource",
    "Citation",
    "ComplianceVector",
    "ProvenanceRecord",
    "Clock",
    "SystemClock",
    "TickingClock",
    "ModelError",
    "MalformedIdError",
    "UnknownResourceError",
    "ClockRegressionError",
    "SnapshotNotFoundError",
    "mint_citation_id",
    "check_open_citation",
    "frbr_map",
    "frbr_rollup",
    "record_provenance",
    "restore_snapshot",
]

PID_SCHEMES = frozenset({"doi", "handle", "isbn", "viaf", "orcid", "uri", "local"})

TYPOLOGIES = frozenset({
    "journal-article", "book", "book-chapter", "edited-volume", "journal",
    "archival-document", "manuscript", "inscription", "papyrus", "artwork",
    "other",
})

# item < manifestation < expression < work
FRBR_ORDER = {"item": 0, "manifestation": 1, "expression": 2, "work": 3}
FRBR_LEVELS = ("item", "manifestation", "expression", "work")

LICENSES = frozenset({"cc0", "other-open", "unspecified"})

CONTEXT_WINDOWS = frozenset({"sentence", "paragraph", "custom"})
CONTEXT_ACCESS = frozenset({"open", "restricted"})


class ModelError(ValueError):
    """Base class for domain-model violations."""


class MalformedIdError(ModelError):
    pass


class UnknownResourceError(ModelError):
    pass


class ClockRegressionError(ModelError):
    pass


class SnapshotNotFoundError(ModelError):
    pass


@dataclass(frozen=True, order=True)
class PersistentIdentifier:
    scheme: str
    value: str

    def __post_init__(self):
        if self.scheme not in PID_SCHEMES:
            raise ModelError(f"unknown identifier scheme: {self.scheme!r}")
        value = self.value.strip()
        if self.scheme == "doi":
            value = value.lower()
        if not value:
            raise ModelError("identifier value must be non-empty")
        object.__setattr__(self, "value", value)

    def render(self) -> str:
        return f"{self.scheme}:{self.value}"

    @classmethod
    def parse(cls, text: str) -> "PersistentIdentifier":
        scheme, sep, value = text.partition(":")
        if not sep:
            raise ModelError(f"identifier string missing scheme: {text!r}")
        return cls(scheme, value)


@dataclass(frozen=True)
class Author:
    family: str
    given: str | None = None


@dataclass(frozen=True)
class CitationContext:
    excerpt: str
    window: str = "custom"
    access: str = "open"
    # opaque same-paragraph evidence key for proximal co-citation
    group: str | None = None

    def __post_init__(self):
        if self.window not in CONTEXT_WINDOWS:
            raise ModelError(f"unknown context window: {self.window!r}")
        if self.access not in CONTEXT_ACCESS:
            raise ModelError(f"unknown context access: {self.access!r}")


def _validate_internal_id(rid: str) -> str:
    if not rid or "->" in rid:
        raise MalformedIdError(f"malformed-id: {rid!r}")
    return rid


@dataclass(frozen=True)
class BibliographicResource:
    id: str
    title: str = ""
    identifiers: tuple[PersistentIdentifier, ...] = ()
    typology: str = "other"
    authors: tuple[Author, ...] = ()
    year: int | None = None
    language: str | None = None
    frbr_level: str = "manifestation"
    parent_id: str | None = None
    collections: tuple[str, ...] = ()
    is_primary_source: bool = False

    def __post_init__(self):
        _validate_internal_id(self.id)
        if self.typology not in TYPOLOGIES:
            raise ModelError(f"unknown typology: {self.typology!r}")
        if self.frbr_level not in FRBR_ORDER:
            raise ModelError(f"unknown FRBR level: {self.frbr_level!r}")
        # collapse duplicate (scheme, value) pairs, keep deterministic order
        seen = dict.fromkeys(self.identifiers)
        object.__setattr__(self, "identifiers", tuple(sorted(seen)))
        object.__setattr__(self, "collections", tuple(sorted(set(self.collections))))


@dataclass(frozen=True)
class Citation:
    citing_id: str
    cited_id: str
    context: CitationContext | None = None
    locus: str | None = None
    license: str = "unspecified"
    provenance: tuple[str, ...] = ()

    def __post_init__(self):
        if self.license not in LICENSES:
            raise ModelError(f"unknown license: {self.license!r}")
        _validate_internal_id(self.citing_id)
        _validate_internal_id(self.cited_id)

    @property
    def citation_id(self) -> str:
        return mint_citation_id(self.citing_id, self.cited_id)


@dataclass(frozen=True)
class ComplianceVector:
    structured: bool
    separate: bool
    open: bool
    identifiable: bool
    available: bool

    @property
    def is_open_citation(self) -> bool:
        return (self.structured and self.separate and self.open
                and self.identifiable and self.available)


@dataclass(frozen=True)
class ProvenanceRecord:
    prov_id: str
    agent: str
    source: str
    activity: str
    timestamp: str
    prior: str | None = None  # JSON snapshot of the entity before this activity

    def __post_init__(self):
        if self.activity not in {"create", "update", "merge", "delete"}:
            raise ModelError(f"unknown activity: {self.activity!r}")
        if self.activity == "merge" and len(self.source.split(",")) < 2:
            raise ModelError("merge records need >=2 comma-separated sources")


class Clock:
    """Timestamp source; injected for deterministic tests."""

    def now(self) -> str:
        raise NotImplementedError


class SystemClock(Clock):
    def now(self) -> str:
        t = _dt.datetime.now(_dt.timezone.utc)
        return t.strftime("%Y-%m-%dT%H:%M:%S.") + f"{t.microsecond // 1000:03d}Z"


class TickingClock(Clock):
    """Deterministic clock advancing one millisecond per call."""

    def __init__(self, start: str = "2020-01-01T00:00:00.000Z"):
        base = _dt.datetime.strptime(start, "%Y-%m-%dT%H:%M:%S.%fZ")
        self._t = base.replace(tzinfo=_dt.timezone.utc)

    def now(self) -> str:
        t = self._t
        self._t = t + _dt.timedelta(milliseconds=1)
        return t.strftime("%Y-%m-%dT%H:%M:%S.") + f"{t.microsecond // 1000:03d}Z"


def mint_citation_id(citing_id: str, cited_id: str) -> str:
    """Stable citation identity: pure function of the ordered endpoint pair."""
    _validate_internal_id(citing_id)
    _validate_internal_id(cited_id)
    return f"{citing_id}->{cited_id}"


def check_open_citation(citation: Citation,
                        citing: BibliographicResource,
                        cited: BibliographicResource,
                        reachable: bool,
                        separate: bool = True) -> ComplianceVector:
    """Evaluate the five open-citation gates; total over valid inputs.

    `separate` is supplied by ingest: False only for candidate records still
    embedded in unparsed reference text.
    """
    structured = bool(citing.title) and bool(cited.title)
    open_ = citation.license in {"cc0", "other-open"}
    identifiable = (bool(citation.citation_id)
                    and len(citing.identifiers) > 0
                    and len(cited.identifiers) > 0)
    return ComplianceVector(
        structured=structured,
        separate=separate,
        open=open_,
        identifiable=identifiable,
        available=bool(reachable),
    )


def frbr_map(resource_id: str, level: str,
             store: dict[str, BibliographicResource]) -> str:
    """Walk parent links upward toward `level`, never past it.

    Returns the id of the chain node closest to `level` from below (or the
    resource itself when it already sits at or above `level`); a resource
    stands in for its missing higher levels.
    """
    if level not in FRBR_ORDER:
        raise ModelError(f"unknown FRBR level: {level!r}")
    if resource_id not in store:
        raise UnknownResourceError(f"unknown-resource: {resource_id}")
    target = FRBR_ORDER[level]
    current = store[resource_id]
    hops = 0
    while FRBR_ORDER[current.frbr_level] < target and current.parent_id:
        parent = store.get(current.parent_id)
        if parent is None or FRBR_ORDER[parent.frbr_level] > target:
            break
        current = parent
        hops += 1
        if hops > 3:  # parent chains are at most 3 links
            raise ModelError(f"FRBR chain too long at {resource_id}")
    return current.id


def frbr_rollup(citations, level: str,
                store: dict[str, BibliographicResource]) -> dict[tuple[str, str], int]:
    """Aggregate citations at a FRBR level, counting distinct mapped pairs once."""
    pairs = {
        (frbr_map(c.citing_id, level, store), frbr_map(c.cited_id, level, store))
        for c in citations
    }
    return {pair: 1 for pair in sorted(pairs)}


def record_provenance(chain: list[ProvenanceRecord],
                      entity_id: str,
                      activity: str,
                      agent: str,
                      source: str,
                      clock: Clock,
                      prior: str | None = None) -> ProvenanceRecord:
    """Append a provenance record to an entity's chain; timestamps non-decreasing."""
    ts = clock.now()
    if chain and ts < chain[-1].timestamp:
        raise ClockRegressionError(
            f"clock regression: {ts} < {chain[-1].timestamp}")
    rec = ProvenanceRecord(
        prov_id=f"{entity_id}#{len(chain) + 1}",
        agent=agent,
        source=source,
        activity=activity,
        timestamp=ts,
        prior=prior,
    )
    chain.append(rec)
    return rec


def restore_snapshot(chain: list[ProvenanceRecord],
                     current_state: str,
                     as_of: str) -> str:
    """Entity state as of the latest record with timestamp <= as_of.

    State after record i is record i+1's prior snapshot, or the live state
    for the newest record. Read-only over the chain.
    """
    if not chain:
        raise SnapshotNotFoundError("entity has no provenance chain")
    idx = -1
    for i, rec in enumerate(chain):
        if rec.timestamp <= as_of:
            idx = i
    if idx < 0:
        raise SnapshotNotFoundError(f"not-found: {as_of} precedes creation")
    if idx == len(chain) - 1:
        return current_state
    nxt = chain[idx + 1].prior
    if nxt is None:
        raise SnapshotNotFoundError(
            f"no snapshot recorded between {chain[idx].timestamp} and {as_of}")
    return nxt


# --- serialization helpers shared by stores, wire formats and exporters ---

def resource_to_dict(r: BibliographicResource) -> dict:
    return {
        "id": r.id,
        "title": r.title,
        "authors": [
            {"family": a.family, **({"given": a.given} if a.given else {})}
            for a in r.authors
        ],
        "year": r.year,
        "language": r.language,
        "typology": r.typology,
        "frbr_level": r.frbr_level,
        "parent_id": r.parent_id,
        "identifiers": [{"scheme": p.scheme, "value": p.value} for p in r.identifiers],
        "collections": list(r.collections),
        "is_primary_source": r.is_primary_source,
    }


def resource_from_dict(d: dict) -> BibliographicResource:
    return BibliographicResource(
        id=d["id"],
        title=d.get("title") or "",
        authors=tuple(Author(a["family"], a.get("given")) for a in d.get("authors", [])),
        year=d.get("year"),
        language=d.get("language"),
        typology=d.get("typology") or "other",
        frbr_level=d.get("frbr_level") or "manifestation",
        parent_id=d.get("parent_id"),
        identifiers=tuple(
            PersistentIdentifier(p["scheme"], p["value"])
            for p in d.get("identifiers", [])
        ),
        collections=tuple(d.get("collections", [])),
        is_primary_source=bool(d.get("is_primary_source", False)),
    )


def citation_to_dict(c: Citation) -> dict:
    d = {
        "citation_id": c.citation_id,
        "citing_id": c.citing_id,
        "cited_id": c.cited_id,
        "locus": c.locus,
        "license": c.license,
        "provenance": list(c.provenance),
    }
    if c.context is not None:
        ctx = {"access": c.context.access}
        if c.context.access == "open":
            ctx["excerpt"] = c.context.excerpt
            ctx["window"] = c.context.window
            if c.context.group is not None:
                ctx["group"] = c.context.group
        d["context"] = ctx
    else:
        d["context"] = None
    return d


def citation_from_dict(d: dict) -> Citation:
    ctx = d.get("context")
    context = None
    if ctx is not None:
        context = CitationContext(
            excerpt=ctx.get("excerpt", ""),
            window=ctx.get("window", "custom"),
            access=ctx.get("access", "open"),
            group=ctx.get("group"),
        )
    return Citation(
        citing_id=d["citing_id"],
        cited_id=d["cited_id"],
        context=context,
        locus=d.get("locus"),
        license=d.get("license", "unspecified"),
        provenance=tuple(d.get("provenance", [])),
    )


def snapshot_json(obj) -> str:
    """Canonical JSON snapshot used in provenance `prior` fields."""
    if isinstance(obj, BibliographicResource):
        payload = resource_to_dict(obj)
    elif isinstance(obj, Citation):
        payload = citation_to_dict(obj)
    else:
        payload = obj
    return json.dumps(payload, sort_keys=True, ensure_ascii=False)


def redact_citation(c: Citation) -> Citation:
    """Strip restricted excerpt text, leaving only the restricted marker."""
    if c.context is not None and c.context.access == "restricted":
        return replace(c, context=CitationContext(excerpt="", window="custom",
                                                  access="restricted"))
    return c
