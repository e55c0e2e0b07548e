"""Cross-provider deduplication: identifier clustering, metadata
disambiguation, reference matching and canonical-id selection.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field, replace
from functools import lru_cache

from .model import (
    Author,
    BibliographicResource,
    Citation,
    Clock,
    PersistentIdentifier,
    ProvenanceRecord,
    record_provenance,
    snapshot_json,
)

__all__ = [
    "ResolutionConfig",
    "ClusterMap",
    "normalize_title",
    "identifier_clusters",
    "metadata_similarity",
    "deduplicate",
    "match_reference",
    "choose_canonical_id",
]

# identifier schemes that identify resources; orcid/viaf identify agents
# and never link resources
RESOURCE_LINK_SCHEMES = frozenset({"doi", "handle", "isbn", "uri"})

_SCHEME_PRIORITY = {"doi": 0, "handle": 1, "isbn": 2, "uri": 3, "local": 4}


@dataclass(frozen=True)
class ResolutionConfig:
    similarity_threshold: float = 0.8
    candidate_threshold: float = 0.7
    title_weight: float = 0.6
    year_weight: float = 0.2
    author_weight: float = 0.2
    blocking_key_tokens: int = 4

    def __post_init__(self):
        total = self.title_weight + self.year_weight + self.author_weight
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"similarity weights must sum to 1.0, got {total}")
        for t in (self.similarity_threshold, self.candidate_threshold):
            if not 0.0 <= t <= 1.0:
                raise ValueError(f"threshold out of [0,1]: {t}")

    @classmethod
    def from_dict(cls, data: dict) -> "ResolutionConfig":
        weights = data.get("weights", {})
        return cls(
            similarity_threshold=data.get("similarity_threshold", 0.8),
            candidate_threshold=data.get("candidate_threshold", 0.7),
            title_weight=weights.get("title", 0.6),
            year_weight=weights.get("year", 0.2),
            author_weight=weights.get("author", 0.2),
            blocking_key_tokens=data.get("blocking_key_tokens", 4),
        )

    @classmethod
    def from_file(cls, path) -> "ResolutionConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class ClusterMap:
    mapping: dict[str, str] = field(default_factory=dict)  # resource id -> cluster id
    clusters: dict[str, set[str]] = field(default_factory=dict)
    canonical: dict[str, PersistentIdentifier] = field(default_factory=dict)

    def members(self, cluster_id: str) -> set[str]:
        return self.clusters[cluster_id]


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # smaller root wins -> deterministic representatives
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra

    def groups(self) -> dict[str, set[str]]:
        out: dict[str, set[str]] = {}
        for x in self.parent:
            out.setdefault(self.find(x), set()).add(x)
        return out


@lru_cache(maxsize=65536)
def normalize_title(text: str) -> str:
    """NFKD, strip combining marks, lowercase, collapse non-alphanumeric runs
    to single spaces, trim. Idempotent."""
    decomposed = unicodedata.normalize("NFKD", text)
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    out = []
    prev_space = True
    for c in stripped.lower():
        if c.isalnum():
            out.append(c)
            prev_space = False
        elif not prev_space:
            out.append(" ")
            prev_space = True
    return "".join(out).rstrip()


def blocking_key(resource: BibliographicResource, tokens: int) -> str:
    return " ".join(normalize_title(resource.title).split()[:tokens])


def _clusters_from_groups(groups: dict[str, set[str]]) -> ClusterMap:
    cm = ClusterMap()
    for members in groups.values():
        cluster_id = min(members)
        cm.clusters[cluster_id] = set(members)
        for m in members:
            cm.mapping[m] = cluster_id
    return cm


def identifier_clusters(resources: list[BibliographicResource]) -> ClusterMap:
    """Connected components over shared resource identifiers (doi, handle,
    isbn, uri); agent schemes never link; singletons form their own clusters."""
    uf = _UnionFind([r.id for r in resources])
    by_pid: dict[PersistentIdentifier, str] = {}
    for r in resources:
        for pid in r.identifiers:
            if pid.scheme not in RESOURCE_LINK_SCHEMES:
                continue
            if pid in by_pid:
                uf.union(by_pid[pid], r.id)
            else:
                by_pid[pid] = r.id
    return _clusters_from_groups(uf.groups())


def _first_author_key(r: BibliographicResource) -> str:
    return normalize_title(r.authors[0].family) if r.authors else ""


def metadata_similarity(a: BibliographicResource, b: BibliographicResource,
                        config: ResolutionConfig) -> float:
    """Weighted exact-match score over normalized title, year and first
    author family name; empty values never match."""
    ta, tb = normalize_title(a.title), normalize_title(b.title)
    title = 1.0 if ta and ta == tb else 0.0
    year = 1.0 if a.year is not None and a.year == b.year else 0.0
    fa, fb = _first_author_key(a), _first_author_key(b)
    author = 1.0 if fa and fa == fb else 0.0
    return (config.title_weight * title + config.year_weight * year
            + config.author_weight * author)


def choose_canonical_id(identifiers, internal_ids) -> PersistentIdentifier:
    """Cluster-representative identifier: doi > handle > isbn > uri > local,
    ties by smallest value; identifierless clusters fall back to the smallest
    internal id as a local-scheme identifier."""
    ranked = [p for p in identifiers if p.scheme in _SCHEME_PRIORITY]
    if ranked:
        return min(ranked, key=lambda p: (_SCHEME_PRIORITY[p.scheme], p.value))
    return PersistentIdentifier("local", min(internal_ids))


def _merge_cluster(members: list[BibliographicResource]) -> BibliographicResource:
    """Field-wise union; scalar conflicts resolved by ascending provider-id
    order (provider = id prefix before the first colon)."""
    ordered = sorted(members, key=lambda r: (r.id.split(":", 1)[0], r.id))
    merged = ordered[0]
    identifiers = []
    collections = []
    for r in ordered:
        identifiers.extend(r.identifiers)
        collections.extend(r.collections)
    for r in ordered[1:]:
        if not merged.title and r.title:
            merged = replace(merged, title=r.title)
        if merged.year is None and r.year is not None:
            merged = replace(merged, year=r.year)
        if merged.language is None and r.language is not None:
            merged = replace(merged, language=r.language)
        if merged.parent_id is None and r.parent_id is not None:
            merged = replace(merged, parent_id=r.parent_id)
        if not merged.authors and r.authors:
            merged = replace(merged, authors=r.authors)
        if r.is_primary_source:
            merged = replace(merged, is_primary_source=True)
    return replace(merged, identifiers=tuple(identifiers),
                   collections=tuple(collections))


def _with_canonicals(cm: ClusterMap,
                     by_id: dict[str, BibliographicResource]) -> ClusterMap:
    for cluster_id, members in cm.clusters.items():
        ids = [p for m in sorted(members) for p in by_id[m].identifiers]
        cm.canonical[cluster_id] = choose_canonical_id(ids, members)
    return cm


def _resolve_clusters(resources: list[BibliographicResource],
                      config: ResolutionConfig) -> ClusterMap:
    """Phase 1: exact identifier clustering. Phase 2: within each title-prefix
    blocking group, link resources whose metadata similarity reaches the merge
    threshold; identifier links bypass blocking entirely."""
    by_id = {r.id: r for r in resources}
    cm = identifier_clusters(resources)

    uf = _UnionFind([r.id for r in resources])
    for cluster_id, members in cm.clusters.items():
        for m in members:
            uf.union(cluster_id, m)
    blocks: dict[str, list[str]] = {}
    for r in sorted(resources, key=lambda r: r.id):
        key = blocking_key(r, config.blocking_key_tokens)
        if key:
            blocks.setdefault(key, []).append(r.id)
    for ids in blocks.values():
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                if metadata_similarity(by_id[a], by_id[b], config) \
                        >= config.similarity_threshold:
                    uf.union(a, b)
    return _with_canonicals(_clusters_from_groups(uf.groups()), by_id)


def resolve_clusters_bruteforce(resources: list[BibliographicResource],
                                config: ResolutionConfig) -> ClusterMap:
    """O(n^2) oracle: score every pair (no blocking index), link on shared
    resource identifiers or on matching blocking keys plus similarity at the
    merge threshold, then take the transitive closure."""
    by_id = {r.id: r for r in resources}
    uf = _UnionFind([r.id for r in resources])
    items = sorted(by_id)
    for i, a in enumerate(items):
        for b in items[i + 1:]:
            ra, rb = by_id[a], by_id[b]
            shared = {p for p in ra.identifiers if p.scheme in RESOURCE_LINK_SCHEMES} \
                & {p for p in rb.identifiers if p.scheme in RESOURCE_LINK_SCHEMES}
            if shared:
                uf.union(a, b)
                continue
            ka = blocking_key(ra, config.blocking_key_tokens)
            kb = blocking_key(rb, config.blocking_key_tokens)
            if ka and ka == kb and metadata_similarity(ra, rb, config) \
                    >= config.similarity_threshold:
                uf.union(a, b)
    return _with_canonicals(_clusters_from_groups(uf.groups()), by_id)


def deduplicate(resources: list[BibliographicResource],
                citations: list[Citation],
                config: ResolutionConfig,
                clock: Clock,
                provenance: dict[str, list[ProvenanceRecord]] | None = None,
                canonical_ids: bool = True):
    """Two-phase dedup: exact identifier clustering then blocked metadata
    disambiguation. Citations are rewritten to canonical endpoints and
    collapsed; merges are recorded in the provenance store when supplied.

    Returns (merged resources, rewritten citations, ClusterMap).
    """
    by_id = {r.id: r for r in resources}
    if len(by_id) != len(resources):
        raise ValueError("internal ids must be unique within input")
    cm = _resolve_clusters(resources, config)

    def canonical_internal(cluster_id: str) -> str:
        if not canonical_ids:
            return cluster_id
        pid = cm.canonical[cluster_id]
        return pid.value if pid.scheme == "local" else pid.render()

    merged: dict[str, BibliographicResource] = {}
    id_rewrite: dict[str, str] = {}
    for cluster_id in sorted(cm.clusters):
        members = sorted(cm.clusters[cluster_id])
        new_id = canonical_internal(cluster_id)
        rep = _merge_cluster([by_id[m] for m in members])
        rep = replace(rep, id=new_id)
        merged[new_id] = rep
        for m in members:
            id_rewrite[m] = new_id
        if provenance is not None and len(members) > 1:
            chain = provenance.setdefault(new_id, [])
            record_provenance(
                chain, new_id, "merge", agent="dedup",
                source=",".join(members), clock=clock,
                prior=snapshot_json([snapshot_json(by_id[m]) for m in members]),
            )

    # parent pointers follow their clusters
    fixed = {}
    for rid, r in merged.items():
        if r.parent_id and r.parent_id in id_rewrite:
            r = replace(r, parent_id=id_rewrite[r.parent_id])
        fixed[rid] = r
    merged = fixed

    rewritten: dict[str, Citation] = {}
    for c in sorted(citations, key=lambda c: c.citation_id):
        new = replace(c, citing_id=id_rewrite.get(c.citing_id, c.citing_id),
                      cited_id=id_rewrite.get(c.cited_id, c.cited_id))
        key = new.citation_id
        if key in rewritten:
            prev = rewritten[key]
            rewritten[key] = replace(
                prev, provenance=prev.provenance + new.provenance,
                context=prev.context or new.context,
                locus=prev.locus or new.locus,
            )
        else:
            rewritten[key] = new

    resources_out = [merged[k] for k in sorted(merged)]
    citations_out = [rewritten[k] for k in sorted(rewritten)]
    return resources_out, citations_out, cm


def match_reference(reference: dict, catalogue: list[BibliographicResource],
                    config: ResolutionConfig):
    """Rank catalogue entries against a field-structured reference.

    Candidates share the blocking key or any embedded identifier; results at
    or above candidate_threshold, sorted by (score desc, id asc).
    """
    title = reference.get("title", "")
    if not title:
        raise ValueError("empty-reference: title required")
    probe = BibliographicResource(
        id="probe:ref",
        title=title,
        year=reference.get("year"),
        authors=(Author(reference["author_family"]),)
        if reference.get("author_family") else (),
        identifiers=tuple(reference.get("identifiers", ())),
    )
    key = blocking_key(probe, config.blocking_key_tokens)
    ref_pids = {p for p in probe.identifiers if p.scheme in RESOURCE_LINK_SCHEMES}
    results = []
    for r in catalogue:
        linked = bool(ref_pids & set(r.identifiers))
        if not linked and blocking_key(r, config.blocking_key_tokens) != key:
            continue
        score = metadata_similarity(probe, r, config)
        if score >= config.candidate_threshold:
            results.append((score, r.id, r))
    results.sort(key=lambda t: (-t[0], t[1]))
    return [(score, r) for score, _, r in results]
