"""Federation layer: node registry, full + incremental harvesting over the
node harvest protocol, cross-provider dedup and the merged citation index.

The merge pools every node's source copies and re-resolves globally each run,
which makes it idempotent and harvest-order invariant by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .model import (
    Citation,
    Clock,
    ProvenanceRecord,
    SystemClock,
    citation_from_dict,
    citation_to_dict,
    record_provenance,
    resource_from_dict,
    resource_to_dict,
)
from .export import export_bytes
from .node import ChangePage, ChangeRecord, Node
from .resolution import ClusterMap, ResolutionConfig, deduplicate

__all__ = [
    "FederationError",
    "NodeEntry",
    "FederationConfig",
    "FederationIndex",
    "LocalNodeClient",
    "HttpNodeClient",
    "Federation",
]


class FederationError(ValueError):
    pass


class NodeUnreachableError(FederationError):
    pass


@dataclass
class NodeEntry:
    node_id: str
    base_url: str = ""
    enabled: bool = True


@dataclass
class FederationConfig:
    nodes: list[NodeEntry] = field(default_factory=list)
    resolution: ResolutionConfig = field(default_factory=ResolutionConfig)
    require_open_license: bool = True

    def __post_init__(self):
        ids = [n.node_id for n in self.nodes]
        if len(ids) != len(set(ids)):
            raise FederationError("duplicate node_id in federation config")

    @classmethod
    def from_dict(cls, data: dict) -> "FederationConfig":
        return cls(
            nodes=[NodeEntry(n["node_id"], n.get("base_url", ""),
                             n.get("enabled", True))
                   for n in data.get("nodes", [])],
            resolution=ResolutionConfig.from_dict(data.get("resolution", {})),
            require_open_license=data.get("require_open_license", True),
        )

    @classmethod
    def from_file(cls, path) -> "FederationConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class FederationIndex:
    resources: dict = field(default_factory=dict)  # canonical id -> resource
    citations: dict[str, Citation] = field(default_factory=dict)
    cluster_map: ClusterMap = field(default_factory=ClusterMap)
    lookup: dict[str, str] = field(default_factory=dict)  # any id/pid -> canonical
    provenance: dict[str, list[ProvenanceRecord]] = field(default_factory=dict)
    pending_citations: list[Citation] = field(default_factory=list)

    def resolve(self, any_id: str) -> str | None:
        if any_id in self.resources:
            return any_id
        return self.lookup.get(any_id)


class LocalNodeClient:
    """In-process client over a Node; used by tests and embedded setups."""

    def __init__(self, node: Node):
        self.node = node

    def meta(self) -> dict:
        return self.node.serve_meta()

    def dump_json(self) -> dict:
        return json.loads(self.node.serve_dump("json"))

    def changes(self, since: int, page_size: int = 1000) -> dict:
        return self.node.serve_changes(since, page_size).to_dict()


class HttpNodeClient:
    def __init__(self, base_url: str, timeout: float = 30.0):
        import httpx
        self.base_url = base_url.rstrip("/")
        self._client = httpx.Client(timeout=timeout)

    def _get(self, path: str, **params) -> "object":
        import httpx
        try:
            resp = self._client.get(self.base_url + path, params=params or None)
            resp.raise_for_status()
        except httpx.HTTPError as e:
            raise NodeUnreachableError(f"node-unreachable: {e}") from e
        return resp

    def meta(self) -> dict:
        return self._get("/meta").json()

    def dump_json(self) -> dict:
        return json.loads(self._get("/dump", format="json").content)

    def changes(self, since: int, page_size: int = 1000) -> dict:
        return self._get("/changes", since=since, page_size=page_size).json()


class Federation:
    def __init__(self, config: FederationConfig,
                 clients: dict[str, object] | None = None,
                 clock: Clock | None = None,
                 data_dir: str | Path | None = None):
        self.config = config
        self.clock = clock or SystemClock()
        self.clients = clients or {}
        for entry in config.nodes:
            if entry.node_id not in self.clients and entry.base_url:
                self.clients[entry.node_id] = HttpNodeClient(entry.base_url)
        # per-node source pools: node_id -> {entity id -> entity}
        self.source_resources: dict[str, dict] = {}
        self.source_citations: dict[str, dict[str, Citation]] = {}
        self.cursors: dict[str, int] = {}
        self.node_status: dict[str, dict] = {}
        self.index = FederationIndex()
        self._data_dir = Path(data_dir) if data_dir else None
        if self._data_dir and (self._data_dir / "sources.json").exists():
            self._load()

    # --- registry ---

    def register_node(self, node_id: str, base_url: str = "",
                      client=None) -> NodeEntry:
        if any(n.node_id == node_id for n in self.config.nodes):
            raise FederationError(f"duplicate-node-id: {node_id}")
        entry = NodeEntry(node_id=node_id, base_url=base_url)
        if client is not None:
            self.clients[node_id] = client
        elif base_url:
            self.clients[node_id] = HttpNodeClient(base_url)
        try:
            meta = self.clients[node_id].meta()
        except (KeyError, FederationError):
            meta = None
            entry.enabled = False
            self._note(node_id, error="node-unreachable; registration pending")
        if meta is not None and self.config.require_open_license \
                and meta.get("license") == "unspecified":
            entry.enabled = False
            self._note(node_id, error="license unspecified; node disabled")
        self.config.nodes.append(entry)
        return entry

    def _entry(self, node_id: str) -> NodeEntry:
        for n in self.config.nodes:
            if n.node_id == node_id:
                return n
        raise FederationError(f"unknown node: {node_id}")

    def _note(self, node_id: str, **kv):
        self.node_status.setdefault(node_id, {}).update(kv)

    # --- harvesting ---

    def harvest_full(self, node_id: str, max_attempts: int = 3) -> dict:
        """Fetch /dump with a pre/post /meta seq check; retry when the node
        advanced mid-dump."""
        entry = self._entry(node_id)
        if not entry.enabled:
            raise FederationError(f"node disabled: {node_id}")
        client = self.clients[node_id]
        last_error = None
        for _ in range(max_attempts):
            before = client.meta()
            dump = client.dump_json()
            after = client.meta()
            if before["last_seq"] != after["last_seq"]:
                last_error = "seq advanced mid-dump"
                continue
            resources, citations = self._validate_dump(dump)
            self.source_resources[node_id] = resources
            self.source_citations[node_id] = citations
            self.cursors[node_id] = after["last_seq"]
            self._note(node_id, last_harvest=self.clock.now(), error=None)
            self._save()
            return {"node_id": node_id,
                    "resources": len(resources), "citations": len(citations)}
        raise FederationError(f"seq-race-exhausted: {last_error}")

    @staticmethod
    def _validate_dump(dump: dict):
        if not isinstance(dump, dict) or "resources" not in dump \
                or "citations" not in dump:
            raise FederationError("dump-invalid: missing resources/citations")
        try:
            resources = {d["id"]: resource_from_dict(d)
                         for d in dump["resources"]}
            citations = {}
            for d in dump["citations"]:
                c = citation_from_dict(d)
                citations[c.citation_id] = c
        except (KeyError, TypeError, ValueError) as e:
            raise FederationError(f"dump-invalid: {e}") from e
        return resources, citations

    def harvest_incremental(self, node_id: str, page_size: int = 1000) -> dict:
        """Page /changes past the cursor; all-or-nothing per run."""
        entry = self._entry(node_id)
        if not entry.enabled:
            raise FederationError(f"node disabled: {node_id}")
        if node_id not in self.cursors:
            return self.harvest_full(node_id)
        client = self.clients[node_id]
        since = self.cursors[node_id]
        pages: list[dict] = []
        cursor = since
        while True:
            page = client.changes(cursor, page_size)
            pages.append(page)
            if page.get("next_seq") is None:
                break
            cursor = page["next_seq"]
        resources = dict(self.source_resources.get(node_id, {}))
        citations = dict(self.source_citations.get(node_id, {}))
        applied = 0
        last_seq = since
        for page in pages:
            for rec in page["records"]:
                applied += 1
                last_seq = max(last_seq, rec["seq"])
                kind, eid = rec["kind"], rec["entity_id"]
                if rec["op"] == "delete":
                    (resources if kind == "resource" else citations).pop(eid, None)
                elif kind == "resource":
                    resources[eid] = resource_from_dict(rec["payload"])
                else:
                    citations[eid] = citation_from_dict(rec["payload"])
        self.source_resources[node_id] = resources
        self.source_citations[node_id] = citations
        self.cursors[node_id] = max(self.cursors[node_id], last_seq)
        self._note(node_id, last_harvest=self.clock.now(), error=None)
        self._save()
        return {"node_id": node_id, "changes_applied": applied}

    def harvest(self, node_id: str) -> dict:
        if node_id in self.cursors:
            return self.harvest_incremental(node_id)
        return self.harvest_full(node_id)

    # --- merge ---

    def merge(self) -> FederationIndex:
        """Pool every node's source copies and re-resolve globally; citations
        with unresolved endpoints are quarantined and retried next merge."""
        pooled: dict[str, object] = {}
        contributors: dict[str, set[str]] = {}
        for node_id in sorted(self.source_resources):
            for rid, r in self.source_resources[node_id].items():
                # same provider id from two nodes: lexicographically smallest
                # node wins, all contributors recorded
                if rid not in pooled:
                    pooled[rid] = r
                contributors.setdefault(rid, set()).add(node_id)
        citation_pool: dict[str, Citation] = {}
        citation_nodes: dict[str, set[str]] = {}
        for node_id in sorted(self.source_citations):
            for cid, c in self.source_citations[node_id].items():
                if cid not in citation_pool:
                    citation_pool[cid] = c
                citation_nodes.setdefault(cid, set()).add(node_id)

        resolvable, pending = [], []
        for cid in sorted(citation_pool):
            c = citation_pool[cid]
            if c.citing_id in pooled and c.cited_id in pooled:
                resolvable.append(c)
            else:
                pending.append(c)

        provenance: dict[str, list[ProvenanceRecord]] = {}
        resources, citations, cm = deduplicate(
            list(pooled.values()), resolvable, self.config.resolution,
            self.clock, provenance=provenance)

        index = FederationIndex(cluster_map=cm, pending_citations=pending)
        canonical_of: dict[str, str] = {}
        for cluster_id in sorted(cm.clusters):
            pid = cm.canonical[cluster_id]
            canonical = pid.value if pid.scheme == "local" else pid.render()
            nodes = set()
            for member in cm.clusters[cluster_id]:
                canonical_of[member] = canonical
                index.lookup[member] = canonical
                nodes |= contributors.get(member, set())
            chain = provenance.setdefault(canonical, [])
            record_provenance(
                chain, canonical,
                "merge" if len(nodes) > 1 else "create",
                agent="federation", source=",".join(sorted(nodes)) or "local",
                clock=self.clock)
        for r in resources:
            index.resources[r.id] = r
            for pid in r.identifiers:
                index.lookup.setdefault(pid.render(), r.id)
        for c in citations:
            index.citations[c.citation_id] = c
        index.provenance = provenance
        self.index = index
        self._save()
        return index

    # --- reporting / export ---

    def federation_status(self) -> dict:
        nodes = []
        for entry in self.config.nodes:
            st = self.node_status.get(entry.node_id, {})
            nodes.append({
                "node_id": entry.node_id,
                "enabled": entry.enabled,
                "cursor": self.cursors.get(entry.node_id, 0),
                "last_harvest": st.get("last_harvest"),
                "last_error": st.get("error"),
            })
        return {
            "nodes": nodes,
            "index": {
                "resources": len(self.index.resources),
                "citations": len(self.index.citations),
                "pending_citations": len(self.index.pending_citations),
            },
        }

    def export(self, fmt: str) -> bytes:
        return export_bytes(list(self.index.resources.values()),
                            list(self.index.citations.values()), fmt,
                            header={"provider_id": "federation",
                                    "license": "cc0"})

    # --- persistence ---

    def _save(self):
        if not self._data_dir:
            return
        self._data_dir.mkdir(parents=True, exist_ok=True)
        doc = {
            "cursors": self.cursors,
            "sources": {
                node_id: {
                    "resources": [resource_to_dict(r)
                                  for r in sorted(res.values(), key=lambda r: r.id)],
                    "citations": [citation_to_dict(c)
                                  for c in sorted(cit.values(),
                                                  key=lambda c: c.citation_id)],
                }
                for node_id, (res, cit) in sorted(
                    {n: (self.source_resources.get(n, {}),
                         self.source_citations.get(n, {}))
                     for n in self.source_resources}.items())
            },
        }
        (self._data_dir / "sources.json").write_text(
            json.dumps(doc, ensure_ascii=False), encoding="utf-8")

    def _load(self):
        doc = json.loads((self._data_dir / "sources.json")
                         .read_text(encoding="utf-8"))
        self.cursors = {k: int(v) for k, v in doc.get("cursors", {}).items()}
        for node_id, pools in doc.get("sources", {}).items():
            self.source_resources[node_id] = {
                d["id"]: resource_from_dict(d) for d in pools["resources"]}
            self.source_citations[node_id] = {}
            for d in pools["citations"]:
                c = citation_from_dict(d)
                self.source_citations[node_id][c.citation_id] = c
