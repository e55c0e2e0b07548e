"""Provider node: entity stores, append-only change log, access gating and
the harvest surface (meta / dump / change stream / per-record lookups).

State persists as JSON-lines files in a data directory (entities.jsonl,
changes.jsonl) loaded at startup; single writer, snapshot readers.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

from .model import (
    Citation,
    CitationContext,
    Clock,
    ProvenanceRecord,
    SystemClock,
    citation_from_dict,
    citation_to_dict,
    record_provenance,
    redact_citation,
    resource_from_dict,
    resource_to_dict,
    snapshot_json,
)
from .export import export_bytes
from .ingest import DatasetHeader

__all__ = ["ChangeRecord", "ChangePage", "Node", "NodeError",
           "UnknownCitationError", "RestrictedContextError",
           "DEFAULT_PAGE_SIZE", "MAX_PAGE_SIZE"]

DEFAULT_PAGE_SIZE = 1000
MAX_PAGE_SIZE = 10000


class NodeError(ValueError):
    pass


class UnknownCitationError(NodeError):
    pass


class RestrictedContextError(NodeError):
    pass


@dataclass(frozen=True)
class ChangeRecord:
    seq: int
    timestamp: str
    op: str  # create | update | delete
    kind: str  # resource | citation
    entity_id: str
    payload: dict | None = None  # absent for delete

    def to_dict(self) -> dict:
        return {"seq": self.seq, "timestamp": self.timestamp, "op": self.op,
                "kind": self.kind, "entity_id": self.entity_id,
                "payload": self.payload}

    @classmethod
    def from_dict(cls, d: dict) -> "ChangeRecord":
        return cls(d["seq"], d["timestamp"], d["op"], d["kind"],
                   d["entity_id"], d.get("payload"))


@dataclass
class ChangePage:
    records: list[ChangeRecord]
    next_seq: int | None = None

    def to_dict(self) -> dict:
        return {"records": [r.to_dict() for r in self.records],
                "next_seq": self.next_seq}


class Node:
    def __init__(self, node_id: str, data_dir: str | Path | None = None,
                 clock: Clock | None = None):
        self.node_id = node_id
        self.clock = clock or SystemClock()
        self.resources: dict[str, object] = {}
        self.citations: dict[str, Citation] = {}
        self.provenance: dict[str, list[ProvenanceRecord]] = {}
        self.access_policies: dict[str, str] = {}
        self.change_log: list[ChangeRecord] = []
        self.license = "unspecified"
        self._lock = threading.Lock()
        self._data_dir = Path(data_dir) if data_dir else None
        if self._data_dir:
            self._data_dir.mkdir(parents=True, exist_ok=True)
            self._load()

    # --- persistence (append-only JSON lines) ---

    def _load(self):
        changes = self._data_dir / "changes.jsonl"
        if changes.exists():
            with changes.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self._apply_change(ChangeRecord.from_dict(json.loads(line)))
        meta = self._data_dir / "node.json"
        if meta.exists():
            doc = json.loads(meta.read_text(encoding="utf-8"))
            self.license = doc.get("license", "unspecified")

    def _persist_change(self, rec: ChangeRecord):
        if not self._data_dir:
            return
        with (self._data_dir / "changes.jsonl").open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")

    def _persist_meta(self):
        if not self._data_dir:
            return
        (self._data_dir / "node.json").write_text(
            json.dumps({"node_id": self.node_id, "license": self.license}),
            encoding="utf-8")

    def _apply_change(self, rec: ChangeRecord):
        """Replay a change record into the stores (used at load time)."""
        self.change_log.append(rec)
        if rec.op == "delete":
            if rec.kind == "resource":
                self.resources.pop(rec.entity_id, None)
            else:
                self.citations.pop(rec.entity_id, None)
                self.access_policies.pop(rec.entity_id, None)
            return
        if rec.kind == "resource":
            self.resources[rec.entity_id] = resource_from_dict(rec.payload)
        else:
            c = citation_from_dict(rec.payload)
            self.citations[rec.entity_id] = c
            if c.context is not None:
                # payloads are redacted; a restricted marker means policy=restricted
                self.access_policies[rec.entity_id] = c.context.access

    # --- change-log plumbing ---

    def _next_seq(self) -> int:
        return (self.change_log[-1].seq if self.change_log else 0) + 1

    def _emit(self, op: str, kind: str, entity_id: str, payload: dict | None):
        rec = ChangeRecord(seq=self._next_seq(), timestamp=self.clock.now(),
                           op=op, kind=kind, entity_id=entity_id,
                           payload=payload)
        self.change_log.append(rec)
        self._persist_change(rec)
        return rec

    def _effective_access(self, citation_id: str) -> str:
        return self.access_policies.get(citation_id, "open")

    def _redacted_citation(self, c: Citation) -> Citation:
        if c.context is not None:
            c = replace(c, context=replace(
                c.context, access=self._effective_access(c.citation_id)))
        return redact_citation(c)

    def _citation_payload(self, c: Citation) -> dict:
        return citation_to_dict(self._redacted_citation(c))

    # --- operations ---

    def ingest_dataset(self, header: DatasetHeader, resources, citations,
                       source_note: str | None = None) -> dict:
        """Store a dataset, one change record per entity; malformed entries
        are rejected individually, never the whole batch."""
        created = updated = 0
        rejections: list[dict] = []
        with self._lock:
            self.license = header.license
            self._persist_meta()
            for r in resources:
                if "->" in r.id:
                    rejections.append({"id": r.id, "reason": "malformed-id"})
                    continue
                is_update = r.id in self.resources
                prior = snapshot_json(self.resources[r.id]) if is_update else None
                self.resources[r.id] = r
                chain = self.provenance.setdefault(r.id, [])
                record_provenance(chain, r.id,
                                  "update" if is_update else "create",
                                  agent="ingest",
                                  source=source_note or header.provider_id,
                                  clock=self.clock, prior=prior)
                self._emit("update" if is_update else "create", "resource",
                           r.id, resource_to_dict(r))
                updated += is_update
                created += not is_update
            for c in citations:
                cid = c.citation_id
                if c.citing_id not in self.resources \
                        or c.cited_id not in self.resources:
                    rejections.append({"id": cid, "reason": "dangling-citation"})
                    continue
                if c.license == "unspecified" and header.license != "unspecified":
                    c = replace(c, license=header.license)
                is_update = cid in self.citations
                prior = snapshot_json(self.citations[cid]) if is_update else None
                self.citations[cid] = c
                if c.context is not None:
                    self.access_policies[cid] = c.context.access
                chain = self.provenance.setdefault(cid, [])
                record_provenance(chain, cid,
                                  "update" if is_update else "create",
                                  agent="ingest",
                                  source=source_note or header.provider_id,
                                  clock=self.clock, prior=prior)
                self._emit("update" if is_update else "create", "citation",
                           cid, self._citation_payload(c))
                updated += is_update
                created += not is_update
        return {"created": created, "updated": updated,
                "rejected": len(rejections), "rejections": rejections}

    def serve_meta(self) -> dict:
        last = self.change_log[-1] if self.change_log else None
        return {
            "node_id": self.node_id,
            "license": self.license,
            "resource_count": len(self.resources),
            "citation_count": len(self.citations),
            "last_seq": last.seq if last else 0,
            "last_modified": last.timestamp if last else None,
        }

    def serve_dump(self, fmt: str = "json") -> bytes:
        """Canonical full dump; restricted excerpts replaced by markers."""
        redacted = [self._redacted_citation(c)
                    for c in self.citations.values()]
        header = {"provider_id": self.node_id, "license": self.license}
        return export_bytes(list(self.resources.values()), redacted, fmt,
                            header=header)

    def serve_changes(self, since_seq: int,
                      page_size: int = DEFAULT_PAGE_SIZE) -> ChangePage:
        if since_seq < 0:
            raise NodeError("invalid-since: must be >= 0")
        page_size = max(1, min(page_size, MAX_PAGE_SIZE))
        records = [r for r in self.change_log if r.seq > since_seq]
        truncated = len(records) > page_size
        records = [self._redact_record(r) for r in records[:page_size]]
        return ChangePage(records=records,
                          next_seq=records[-1].seq if truncated else None)

    def _redact_record(self, rec: ChangeRecord) -> ChangeRecord:
        """Serve-time redaction: policy flips after emission must not leak
        excerpts through older pages."""
        if (rec.kind != "citation" or rec.payload is None
                or self._effective_access(rec.entity_id) != "restricted"):
            return rec
        payload = dict(rec.payload)
        if payload.get("context") is not None:
            payload["context"] = {"access": "restricted"}
        return replace(rec, payload=payload)

    def serve_context(self, citation_id: str, requester: str = "remote") -> dict:
        c = self.citations.get(citation_id)
        if c is None or c.context is None:
            raise UnknownCitationError(f"unknown-citation: {citation_id}")
        access = self._effective_access(citation_id)
        if access == "restricted" and requester != "local":
            raise RestrictedContextError("restricted-context")
        return {
            "citation_id": citation_id,
            "excerpt": c.context.excerpt,
            "window": c.context.window,
            "access": access,
        }

    def set_access_policy(self, citation_ids, access: str) -> dict:
        """Always emits a change record per citation, even on no-op re-sets,
        so harvesters learn of redaction changes."""
        if access not in {"open", "restricted"}:
            raise NodeError(f"unknown access level: {access!r}")
        updated = 0
        failures = []
        with self._lock:
            for cid in citation_ids:
                c = self.citations.get(cid)
                if c is None:
                    failures.append({"id": cid, "reason": "unknown-citation"})
                    continue
                self.access_policies[cid] = access
                chain = self.provenance.setdefault(cid, [])
                record_provenance(chain, cid, "update", agent="policy",
                                  source=self.node_id, clock=self.clock,
                                  prior=snapshot_json(c))
                self._emit("update", "citation", cid, self._citation_payload(c))
                updated += 1
        return {"updated": updated, "failures": failures}

    def get_resource(self, resource_id: str):
        return self.resources.get(resource_id)

    def get_citation(self, citation_id: str, redacted: bool = True):
        c = self.citations.get(citation_id)
        if c is not None and redacted:
            c = self._redacted_citation(c)
        return c
