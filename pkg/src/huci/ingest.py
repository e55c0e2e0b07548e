"""Heterogeneous provider metadata ingest: format detection, MARC-in-JSON /
flat JSON / CSV parsing, and declarative alignment onto the common model.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field

from .model import (
    Author,
    BibliographicResource,
    ModelError,
    PersistentIdentifier,
)

__all__ = [
    "IngestError",
    "UnknownFormatError",
    "MalformedRecordError",
    "ProviderRecord",
    "AlignmentMapping",
    "DatasetHeader",
    "detect_format",
    "parse_marc_json",
    "parse_flat_json",
    "parse_csv",
    "apply_alignment",
    "validate_license",
    "builtin_mapping",
]


class IngestError(ValueError):
    pass


class UnknownFormatError(IngestError):
    pass


class MalformedRecordError(IngestError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"malformed-record at index {index}: {reason}")
        self.index = index
        self.reason = reason


@dataclass(frozen=True)
class ProviderRecord:
    format: str  # marc-json | flat-json | csv
    raw_fields: tuple[tuple[str, str], ...]  # ordered (path, value) pairs

    def paths(self) -> list[str]:
        return [p for p, _ in self.raw_fields]


@dataclass(frozen=True)
class MappingEntry:
    source_path: str
    target_field: str
    transform: str = "none"


@dataclass(frozen=True)
class AlignmentMapping:
    entries: tuple[MappingEntry, ...]

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.target_field in {"identifiers", "authors", "collections"}:
                continue  # repeatable
            if e.target_field in seen:
                raise IngestError(
                    f"target field mapped twice: {e.target_field}")
            seen.add(e.target_field)

    @classmethod
    def from_dict(cls, data: dict) -> "AlignmentMapping":
        return cls(tuple(
            MappingEntry(e["source_path"], e["target_field"],
                         e.get("transform", "none"))
            for e in data["entries"]
        ))


@dataclass(frozen=True)
class DatasetHeader:
    provider_id: str
    license: str = "unspecified"
    created: str | None = None

    def __post_init__(self):
        if not self.provider_id:
            raise IngestError("provider_id must be non-empty")
        if self.license not in {"cc0", "other-open", "unspecified"}:
            raise IngestError(f"unknown license: {self.license!r}")


@dataclass
class AlignedRecord:
    resource: BibliographicResource
    unmapped_paths: list[str] = field(default_factory=list)


# common humanities 3-letter MARC language codes -> ISO 639-1
MARC_LANGUAGE_MAP = {
    "eng": "en", "ita": "it", "fre": "fr", "fra": "fr", "ger": "de",
    "deu": "de", "lat": "la", "spa": "es", "por": "pt", "dut": "nl",
    "nld": "nl", "rus": "ru", "pol": "pl", "gre": "el", "ell": "el",
    "ara": "ar", "heb": "he", "dan": "da", "swe": "sv", "hun": "hu",
    # not representable in ISO 639-1
    "grc": "other",
}

_YEAR_RE = re.compile(r"(?<![\d-])-?\d{4}(?!\d)")


def detect_format(data: bytes) -> str:
    """Sniff one of the three supported provider formats."""
    if not data:
        raise UnknownFormatError("unknown-format: empty input")
    text = data.decode("utf-8", errors="replace").lstrip("﻿").strip()
    if text.startswith("["):
        try:
            parsed = json.loads(text)
        except json.JSONDecodeError as e:
            raise UnknownFormatError(f"unknown-format: bad JSON ({e})") from e
        if isinstance(parsed, list) and parsed and isinstance(parsed[0], dict):
            first = parsed[0]
            if "leader" in first and "fields" in first:
                return "marc-json"
            if "id" in first:
                return "flat-json"
        raise UnknownFormatError("unknown-format: unrecognized JSON array")
    first_line = text.splitlines()[0] if text else ""
    cols = [c.strip().strip('"') for c in first_line.split(",")]
    if "id" in cols and "title" in cols:
        return "csv"
    raise UnknownFormatError("unknown-format")


def parse_marc_json(data: bytes) -> list[ProviderRecord]:
    """Flatten MARC-in-JSON records into TAG$code paths; control fields keep TAG."""
    try:
        records = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise MalformedRecordError(0, f"not valid JSON: {e}") from e
    if not isinstance(records, list):
        raise MalformedRecordError(0, "payload is not a JSON array")
    out = []
    for i, rec in enumerate(records):
        if not isinstance(rec, dict) or "fields" not in rec:
            raise MalformedRecordError(i, "missing 'fields' key")
        pairs: list[tuple[str, str]] = []
        for fld in rec["fields"]:
            if not isinstance(fld, dict) or len(fld) != 1:
                raise MalformedRecordError(i, "field is not a single-key object")
            tag, body = next(iter(fld.items()))
            if isinstance(body, str):  # control field
                pairs.append((tag, body))
            elif isinstance(body, dict):
                for sub in body.get("subfields", []):
                    for code, value in sub.items():
                        pairs.append((f"{tag}${code}", str(value)))
            else:
                raise MalformedRecordError(i, f"bad field body for tag {tag}")
        out.append(ProviderRecord("marc-json", tuple(pairs)))
    return out


def _flatten(prefix: str, value, pairs: list[tuple[str, str]]):
    if isinstance(value, list):
        for i, item in enumerate(value):
            _flatten(f"{prefix}[{i}]", item, pairs)
    elif isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, pairs)
    elif value is None or value == "":
        return
    elif isinstance(value, bool):
        pairs.append((prefix, "true" if value else "false"))
    else:
        pairs.append((prefix, str(value)))


def parse_flat_json(data: bytes) -> list[ProviderRecord]:
    try:
        records = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise MalformedRecordError(0, f"not valid JSON: {e}") from e
    if not isinstance(records, list):
        raise MalformedRecordError(0, "payload is not a JSON array")
    out = []
    for i, rec in enumerate(records):
        if not isinstance(rec, dict):
            raise MalformedRecordError(i, "record is not an object")
        pairs: list[tuple[str, str]] = []
        for k, v in rec.items():
            _flatten(k, v, pairs)
        out.append(ProviderRecord("flat-json", tuple(pairs)))
    return out


def parse_csv(data: bytes) -> list[ProviderRecord]:
    text = data.decode("utf-8").lstrip("﻿")
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise MalformedRecordError(0, "empty CSV")
    header = rows[0]
    out = []
    for i, row in enumerate(rows[1:]):
        if not row:
            continue
        if len(row) < len(header):
            raise MalformedRecordError(i, "csv-ragged-row")
        pairs = tuple(
            (col, cell) for col, cell in zip(header, row) if cell != ""
        )
        out.append(ProviderRecord("csv", pairs))
    return out


def serialize_flat_json(records: list[ProviderRecord]) -> bytes:
    """Inverse of parse_flat_json for flat (unnested) records; used by the
    round-trip property test."""
    docs = []
    for rec in records:
        doc: dict = {}
        for path, value in rec.raw_fields:
            m = re.fullmatch(r"([^.\[\]]+)\[(\d+)\](?:\.([^.\[\]]+))?", path)
            if m:
                key, idx, sub = m.group(1), int(m.group(2)), m.group(3)
                arr = doc.setdefault(key, [])
                while len(arr) <= idx:
                    arr.append({} if sub else None)
                if sub:
                    arr[idx][sub] = value
                else:
                    arr[idx] = value
            else:
                doc[path] = value
        docs.append(doc)
    return json.dumps(docs, ensure_ascii=False).encode("utf-8")


def _strip_indices(path: str) -> str:
    return re.sub(r"\[\d+\]", "", path)


def _parse_year(value: str) -> int:
    m = _YEAR_RE.search(value)
    if not m:
        raise IngestError(f"invalid-year: {value!r}")
    return int(m.group(0))


def _parse_language(value: str, use_marc_table: bool) -> str:
    code = value.strip().lower()
    if use_marc_table and code in MARC_LANGUAGE_MAP:
        return MARC_LANGUAGE_MAP[code]
    if len(code) == 2 and code.isalpha():
        return code
    raise IngestError(f"invalid-language: {value!r}")


def _split_authors(value: str) -> list[Author]:
    authors = []
    for part in re.split(r"[;|]", value):
        part = part.strip()
        if not part:
            continue
        family, _, given = part.partition(",")
        authors.append(Author(family.strip(), given.strip() or None))
    return authors


def apply_alignment(record: ProviderRecord, mapping: AlignmentMapping,
                    provider_id: str) -> AlignedRecord:
    """Map a flattened provider record onto a BibliographicResource.

    Unconsumed source paths are returned so the caller can preserve them in
    the resource's create provenance (no silent data loss).
    """
    by_source = {e.source_path: e for e in mapping.entries}
    fields: dict = {"identifiers": [], "authors": [], "collections": []}
    id_pairs: dict[str, dict] = {}  # index -> {scheme, value} for identifier-pair
    local_id = None
    unmapped: list[str] = []

    for path, value in record.raw_fields:
        base = _strip_indices(path)
        entry = by_source.get(base)
        # identifier-pair entries match their .scheme/.value subpaths
        if entry is None and "." in base:
            root, _, leaf = base.rpartition(".")
            cand = by_source.get(root)
            if cand is not None and cand.transform == "identifier-pair" \
                    and leaf in {"scheme", "value"}:
                m = re.search(r"\[(\d+)\]", path)
                idx = m.group(1) if m else "0"
                id_pairs.setdefault(idx, {})[leaf] = value
                continue
        if entry is None:
            if base in {"id", "001"} and local_id is None:
                local_id = value
            unmapped.append(path)
            continue

        t = entry.transform
        tf = entry.target_field
        if tf == "id":
            fields["id"] = value
        elif t == "none":
            if tf in {"authors", "collections"}:
                fields[tf].append(value)
            else:
                fields[tf] = value
        elif t == "year-extract":
            fields["year"] = _parse_year(value)
        elif t == "language-code":
            fields["language"] = _parse_language(value, use_marc_table=False)
        elif t == "language-marc":
            fields["language"] = _parse_language(value, use_marc_table=True)
        elif t == "split-authors":
            fields["authors"].extend(_split_authors(value))
        elif t == "split-list":
            fields["collections"].extend(
                p.strip() for p in value.split("|") if p.strip())
        elif t.startswith("identifier:"):
            scheme = t.split(":", 1)[1]
            fields["identifiers"].append(PersistentIdentifier(scheme, value))
        elif t == "identifier-list":
            for part in value.split("|"):
                part = part.strip()
                if part:
                    fields["identifiers"].append(PersistentIdentifier.parse(part))
        elif t == "flag":
            fields[tf] = value.strip().lower() in {"true", "1", "yes"}
        else:
            raise IngestError(f"unknown transform: {t!r}")

    for idx in sorted(id_pairs):
        pair = id_pairs[idx]
        if "scheme" in pair and "value" in pair:
            fields["identifiers"].append(
                PersistentIdentifier(pair["scheme"], pair["value"]))

    raw_id = fields.get("id", local_id)
    if raw_id is None:
        raise IngestError("missing-id")
    full_id = raw_id if raw_id.startswith(provider_id + ":") \
        else f"{provider_id}:{raw_id}"

    authors = tuple(
        a if isinstance(a, Author) else _split_authors(a)[0]
        for a in fields["authors"] if a
    )
    year = fields.get("year")
    if isinstance(year, str):
        year = _parse_year(year)

    resource = BibliographicResource(
        id=full_id,
        title=fields.get("title", ""),
        authors=authors,
        year=year,
        language=fields.get("language"),
        typology=fields.get("typology", "other"),
        frbr_level=fields.get("frbr_level", "manifestation"),
        parent_id=fields.get("parent_id"),
        identifiers=tuple(fields["identifiers"]),
        collections=tuple(fields["collections"]),
        is_primary_source=bool(fields.get("is_primary_source", False)),
    )
    return AlignedRecord(resource=resource, unmapped_paths=unmapped)


def validate_license(header: DatasetHeader) -> str:
    """Returns 'pass' for open licenses, 'warn' for unspecified ones.

    Citations inheriting an unspecified dataset license fail the 'open'
    compliance gate downstream.
    """
    return "pass" if header.license in {"cc0", "other-open"} else "warn"


_BUILTIN_MAPPINGS: dict[str, AlignmentMapping] = {}


def builtin_mapping(name: str) -> AlignmentMapping:
    """Load one of the shipped default mappings: marc-default, flat-default,
    csv-default."""
    if name not in _BUILTIN_MAPPINGS:
        import importlib.resources as res
        ref = res.files("huci").joinpath(f"mappings/{name}.json")
        try:
            data = json.loads(ref.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise IngestError(f"unknown built-in mapping: {name!r}") from None
        _BUILTIN_MAPPINGS[name] = AlignmentMapping.from_dict(data)
    return _BUILTIN_MAPPINGS[name]


def parse_and_align(data: bytes, fmt: str, mapping: AlignmentMapping | None,
                    provider_id: str):
    """Parse bytes in `fmt` and align every record; failed records are
    reported, not fatal (batches degrade gracefully).

    Returns (aligned records, failures) where failures are (index, reason).
    """
    if fmt == "auto":
        fmt = detect_format(data)
    parser = {
        "marc-json": parse_marc_json,
        "flat-json": parse_flat_json,
        "csv": parse_csv,
    }.get(fmt)
    if parser is None:
        raise UnknownFormatError(f"unknown-format: {fmt!r}")
    if mapping is None:
        mapping = builtin_mapping({
            "marc-json": "marc-default",
            "flat-json": "flat-default",
            "csv": "csv-default",
        }[fmt])
    records = parser(data)
    aligned: list[AlignedRecord] = []
    failures: list[tuple[int, str]] = []
    for i, rec in enumerate(records):
        try:
            aligned.append(apply_alignment(rec, mapping, provider_id))
        except (IngestError, ModelError) as e:
            failures.append((i, str(e)))
    return aligned, failures
