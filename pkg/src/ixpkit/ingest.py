"""Parse snapshot files of the three databases and apply sanitization.

Snapshots use the toolkit's own JSON format (one document per source, see
SNAPSHOT_SCHEMA); adapters from raw provider dumps live outside this
package. Three data artifacts are cleaned up here:

* PeeringDB keeps two views of IXP membership (the IXP's participant list
  and each network's IXP list) that do not always agree; the sanitizer
  unions them and reports the discrepancy per IXP.
* Euro-IX participant lists contain entries with the reserved ASN 0 where
  an administrator never filled the field; those are dropped.
* PCH reports memberships per port, so one ASN can appear several times
  at the same IXP; duplicates are collapsed and entries without an ASN
  are flagged as excluded from link extraction.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Any, Optional

import jsonschema

from .errors import InputError
from .model import (
    Facility,
    IxpStatus,
    Location,
    Participant,
    SourceId,
    SourceRecord,
)

log = logging.getLogger(__name__)


class MalformedSnapshot(InputError):
    """Snapshot violates the schema; message carries a record locator."""


class DuplicateRecordId(InputError):
    pass


class InvalidPrefix(InputError):
    pass


_STATUS_STRINGS = [s.value for s in IxpStatus]

_LOCATION_SCHEMA = {
    "type": "object",
    "required": ["country"],
    "properties": {
        "city": {"type": "string"},
        "country": {"type": "string"},
        "continent": {"type": "string"},
        "lat": {"type": "number"},
        "lon": {"type": "number"},
    },
}

_PARTICIPANT_SCHEMA = {
    "type": "object",
    "properties": {
        "asn": {"type": "integer", "minimum": 0, "maximum": 2**32 - 1},
        "name": {"type": "string"},
        "ips": {"type": "array", "items": {"type": "string"}},
        "ipv6": {"type": "boolean"},
        "updated": {"type": "string"},
        "policy": {"type": "string"},
        "type": {"type": "string"},
    },
}

_IXP_SCHEMA = {
    "type": "object",
    "required": ["record_id", "names", "locations", "status"],
    "properties": {
        "record_id": {"type": "string", "minLength": 1},
        "names": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "locations": {"type": "array", "items": _LOCATION_SCHEMA, "minItems": 1},
        "status": {"enum": _STATUS_STRINGS},
        "prefixes": {"type": "array", "items": {"type": "string"}},
        "participants": {"type": "array", "items": _PARTICIPANT_SCHEMA},
        "facility_count": {"type": "integer", "minimum": 0},
        "facility_ids": {"type": "array", "items": {"type": "string"}},
        "established": {"type": "string"},
        "url": {"type": "string"},
    },
}

_FACILITY_SCHEMA = {
    "type": "object",
    "required": ["facility_id", "name", "location"],
    "properties": {
        "facility_id": {"type": "string", "minLength": 1},
        "name": {"type": "string"},
        "location": _LOCATION_SCHEMA,
        "ixp_record_ids": {"type": "array", "items": {"type": "string"}},
        "network_asns": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1, "maximum": 2**32 - 1},
        },
    },
}

# "networks" is the AS-centric membership view; only PeeringDB has one.
_NETWORK_SCHEMA = {
    "type": "object",
    "required": ["asn", "ixp_record_ids"],
    "properties": {
        "asn": {"type": "integer", "minimum": 1, "maximum": 2**32 - 1},
        "name": {"type": "string"},
        "ixp_record_ids": {"type": "array", "items": {"type": "string"}},
    },
}

SNAPSHOT_SCHEMA = {
    "type": "object",
    "required": ["source", "acquired_at", "ixps"],
    "properties": {
        "source": {"enum": [s.value for s in (SourceId.EURO_IX, SourceId.PEERING_DB, SourceId.PCH)]},
        "acquired_at": {"type": "string", "pattern": r"^\d{4}-\d{2}-\d{2}$"},
        "ixps": {"type": "array", "items": _IXP_SCHEMA},
        "facilities": {"type": "array", "items": _FACILITY_SCHEMA},
        "networks": {"type": "array", "items": _NETWORK_SCHEMA},
    },
}

_ALPHA2 = re.compile(r"^[A-Za-z]{2}$")


@dataclass
class SnapshotManifest:
    source: SourceId
    acquired_at: date
    file_paths: list[str]
    record_count: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "source": self.source.value,
            "acquired_at": self.acquired_at.isoformat(),
            "file_paths": list(self.file_paths),
            "record_count": self.record_count,
        }


def _load_document(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise MalformedSnapshot(f"snapshot file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedSnapshot(f"{path}: not valid JSON ({exc})") from None


def _validate_schema(document: dict, path: Path) -> None:
    validator = jsonschema.Draft202012Validator(SNAPSHOT_SCHEMA)
    errors = sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        locator = "/".join(str(p) for p in first.absolute_path) or "<root>"
        raise MalformedSnapshot(f"{path}: at {locator}: {first.message}")


def _parse_location(raw: dict, locator: str) -> Location:
    country = raw.get("country", "")
    if not _ALPHA2.match(country):
        if country:
            log.warning("%s: unknown country %r, keeping as ZZ", locator, country)
        country = "ZZ"
    coords = None
    if "lat" in raw or "lon" in raw:
        if "lat" not in raw or "lon" not in raw:
            raise MalformedSnapshot(f"{locator}: lat and lon must come together")
        coords = (float(raw["lat"]), float(raw["lon"]))
    try:
        return Location.make(raw.get("city", ""), country, coords)
    except ValueError as exc:
        raise MalformedSnapshot(f"{locator}: {exc}") from None


def _parse_participant(raw: dict, source: SourceId, locator: str) -> Participant:
    asn = raw.get("asn")
    if asn is None and source is not SourceId.PCH:
        raise MalformedSnapshot(
            f"{locator}: participant without ASN is only allowed in PCH data"
        )
    try:
        return Participant.from_dict(raw)
    except ValueError as exc:
        raise MalformedSnapshot(f"{locator}: {exc}") from None


def _parse_record(raw: dict, source: SourceId, locator: str) -> SourceRecord:
    status = IxpStatus(raw["status"])
    if source is SourceId.PEERING_DB and status is not IxpStatus.UNKNOWN:
        raise MalformedSnapshot(
            f"{locator}: PeeringDB has no status information, expected 'unknown'"
        )
    prefixes = list(raw.get("prefixes", ()))
    if prefixes and source is SourceId.EURO_IX:
        raise MalformedSnapshot(f"{locator}: Euro-IX records never carry prefixes")
    participants = [
        _parse_participant(p, source, f"{locator}/participants/{i}")
        for i, p in enumerate(raw.get("participants", ()))
    ]
    established = raw.get("established")
    try:
        return SourceRecord(
            record_id=raw["record_id"],
            source=source,
            names=list(raw["names"]),
            locations=[
                _parse_location(loc, f"{locator}/locations/{i}")
                for i, loc in enumerate(raw["locations"])
            ],
            status=status,
            prefixes=prefixes,
            participants=participants,
            facility_count=raw.get("facility_count"),
            facility_ids=list(raw.get("facility_ids", ())),
            established=date.fromisoformat(established) if established else None,
            url=raw.get("url"),
        )
    except ValueError as exc:
        message = str(exc)
        if "prefix" in message:
            raise InvalidPrefix(f"{locator}: {message}") from None
        raise MalformedSnapshot(f"{locator}: {message}") from None


def parse_snapshot(
    path: str | Path, source: SourceId
) -> tuple[SnapshotManifest, list[SourceRecord], list[Facility]]:
    """Parse one snapshot file into domain values.

    The document's source field must agree with the declared source, every
    record id must be unique, and facilities may only appear in PeeringDB
    snapshots. Parsing is deterministic: records come out in file order.
    """
    path = Path(path)
    document = _load_document(path)
    _validate_schema(document, path)

    declared = SourceId(document["source"])
    if declared is not source:
        raise MalformedSnapshot(
            f"{path}: declared source {declared.value!r} does not match "
            f"expected {source.value!r}"
        )

    records: list[SourceRecord] = []
    seen_ids: set[str] = set()
    for i, raw in enumerate(document["ixps"]):
        locator = f"{path}:ixps/{i}"
        record = _parse_record(raw, source, locator)
        if record.record_id in seen_ids:
            raise DuplicateRecordId(f"{locator}: duplicate record id {record.record_id!r}")
        seen_ids.add(record.record_id)
        records.append(record)

    raw_facilities = document.get("facilities", [])
    if raw_facilities and source is not SourceId.PEERING_DB:
        raise MalformedSnapshot(
            f"{path}: facilities are only allowed in PeeringDB snapshots"
        )
    facilities = []
    for i, raw in enumerate(raw_facilities):
        locator = f"{path}:facilities/{i}"
        facilities.append(
            Facility(
                facility_id=raw["facility_id"],
                name=raw.get("name", ""),
                location=_parse_location(raw["location"], locator),
                ixp_record_ids=list(raw.get("ixp_record_ids", ())),
                network_asns=list(raw.get("network_asns", ())),
            )
        )

    if document.get("networks") and source is not SourceId.PEERING_DB:
        raise MalformedSnapshot(f"{path}: networks are only allowed in PeeringDB snapshots")

    manifest = SnapshotManifest(
        source=source,
        acquired_at=date.fromisoformat(document["acquired_at"]),
        file_paths=[str(path)],
        record_count=len(records),
    )
    return manifest, records, facilities


def read_network_ixp_lists(path: str | Path) -> dict[int, list[str]]:
    """The AS-centric view from a PeeringDB snapshot: ASN -> IXP record ids."""
    document = _load_document(path)
    out: dict[int, list[str]] = {}
    for raw in document.get("networks", ()):
        out.setdefault(int(raw["asn"]), []).extend(raw["ixp_record_ids"])
    return out


def _drop_zero_asn(record: SourceRecord) -> tuple[SourceRecord, int]:
    kept = [p for p in record.participants if p.asn != 0]
    removed = len(record.participants) - len(kept)
    if removed == 0:
        return record, 0
    return record.with_participants(kept), removed


def sanitize_euroix_participants(record: SourceRecord) -> tuple[SourceRecord, int]:
    """Drop participant entries carrying the reserved ASN 0.

    Returns the cleaned record and how many entries were removed.
    """
    if record.source is not SourceId.EURO_IX:
        raise ValueError("sanitize_euroix_participants expects a Euro-IX record")
    return _drop_zero_asn(record)


def sanitize_pch_ports(record: SourceRecord) -> SourceRecord:
    """Collapse per-port duplicates: one entry per ASN, IP addresses unioned.

    Entries without an ASN are kept for IP evidence but flagged so they
    never enter link sets.
    """
    if record.source is not SourceId.PCH:
        raise ValueError("sanitize_pch_ports expects a PCH record")
    by_asn: dict[int, list[Participant]] = {}
    order: list[tuple[str, Any]] = []  # ("asn", asn) / ("raw", participant)
    for p in record.participants:
        if p.asn is None:
            order.append(("raw", p))
        else:
            if p.asn not in by_asn:
                order.append(("asn", p.asn))
            by_asn.setdefault(p.asn, []).append(p)

    changed = False
    merged: list[Participant] = []
    for kind, value in order:
        if kind == "raw":
            p = value
            if not p.excluded_from_links:
                p = Participant(**{**_participant_kwargs(p), "excluded_from_links": True})
                changed = True
            merged.append(p)
            continue
        group = by_asn[value]
        if len(group) == 1:
            merged.append(group[0])
            continue
        ips: list[str] = []
        for entry in group:
            for ip in entry.ip_addresses:
                if ip not in ips:
                    ips.append(ip)
        first = group[0]
        merged.append(Participant(**{**_participant_kwargs(first), "ip_addresses": tuple(ips)}))
        changed = True

    if not changed:
        return record
    return record.with_participants(merged)


def _participant_kwargs(p: Participant) -> dict[str, Any]:
    return {
        "asn": p.asn,
        "name": p.name,
        "ip_addresses": p.ip_addresses,
        "ipv6_capable": p.ipv6_capable,
        "last_updated": p.last_updated,
        "policy": p.policy,
        "network_type": p.network_type,
        "excluded_from_links": p.excluded_from_links,
    }


@dataclass
class PeeringDbDiscrepancy:
    """Per-IXP difference between the two PeeringDB membership views."""

    record_id: str
    only_own: int  # ASNs only in the IXP's own participant list
    only_network: int  # ASNs only in the participants' IXP lists

    def to_dict(self) -> dict[str, Any]:
        return {
            "record_id": self.record_id,
            "only_own": self.only_own,
            "only_network": self.only_network,
        }


@dataclass
class PeeringDbSanitizeReport:
    discrepancies: list[PeeringDbDiscrepancy] = field(default_factory=list)
    unknown_record_ids: list[str] = field(default_factory=list)

    def by_record(self) -> dict[str, PeeringDbDiscrepancy]:
        return {d.record_id: d for d in self.discrepancies}

    def ixps_with_differences(self) -> int:
        return sum(1 for d in self.discrepancies if d.only_own or d.only_network)

    def to_dict(self) -> dict[str, Any]:
        return {
            "discrepancies": [d.to_dict() for d in self.discrepancies],
            "unknown_record_ids": list(self.unknown_record_ids),
        }


def sanitize_peeringdb_participants(
    records: list[SourceRecord],
    per_asn_ixp_lists: dict[int, list[str]],
) -> tuple[list[SourceRecord], PeeringDbSanitizeReport]:
    """Union the IXP-side and network-side membership views.

    Each IXP ends up with its own participant list plus one synthetic
    entry per ASN that lists the IXP but is missing from the list. The
    report keeps the per-IXP counts of entries seen on only one side;
    IXP ids that appear in a network's list but in no record are
    collected as warnings, not errors.
    """
    if any(r.source is not SourceId.PEERING_DB for r in records):
        raise ValueError("sanitize_peeringdb_participants expects PeeringDB records")

    known_ids = {r.record_id for r in records}
    reverse: dict[str, set[int]] = {r.record_id: set() for r in records}
    unknown: list[str] = []
    for asn, ixp_ids in sorted(per_asn_ixp_lists.items()):
        for ixp_id in ixp_ids:
            if ixp_id not in known_ids:
                unknown.append(ixp_id)
                continue
            reverse[ixp_id].add(asn)

    report = PeeringDbSanitizeReport(unknown_record_ids=sorted(set(unknown)))
    out: list[SourceRecord] = []
    for record in records:
        own = {p.asn for p in record.participants if p.asn is not None}
        network_side = reverse[record.record_id]
        report.discrepancies.append(
            PeeringDbDiscrepancy(
                record_id=record.record_id,
                only_own=len(own - network_side),
                only_network=len(network_side - own),
            )
        )
        missing = sorted(network_side - own)
        if not missing:
            out.append(record)
            continue
        extra = [Participant(asn=asn) for asn in missing]
        out.append(record.with_participants(list(record.participants) + extra))
    return out, report


@dataclass
class IngestResult:
    manifest: SnapshotManifest
    records: list[SourceRecord]
    facilities: list[Facility]
    zero_asn_removed: int = 0
    peeringdb_report: Optional[PeeringDbSanitizeReport] = None


def ingest_source(path: str | Path, source: SourceId) -> IngestResult:
    """Parse one snapshot and run its source-specific sanitizers.

    After this step no participant carries ASN 0 and PCH port duplicates
    are collapsed; records are otherwise unchanged.
    """
    manifest, records, facilities = parse_snapshot(path, source)
    removed_total = 0
    report = None

    if source is SourceId.EURO_IX:
        cleaned = []
        for record in records:
            record, removed = sanitize_euroix_participants(record)
            removed_total += removed
            cleaned.append(record)
        records = cleaned
    elif source is SourceId.PCH:
        cleaned = []
        for record in records:
            record, removed = _drop_zero_asn(record)
            removed_total += removed
            cleaned.append(sanitize_pch_ports(record))
        records = cleaned
    elif source is SourceId.PEERING_DB:
        cleaned = []
        for record in records:
            record, removed = _drop_zero_asn(record)
            removed_total += removed
            cleaned.append(record)
        networks = read_network_ixp_lists(path)
        records, report = sanitize_peeringdb_participants(cleaned, networks)

    return IngestResult(
        manifest=manifest,
        records=records,
        facilities=facilities,
        zero_asn_removed=removed_total,
        peeringdb_report=report,
    )
