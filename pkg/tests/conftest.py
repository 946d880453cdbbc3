"""Shared fixture builders for the test suite."""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path

import pytest

from ixpkit.linker import record_as_canonical
from ixpkit.model import (
    IxpStatus,
    Location,
    MappingDecision,
    Participant,
    SourceId,
    SourceRecord,
    Verdict,
)


def participant(asn, ips=(), **kwargs) -> Participant:
    return Participant(asn=asn, ip_addresses=tuple(ips), **kwargs)


def record(
    record_id,
    source=SourceId.EURO_IX,
    names=("Test IXP",),
    country="DE",
    city="",
    status=IxpStatus.ACTIVE,
    participants=(),
    prefixes=(),
    **kwargs,
) -> SourceRecord:
    if source is SourceId.PEERING_DB:
        status = IxpStatus.UNKNOWN
    return SourceRecord(
        record_id=record_id,
        source=source,
        names=list(names),
        locations=[Location.make(city, country)],
        status=status,
        participants=[participant(a) if isinstance(a, int) else a for a in participants],
        prefixes=list(prefixes),
        **kwargs,
    )


def canonical(record_id, **kwargs):
    return record_as_canonical(record(record_id, **kwargs))


def decision(candidate_id, verdict=Verdict.ACCEPT, reviewer="curator", minute=0, note=None):
    return MappingDecision(
        candidate_id=candidate_id,
        verdict=verdict,
        reviewer=reviewer,
        timestamp=datetime(2014, 9, 19, 12, minute, 0, tzinfo=timezone.utc),
        note=note,
    )


def snapshot_doc(source, ixps, facilities=None, networks=None, acquired="2014-09-19"):
    doc = {"source": source, "acquired_at": acquired, "ixps": ixps}
    if facilities is not None:
        doc["facilities"] = facilities
    if networks is not None:
        doc["networks"] = networks
    return doc


def ixp_entry(record_id, names=("Test IXP",), country="DE", city="", status="active",
              participants=(), prefixes=None, **extra):
    entry = {
        "record_id": record_id,
        "names": list(names),
        "locations": [{"city": city, "country": country}],
        "status": status,
        "participants": list(participants),
    }
    if prefixes is not None:
        entry["prefixes"] = prefixes
    entry.update(extra)
    return entry


def write_snapshot(directory: Path, name: str, doc: dict) -> Path:
    path = directory / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


@pytest.fixture
def tmp_out(tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    return out
