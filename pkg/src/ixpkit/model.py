"""Domain types shared by every stage of the toolkit.

Everything here is a plain value type with JSON round-trip support; no
I/O happens in this module. Identifiers are content-derived so that
re-running any stage on the same inputs reproduces the same ids.
"""

from __future__ import annotations

import hashlib
import ipaddress
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timezone
from enum import Enum
from typing import Any, Iterable, Optional

from .regions import Continent, UNKNOWN_COUNTRY, continent_for

MAX_ASN = 2**32 - 1

# Marker for link sets built from the merged three-source dataset.
UNION = "union"


class SourceId(str, Enum):
    EURO_IX = "euro-ix"
    PEERING_DB = "peeringdb"
    PCH = "pch"
    BGP_COLLECTOR = "bgp-collector"
    EXTERNAL_LIST = "external-list"


# The three snapshot databases, in the fixed orientation used for
# cross-dataset pairs: Euro-IX < PeeringDB < PCH.
DATABASE_SOURCES = (SourceId.EURO_IX, SourceId.PEERING_DB, SourceId.PCH)


class IxpStatus(str, Enum):
    ACTIVE = "active"
    DEFUNCT = "defunct"
    PLANNED = "planned"
    UNDER_CONSTRUCTION = "under-construction"
    DEPRECATED = "deprecated"
    NOT_AN_EXCHANGE = "not-an-exchange"
    UNKNOWN = "unknown"


def _utc(dt: datetime) -> datetime:
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    return _utc(dt).strftime("%Y-%m-%dT%H:%M:%S.%f+00:00")


def parse_timestamp(text: str) -> datetime:
    return _utc(datetime.fromisoformat(text.replace("Z", "+00:00")))


@dataclass(frozen=True)
class Location:
    """A place an IXP reports presence at.

    country is an ISO 3166-1 alpha-2 code or the "ZZ" unknown sentinel;
    the continent always comes from the fixed country table, never from
    input data (except that unknown countries stay UNKNOWN).
    """

    city: str
    country: str
    continent: Continent
    coordinates: Optional[tuple[float, float]] = None

    def __post_init__(self) -> None:
        if self.coordinates is not None:
            lat, lon = self.coordinates
            if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
                raise ValueError(f"coordinates out of range: {self.coordinates}")

    @classmethod
    def make(
        cls,
        city: str,
        country: str,
        coordinates: Optional[tuple[float, float]] = None,
    ) -> "Location":
        country = country.upper() if country else UNKNOWN_COUNTRY
        return cls(
            city=city,
            country=country,
            continent=continent_for(country),
            coordinates=coordinates,
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "city": self.city,
            "country": self.country,
            "continent": self.continent.value,
        }
        if self.coordinates is not None:
            out["lat"], out["lon"] = self.coordinates
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Location":
        coords = None
        if "lat" in data and "lon" in data:
            coords = (float(data["lat"]), float(data["lon"]))
        return cls(
            city=data.get("city", ""),
            country=data.get("country", UNKNOWN_COUNTRY),
            continent=Continent(data["continent"]),
            coordinates=coords,
        )


@dataclass(frozen=True)
class Participant:
    """One membership entry at an IXP.

    asn may be None only for PCH-origin port entries; those are kept for
    IP-level evidence but never contribute IXP-to-ASN links (the
    excluded_from_links flag is set by the PCH sanitizer).
    """

    asn: Optional[int]
    name: str = ""
    ip_addresses: tuple[str, ...] = ()
    ipv6_capable: Optional[bool] = None
    last_updated: Optional[datetime] = None
    policy: Optional[str] = None
    network_type: Optional[str] = None
    excluded_from_links: bool = False

    def __post_init__(self) -> None:
        if self.asn is not None and not 0 <= self.asn <= MAX_ASN:
            raise ValueError(f"ASN out of range: {self.asn}")
        for ip in self.ip_addresses:
            ipaddress.ip_address(ip)

    def sort_key(self) -> tuple:
        return (self.asn if self.asn is not None else -1, self.name, self.ip_addresses)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        if self.asn is not None:
            out["asn"] = self.asn
        if self.name:
            out["name"] = self.name
        out["ips"] = list(self.ip_addresses)
        if self.ipv6_capable is not None:
            out["ipv6"] = self.ipv6_capable
        if self.last_updated is not None:
            out["updated"] = format_timestamp(self.last_updated)
        if self.policy is not None:
            out["policy"] = self.policy
        if self.network_type is not None:
            out["type"] = self.network_type
        if self.excluded_from_links:
            out["excluded_from_links"] = True
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Participant":
        updated = data.get("updated")
        return cls(
            asn=data.get("asn"),
            name=data.get("name", ""),
            ip_addresses=tuple(data.get("ips", ())),
            ipv6_capable=data.get("ipv6"),
            last_updated=parse_timestamp(updated) if updated else None,
            policy=data.get("policy"),
            network_type=data.get("type"),
            excluded_from_links=data.get("excluded_from_links", False),
        )


def validate_prefixes(prefixes: Iterable[str]) -> list[str]:
    """Check CIDR syntax and reject duplicates; returns the prefixes as given.

    Raises ValueError with a description for the first bad or repeated
    prefix (ingest wraps this into InvalidPrefix with a record locator).
    """
    seen: set[str] = set()
    out: list[str] = []
    for prefix in prefixes:
        try:
            normalized = str(ipaddress.ip_network(prefix, strict=True))
        except ValueError as exc:
            raise ValueError(f"invalid prefix {prefix!r}: {exc}") from None
        if normalized in seen:
            raise ValueError(f"duplicate prefix {prefix!r}")
        seen.add(normalized)
        out.append(prefix)
    return out


@dataclass
class SourceRecord:
    """One IXP as reported by one source database."""

    record_id: str
    source: SourceId
    names: list[str]
    locations: list[Location]
    status: IxpStatus
    prefixes: list[str] = field(default_factory=list)
    participants: list[Participant] = field(default_factory=list)
    facility_count: Optional[int] = None
    facility_ids: list[str] = field(default_factory=list)
    established: Optional[date] = None
    url: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.names:
            raise ValueError(f"record {self.record_id!r} has no names")
        if not self.locations:
            raise ValueError(f"record {self.record_id!r} has no locations")
        if self.facility_count is not None and self.facility_count < 0:
            raise ValueError("facility_count must be non-negative")
        validate_prefixes(self.prefixes)

    @property
    def name(self) -> str:
        return self.names[0]

    @property
    def aliases(self) -> list[str]:
        return self.names[1:]

    def countries(self) -> set[str]:
        return {loc.country for loc in self.locations}

    def cities(self) -> set[str]:
        return {loc.city.lower() for loc in self.locations if loc.city}

    def with_participants(self, participants: list[Participant]) -> "SourceRecord":
        return replace(self, participants=participants)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "record_id": self.record_id,
            "source": self.source.value,
            "names": list(self.names),
            "locations": [loc.to_dict() for loc in self.locations],
            "status": self.status.value,
            "prefixes": list(self.prefixes),
            "participants": [p.to_dict() for p in self.participants],
            "facility_ids": list(self.facility_ids),
        }
        if self.facility_count is not None:
            out["facility_count"] = self.facility_count
        if self.established is not None:
            out["established"] = self.established.isoformat()
        if self.url is not None:
            out["url"] = self.url
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SourceRecord":
        established = data.get("established")
        return cls(
            record_id=data["record_id"],
            source=SourceId(data["source"]),
            names=list(data["names"]),
            locations=[Location.from_dict(d) for d in data["locations"]],
            status=IxpStatus(data["status"]),
            prefixes=list(data.get("prefixes", ())),
            participants=[Participant.from_dict(d) for d in data.get("participants", ())],
            facility_count=data.get("facility_count"),
            facility_ids=list(data.get("facility_ids", ())),
            established=date.fromisoformat(established) if established else None,
            url=data.get("url"),
        )


@dataclass
class Facility:
    """A co-location facility; only PeeringDB snapshots carry these."""

    facility_id: str
    name: str
    location: Location
    ixp_record_ids: list[str] = field(default_factory=list)
    network_asns: list[int] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "facility_id": self.facility_id,
            "name": self.name,
            "location": self.location.to_dict(),
            "ixp_record_ids": list(self.ixp_record_ids),
            "network_asns": list(self.network_asns),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Facility":
        return cls(
            facility_id=data["facility_id"],
            name=data["name"],
            location=Location.from_dict(data["location"]),
            ixp_record_ids=list(data.get("ixp_record_ids", ())),
            network_asns=list(data.get("network_asns", ())),
        )


MemberKey = tuple[SourceId, str]


def derive_canonical_id(members: Iterable[MemberKey]) -> str:
    """Stable id over the sorted member list: "cx-" + 16 hex chars.

    Changes only when the membership of the entity changes.
    """
    keys = sorted((source.value, record_id) for source, record_id in members)
    digest = hashlib.sha256(repr(keys).encode("utf-8")).hexdigest()
    return "cx-" + digest[:16]


@dataclass
class CanonicalIxp:
    """An IXP entity after sibling merging and, later, cross-dataset linking.

    name_sources and location_sources run parallel to merged_names and
    merged_locations, recording which sources reported each value;
    prefixes and URLs keep per-source maps directly.
    """

    canonical_id: str
    members: list[MemberKey]
    merged_names: list[str]
    merged_locations: list[Location]
    status_by_source: dict[SourceId, IxpStatus]
    participants_by_source: dict[SourceId, frozenset[Participant]]
    name_sources: list[tuple[SourceId, ...]] = field(default_factory=list)
    location_sources: list[tuple[SourceId, ...]] = field(default_factory=list)
    prefixes_by_source: dict[SourceId, tuple[str, ...]] = field(default_factory=dict)
    urls_by_source: dict[SourceId, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("canonical IXP needs at least one member record")
        if not self.name_sources:
            self.name_sources = [tuple(sorted(self.sources()))] * len(self.merged_names)
        if not self.location_sources:
            self.location_sources = [tuple(sorted(self.sources()))] * len(
                self.merged_locations
            )

    def sources(self) -> set[SourceId]:
        return {source for source, _ in self.members}

    def countries(self) -> set[str]:
        return {loc.country for loc in self.merged_locations}

    def cities(self) -> set[str]:
        return {loc.city.lower() for loc in self.merged_locations if loc.city}

    def continent(self) -> Continent:
        """Dominant continent of the merged locations (ties: enum order)."""
        counts: dict[Continent, int] = {}
        for loc in self.merged_locations:
            counts[loc.continent] = counts.get(loc.continent, 0) + 1
        if not counts:
            return Continent.UNKNOWN
        order = {c: i for i, c in enumerate(Continent)}
        return min(counts, key=lambda c: (-counts[c], order[c]))

    def participant_asns(self, source: SourceId) -> set[int]:
        return {
            p.asn
            for p in self.participants_by_source.get(source, frozenset())
            if p.asn is not None and not p.excluded_from_links
        }

    def union_membership(self) -> set[int]:
        asns: set[int] = set()
        for source in self.participants_by_source:
            asns |= self.participant_asns(source)
        return asns

    def all_prefixes(self) -> set[str]:
        out: set[str] = set()
        for prefixes in self.prefixes_by_source.values():
            out.update(prefixes)
        return out

    def active_in(self, source: SourceId) -> bool:
        """Whether this entity counts as active in one source's dataset.

        PeeringDB carries no status information, so presence there counts
        as active; for the other sources the reported status must be
        "active".
        """
        if source not in self.status_by_source:
            return False
        if source is SourceId.PEERING_DB:
            return True
        return self.status_by_source[source] is IxpStatus.ACTIVE

    def to_dict(self) -> dict[str, Any]:
        return {
            "canonical_id": self.canonical_id,
            "members": [[s.value, r] for s, r in self.members],
            "merged_names": list(self.merged_names),
            "merged_locations": [loc.to_dict() for loc in self.merged_locations],
            "status_by_source": {
                s.value: st.value for s, st in sorted(self.status_by_source.items())
            },
            "participants_by_source": {
                s.value: [p.to_dict() for p in sorted(ps, key=Participant.sort_key)]
                for s, ps in sorted(self.participants_by_source.items())
            },
            "name_sources": [[s.value for s in srcs] for srcs in self.name_sources],
            "location_sources": [
                [s.value for s in srcs] for srcs in self.location_sources
            ],
            "prefixes_by_source": {
                s.value: list(ps) for s, ps in sorted(self.prefixes_by_source.items())
            },
            "urls_by_source": {
                s.value: list(us) for s, us in sorted(self.urls_by_source.items())
            },
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CanonicalIxp":
        return cls(
            canonical_id=data["canonical_id"],
            members=[(SourceId(s), r) for s, r in data["members"]],
            merged_names=list(data["merged_names"]),
            merged_locations=[Location.from_dict(d) for d in data["merged_locations"]],
            status_by_source={
                SourceId(s): IxpStatus(st)
                for s, st in data["status_by_source"].items()
            },
            participants_by_source={
                SourceId(s): frozenset(Participant.from_dict(d) for d in ps)
                for s, ps in data["participants_by_source"].items()
            },
            name_sources=[
                tuple(SourceId(s) for s in srcs)
                for srcs in data.get("name_sources", ())
            ],
            location_sources=[
                tuple(SourceId(s) for s in srcs)
                for srcs in data.get("location_sources", ())
            ],
            prefixes_by_source={
                SourceId(s): tuple(ps)
                for s, ps in data.get("prefixes_by_source", {}).items()
            },
            urls_by_source={
                SourceId(s): tuple(us)
                for s, us in data.get("urls_by_source", {}).items()
            },
        )


class MappingScope(str, Enum):
    SIBLING = "sibling"  # both endpoints from the same source
    CROSS = "cross"  # endpoints from different sources


class CandidateState(str, Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    AUTO_ACCEPTED = "auto-accepted"


class LocationEvidence(str, Enum):
    CITY_MATCH = "city-match"
    COUNTRY_MATCH = "country-match"
    NONE = "none"


def derive_candidate_id(scope: MappingScope, left: str, right: str, step: int) -> str:
    digest = hashlib.sha256(
        f"{scope.value}|{left}|{right}|{step}".encode("utf-8")
    ).hexdigest()
    return "mc-" + digest[:16]


@dataclass
class MappingCandidate:
    """A proposed identity between two canonical IXPs, awaiting a verdict."""

    candidate_id: str
    left: str
    right: str
    scope: MappingScope
    heuristic_step: int
    transformed_name: str
    location_evidence: LocationEvidence
    state: CandidateState = CandidateState.PENDING

    def __post_init__(self) -> None:
        if self.left == self.right:
            raise ValueError("candidate endpoints must differ")
        if not 1 <= self.heuristic_step <= 6:
            raise ValueError(f"heuristic_step out of range: {self.heuristic_step}")

    @classmethod
    def make(
        cls,
        left: str,
        right: str,
        scope: MappingScope,
        step: int,
        transformed_name: str,
        location_evidence: LocationEvidence,
    ) -> "MappingCandidate":
        return cls(
            candidate_id=derive_candidate_id(scope, left, right, step),
            left=left,
            right=right,
            scope=scope,
            heuristic_step=step,
            transformed_name=transformed_name,
            location_evidence=location_evidence,
        )

    def pair(self) -> tuple[str, str]:
        return (self.left, self.right)

    def to_dict(self) -> dict[str, Any]:
        return {
            "candidate_id": self.candidate_id,
            "left": self.left,
            "right": self.right,
            "scope": self.scope.value,
            "heuristic_step": self.heuristic_step,
            "transformed_name": self.transformed_name,
            "location_evidence": self.location_evidence.value,
            "state": self.state.value,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MappingCandidate":
        return cls(
            candidate_id=data["candidate_id"],
            left=data["left"],
            right=data["right"],
            scope=MappingScope(data["scope"]),
            heuristic_step=data["heuristic_step"],
            transformed_name=data["transformed_name"],
            location_evidence=LocationEvidence(data["location_evidence"]),
            state=CandidateState(data["state"]),
        )


class Verdict(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"


@dataclass(frozen=True)
class MappingDecision:
    """One human verdict on a candidate; the log of these is append-only.

    A later decision on the same candidate supersedes earlier ones
    (last-writer-wins by timestamp, ties broken by log order).
    """

    candidate_id: str
    verdict: Verdict
    reviewer: str
    timestamp: datetime
    note: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "candidate_id": self.candidate_id,
            "verdict": self.verdict.value,
            "reviewer": self.reviewer,
            "timestamp": format_timestamp(self.timestamp),
        }
        if self.note is not None:
            out["note"] = self.note
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MappingDecision":
        return cls(
            candidate_id=data["candidate_id"],
            verdict=Verdict(data["verdict"]),
            reviewer=data["reviewer"],
            timestamp=parse_timestamp(data["timestamp"]),
            note=data.get("note"),
        )


@dataclass
class LinkSet:
    """Set of (canonical_id, asn) membership links for one source or the union."""

    source: Any  # SourceId or the UNION marker
    links: set[tuple[str, int]] = field(default_factory=set)

    def asns_for(self, canonical_id: str) -> set[int]:
        return {asn for cid, asn in self.links if cid == canonical_id}

    def ixp_ids(self) -> set[str]:
        return {cid for cid, _ in self.links}

    def restricted_to(self, canonical_ids: set[str]) -> "LinkSet":
        return LinkSet(
            source=self.source,
            links={(cid, asn) for cid, asn in self.links if cid in canonical_ids},
        )

    def source_label(self) -> str:
        return self.source.value if isinstance(self.source, SourceId) else str(self.source)

    def to_dict(self) -> dict[str, Any]:
        return {
            "source": self.source_label(),
            "links": sorted([cid, asn] for cid, asn in self.links),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "LinkSet":
        raw = data["source"]
        source = raw if raw == UNION else SourceId(raw)
        return cls(source=source, links={(cid, asn) for cid, asn in data["links"]})


@dataclass
class SimilarityReport:
    """Intersection/union cardinalities plus Jaccard and overlap indices."""

    group_key: str
    sets_compared: list[str]
    cardinalities: list[int]
    intersection: int
    union_size: int
    jaccard: float
    overlap: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.jaccard <= 1.0 or not 0.0 <= self.overlap <= 1.0:
            raise ValueError("similarity indices must lie in [0, 1]")
        if self.jaccard > self.overlap + 1e-12:
            raise ValueError("jaccard may not exceed overlap")

    def to_dict(self) -> dict[str, Any]:
        return {
            "group_key": self.group_key,
            "sets_compared": list(self.sets_compared),
            "cardinalities": list(self.cardinalities),
            "intersection": self.intersection,
            "union_size": self.union_size,
            "jaccard": self.jaccard,
            "overlap": self.overlap,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SimilarityReport":
        return cls(
            group_key=data["group_key"],
            sets_compared=list(data["sets_compared"]),
            cardinalities=list(data["cardinalities"]),
            intersection=data["intersection"],
            union_size=data["union_size"],
            jaccard=data["jaccard"],
            overlap=data["overlap"],
        )


class SessionState(str, Enum):
    ESTABLISHED = "established"
    OTHER = "other"


@dataclass(frozen=True)
class BgpSession:
    peer_ip: str
    asn: Optional[int]
    state: SessionState

    def __post_init__(self) -> None:
        ipaddress.ip_address(self.peer_ip)
        if self.asn is not None and not 0 <= self.asn <= MAX_ASN:
            raise ValueError(f"ASN out of range: {self.asn}")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"peer_ip": self.peer_ip, "state": self.state.value}
        if self.asn is not None:
            out["asn"] = self.asn
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "BgpSession":
        return cls(
            peer_ip=data["peer_ip"],
            asn=data.get("asn"),
            state=SessionState(data["state"]),
        )


@dataclass
class BgpCollectorSnapshot:
    """Summary of one route collector: its fabric prefixes and sessions.

    fabric_prefixes are normalized to a non-overlapping set at parse time.
    """

    collector_id: str
    airport_code: Optional[str]
    fabric_prefixes: list[str]
    sessions: list[BgpSession]

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "collector_id": self.collector_id,
            "fabric_prefixes": list(self.fabric_prefixes),
            "sessions": [s.to_dict() for s in self.sessions],
        }
        if self.airport_code is not None:
            out["airport_code"] = self.airport_code
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "BgpCollectorSnapshot":
        return cls(
            collector_id=data["collector_id"],
            airport_code=data.get("airport_code"),
            fabric_prefixes=list(data["fabric_prefixes"]),
            sessions=[BgpSession.from_dict(d) for d in data["sessions"]],
        )
