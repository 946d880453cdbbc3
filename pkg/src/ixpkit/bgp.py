"""Route-collector summaries: parsing, fabric-peer extraction, and the
completeness comparison between BGP-observed links and the databases.

A collector is linked to a unified IXP primarily by fabric-prefix
equality or containment; membership similarity breaks ties, and the
airport code embedded in many collector names is only ever a
verification flag, never a matching criterion.
"""

from __future__ import annotations

import ipaddress
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import jsonschema

from .analytics import jaccard, overlap
from .errors import InputError, PipelineError
from .ingest import MalformedSnapshot
from .linker import NameScheme, normalize_name
from .model import (
    BgpCollectorSnapshot,
    BgpSession,
    CanonicalIxp,
    LinkSet,
    SessionState,
)


class InvalidIp(InputError):
    pass


class NoMatch(PipelineError):
    pass


class AmbiguousMatch(PipelineError):
    pass


COLLECTOR_SCHEMA = {
    "type": "object",
    "required": ["collector_id", "fabric_prefixes", "sessions"],
    "properties": {
        "collector_id": {"type": "string", "minLength": 1},
        "fabric_prefixes": {"type": "array", "items": {"type": "string"}},
        "sessions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["peer_ip", "state"],
                "properties": {
                    "peer_ip": {"type": "string"},
                    "asn": {"type": "integer", "minimum": 1, "maximum": 2**32 - 1},
                    "state": {"enum": ["established", "other"]},
                },
            },
        },
    },
}

_TRAILING_TOKEN = re.compile(r"[0-9A-Za-z]+")


def airport_code_from(collector_id: str) -> Optional[str]:
    """Trailing three-letter token of the collector name, upper-cased."""
    tokens = _TRAILING_TOKEN.findall(collector_id)
    if tokens and re.fullmatch(r"[A-Za-z]{3}", tokens[-1]):
        return tokens[-1].upper()
    return None


def _normalize_prefixes(prefixes: Iterable[str], locator: str) -> list[str]:
    v4, v6 = [], []
    for prefix in prefixes:
        try:
            network = ipaddress.ip_network(prefix, strict=True)
        except ValueError as exc:
            raise MalformedSnapshot(f"{locator}: invalid prefix {prefix!r}: {exc}") from None
        (v4 if network.version == 4 else v6).append(network)
    collapsed = list(ipaddress.collapse_addresses(v4)) + list(
        ipaddress.collapse_addresses(v6)
    )
    return [str(n) for n in collapsed]


def parse_bgp_summary(path: str | Path) -> BgpCollectorSnapshot:
    """Read one collector summary file; prefixes come out non-overlapping."""
    path = Path(path)
    if not path.exists():
        raise MalformedSnapshot(f"collector file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            document = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedSnapshot(f"{path}: not valid JSON ({exc})") from None

    validator = jsonschema.Draft202012Validator(COLLECTOR_SCHEMA)
    errors = sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        locator = "/".join(str(p) for p in errors[0].absolute_path) or "<root>"
        raise MalformedSnapshot(f"{path}: at {locator}: {errors[0].message}")

    sessions = []
    for i, raw in enumerate(document["sessions"]):
        try:
            sessions.append(BgpSession.from_dict(raw))
        except ValueError as exc:
            raise InvalidIp(f"{path}: sessions/{i}: {exc}") from None

    collector_id = document["collector_id"]
    return BgpCollectorSnapshot(
        collector_id=collector_id,
        airport_code=airport_code_from(collector_id),
        fabric_prefixes=_normalize_prefixes(document["fabric_prefixes"], str(path)),
        sessions=sessions,
    )


def _contains(prefix: str, ip: str) -> bool:
    network = ipaddress.ip_network(prefix)
    address = ipaddress.ip_address(ip)
    return address.version == network.version and address in network


def extract_fabric_peers(snapshot: BgpCollectorSnapshot) -> set[int]:
    """ASNs of established sessions whose peer address sits on the fabric."""
    if not snapshot.fabric_prefixes:
        raise ValueError("collector snapshot has no fabric prefixes")
    peers: set[int] = set()
    for session in snapshot.sessions:
        if session.state is not SessionState.ESTABLISHED or session.asn is None:
            continue
        if any(_contains(prefix, session.peer_ip) for prefix in snapshot.fabric_prefixes):
            peers.add(session.asn)
    return peers


def _prefixes_overlap(a: str, b: str) -> bool:
    net_a = ipaddress.ip_network(a)
    net_b = ipaddress.ip_network(b)
    if net_a.version != net_b.version:
        return False
    return net_a.subnet_of(net_b) or net_b.subnet_of(net_a)


@dataclass
class CollectorLink:
    """Outcome of matching one collector against the unified dataset."""

    collector_id: str
    canonical_id: str
    matched_by: str  # "prefix" or "membership"
    membership_jaccard: float
    airport_consistent: Optional[bool]
    fabric_peers: set[int]

    def to_dict(self) -> dict[str, Any]:
        return {
            "collector_id": self.collector_id,
            "canonical_id": self.canonical_id,
            "matched_by": self.matched_by,
            "membership_jaccard": self.membership_jaccard,
            "airport_consistent": self.airport_consistent,
            "fabric_peers": sorted(self.fabric_peers),
        }


def _airport_consistent(code: Optional[str], entity: CanonicalIxp) -> Optional[bool]:
    if code is None:
        return None
    token = code.lower()
    for name in entity.merged_names:
        if token in normalize_name(name, NameScheme.STRIP_NONWORD):
            return True
    for city in entity.cities():
        if city.startswith(token):
            return True
    return False


def link_collector(
    snapshot: BgpCollectorSnapshot,
    unified: Sequence[CanonicalIxp],
    jaccard_threshold: float = 0.05,
    ambiguity_margin: float = 0.01,
) -> CollectorLink:
    """Find the unified IXP a collector sits at.

    Prefix overlap shortlists candidates; with more than one, the largest
    membership Jaccard wins unless the runner-up is within the ambiguity
    margin. Without any prefix overlap, membership similarity across the
    whole dataset must clear the threshold or the collector is unmatched.
    """
    peers = extract_fabric_peers(snapshot)

    def membership_jaccard(entity: CanonicalIxp) -> float:
        return jaccard(peers, entity.union_membership())

    by_prefix = [
        entity
        for entity in unified
        if any(
            _prefixes_overlap(fp, ip)
            for fp in snapshot.fabric_prefixes
            for ip in entity.all_prefixes()
        )
    ]

    if by_prefix:
        scored = sorted(
            ((membership_jaccard(e), e) for e in by_prefix),
            key=lambda pair: (-pair[0], pair[1].canonical_id),
        )
        if len(scored) > 1 and scored[0][0] - scored[1][0] < ambiguity_margin:
            raise AmbiguousMatch(
                f"{snapshot.collector_id}: prefix candidates "
                f"{scored[0][1].canonical_id} and {scored[1][1].canonical_id} "
                f"are within {ambiguity_margin} Jaccard of each other"
            )
        score, entity = scored[0]
        return CollectorLink(
            collector_id=snapshot.collector_id,
            canonical_id=entity.canonical_id,
            matched_by="prefix",
            membership_jaccard=score,
            airport_consistent=_airport_consistent(snapshot.airport_code, entity),
            fabric_peers=peers,
        )

    scored = sorted(
        ((membership_jaccard(e), e) for e in unified),
        key=lambda pair: (-pair[0], pair[1].canonical_id),
    )
    if not scored or scored[0][0] < jaccard_threshold:
        raise NoMatch(
            f"{snapshot.collector_id}: no prefix overlap and best membership "
            f"Jaccard below {jaccard_threshold}"
        )
    score, entity = scored[0]
    return CollectorLink(
        collector_id=snapshot.collector_id,
        canonical_id=entity.canonical_id,
        matched_by="membership",
        membership_jaccard=score,
        airport_consistent=_airport_consistent(snapshot.airport_code, entity),
        fabric_peers=peers,
    )


@dataclass
class CompletenessRow:
    dataset: str
    link_count: int
    jaccard: Optional[float]
    overlap: Optional[float]
    bgp_coverage: Optional[float]  # fraction of BGP links present in the dataset
    db_coverage: Optional[float]  # fraction of dataset links visible in BGP

    def to_dict(self) -> dict[str, Any]:
        return {
            "dataset": self.dataset,
            "link_count": self.link_count,
            "jaccard": self.jaccard,
            "overlap": self.overlap,
            "bgp_coverage": self.bgp_coverage,
            "db_coverage": self.db_coverage,
        }


@dataclass
class CompletenessReport:
    bgp_link_count: int
    collectors_linked: int
    rows: list[CompletenessRow]

    def row(self, dataset: str) -> CompletenessRow:
        for row in self.rows:
            if row.dataset == dataset:
                return row
        raise KeyError(dataset)

    def to_dict(self) -> dict[str, Any]:
        return {
            "bgp_link_count": self.bgp_link_count,
            "collectors_linked": self.collectors_linked,
            "rows": [r.to_dict() for r in self.rows],
        }


def completeness_report(
    collector_links: Sequence[CollectorLink],
    link_sets: Sequence[LinkSet],
    exclude_asns: Iterable[int] = (),
) -> CompletenessReport:
    """Compare each dataset's links against the BGP-observed links.

    Link sets are restricted to the IXPs that have a linked collector.
    Both directions of incompleteness are reported: bgp_coverage is the
    fraction of BGP links a dataset knows about, db_coverage the fraction
    of the dataset's links that BGP confirms. With an empty BGP set the
    similarity metrics stay absent rather than turning into zeros.
    """
    if not collector_links:
        raise ValueError("completeness report needs at least one linked collector")
    excluded = set(exclude_asns)
    bgp_links: set[tuple[str, int]] = set()
    linked_ids: set[str] = set()
    for link in collector_links:
        linked_ids.add(link.canonical_id)
        for asn in link.fabric_peers:
            if asn not in excluded:
                bgp_links.add((link.canonical_id, asn))

    rows = []
    for link_set in link_sets:
        restricted = link_set.restricted_to(linked_ids)
        count = len(restricted.links)
        if not bgp_links:
            rows.append(
                CompletenessRow(
                    dataset=link_set.source_label(),
                    link_count=count,
                    jaccard=None,
                    overlap=None,
                    bgp_coverage=None,
                    db_coverage=None,
                )
            )
            continue
        intersection = bgp_links & restricted.links
        rows.append(
            CompletenessRow(
                dataset=link_set.source_label(),
                link_count=count,
                jaccard=jaccard(bgp_links, restricted.links),
                overlap=overlap(bgp_links, restricted.links),
                bgp_coverage=len(intersection) / len(bgp_links),
                db_coverage=len(intersection) / count if count else None,
            )
        )
    return CompletenessReport(
        bgp_link_count=len(bgp_links),
        collectors_linked=len(linked_ids),
        rows=rows,
    )
