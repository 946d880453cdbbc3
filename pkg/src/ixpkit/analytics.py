"""Set-similarity indices, link extraction, and the comparison tables.

All operations are pure; CSV writers at the bottom fix the column layout
of each report file. Percentages are rounded to three significant
figures, round-half-even.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Sequence

from .errors import InputError, PipelineError
from .model import (
    DATABASE_SOURCES,
    UNION,
    CanonicalIxp,
    Facility,
    LinkSet,
    SimilarityReport,
    SourceId,
    SourceRecord,
)
from .regions import Continent


class UnknownIxp(InputError):
    pass


def jaccard(*sets: set) -> float:
    """|intersection| / |union| over two or more sets; 0 for empty union."""
    union = set().union(*sets)
    if not union:
        return 0.0
    intersection = set.intersection(*map(set, sets))
    return len(intersection) / len(union)


def overlap(*sets: set) -> float:
    """|intersection| / smallest cardinality; 0 if any set is empty."""
    sizes = [len(s) for s in sets]
    if min(sizes) == 0:
        return 0.0
    intersection = set.intersection(*map(set, sets))
    return len(intersection) / min(sizes)


def round_sig(value: float, digits: int = 3) -> float:
    """Round to a number of significant figures, half-even."""
    if value == 0:
        return 0.0
    d = Decimal(repr(value))
    quantum = Decimal(1).scaleb(d.adjusted() - digits + 1)
    return float(d.quantize(quantum, rounding=ROUND_HALF_EVEN))


def percent(fraction: Optional[float]) -> str:
    """Percentage string at three significant figures ("40.6", "0.0918")."""
    if fraction is None:
        return ""
    return f"{round_sig(fraction * 100.0):g}"


def similarity_report(
    group_key: str, labeled_sets: Sequence[tuple[str, set]]
) -> SimilarityReport:
    sets = [s for _, s in labeled_sets]
    intersection = set.intersection(*map(set, sets)) if sets else set()
    union = set().union(*sets)
    return SimilarityReport(
        group_key=group_key,
        sets_compared=[label for label, _ in labeled_sets],
        cardinalities=[len(s) for s in sets],
        intersection=len(intersection),
        union_size=len(union),
        jaccard=jaccard(*sets),
        overlap=overlap(*sets),
    )


def extract_links(ixps: Sequence[CanonicalIxp], source: SourceId) -> LinkSet:
    """One (canonical_id, ASN) link per distinct membership in one source."""
    links = set()
    for entity in ixps:
        for asn in entity.participant_asns(source):
            links.add((entity.canonical_id, asn))
    return LinkSet(source=source, links=links)


def union_links(ixps: Sequence[CanonicalIxp]) -> LinkSet:
    merged = set()
    for source in DATABASE_SOURCES:
        merged |= extract_links(ixps, source).links
    return LinkSet(source=UNION, links=merged)


class Grouping(str, Enum):
    CONTINENT = "continent"
    SIZE_BUCKET = "size"
    TOTAL = "total"


SIZE_BUCKETS = (
    (0.0, 30.0, "Less than 30"),
    (30.0, 60.0, "30 to 59"),
    (60.0, 120.0, "60 to 119"),
    (120.0, 240.0, "120 to 239"),
    (240.0, None, "240 or more"),
)

TOTAL_GROUP = "Total"

_PAIR_COMBOS: tuple[tuple[SourceId, ...], ...] = (
    (SourceId.EURO_IX, SourceId.PEERING_DB),
    (SourceId.EURO_IX, SourceId.PCH),
    (SourceId.PEERING_DB, SourceId.PCH),
    DATABASE_SOURCES,
)


def ixp_size(entity: CanonicalIxp) -> float:
    """Mean participant count over the datasets that list any participants."""
    counts = [
        len(entity.participant_asns(source))
        for source in DATABASE_SOURCES
        if entity.participant_asns(source)
    ]
    if not counts:
        return 0.0
    return sum(counts) / len(counts)


def size_bucket(size: float) -> str:
    for low, high, label in SIZE_BUCKETS:
        if size >= low and (high is None or size < high):
            return label
    raise ValueError(f"size cannot be bucketed: {size}")


def _group_of(entity: CanonicalIxp, grouping: Grouping) -> str:
    if grouping is Grouping.TOTAL:
        return TOTAL_GROUP
    if grouping is Grouping.CONTINENT:
        return entity.continent().value
    return size_bucket(ixp_size(entity))


def _group_order(grouping: Grouping) -> list[str]:
    if grouping is Grouping.CONTINENT:
        return [c.value for c in Continent]
    if grouping is Grouping.SIZE_BUCKET:
        return [label for _, _, label in SIZE_BUCKETS]
    return [TOTAL_GROUP]


def group_similarity(
    link_sets: dict[SourceId, LinkSet],
    grouping: Grouping,
    mapped_ixps: Sequence[CanonicalIxp],
) -> list[SimilarityReport]:
    """Per-group link counts and similarity for every pair and the triple.

    Groups partition the link space; the per-group link counts are checked
    to sum to each source's total.
    """
    group_ids: dict[str, set[str]] = {}
    for entity in mapped_ixps:
        group_ids.setdefault(_group_of(entity, grouping), set()).add(entity.canonical_id)

    known_ids = set().union(*group_ids.values()) if group_ids else set()
    for source, link_set in link_sets.items():
        stray = link_set.ixp_ids() - known_ids
        if stray:
            raise PipelineError(
                f"{source.value} links reference IXPs outside the grouped dataset: "
                f"{sorted(stray)[:3]}..."
            )

    reports: list[SimilarityReport] = []
    totals = {source: 0 for source in link_sets}
    for group in _group_order(grouping):
        ids = group_ids.get(group)
        if ids is None:
            continue
        restricted = {
            source: link_set.restricted_to(ids) for source, link_set in link_sets.items()
        }
        for source in link_sets:
            totals[source] += len(restricted[source].links)
        for combo in _PAIR_COMBOS:
            if any(source not in restricted for source in combo):
                continue
            reports.append(
                similarity_report(
                    f"{grouping.value}:{group}",
                    [(s.value, restricted[s].links) for s in combo],
                )
            )

    if grouping is not Grouping.TOTAL:
        for source, link_set in link_sets.items():
            if totals[source] != len(link_set.links):
                raise PipelineError(
                    f"group counts for {source.value} sum to {totals[source]}, "
                    f"expected {len(link_set.links)}"
                )
    return reports


@dataclass
class ParticipantStats:
    """Membership distribution for one source."""

    source: SourceId
    ixps_present: int
    zero_participant_ixps: int
    mean: Optional[float]
    median: Optional[int]
    per_asn_counts: dict[int, int]
    members_per_ixp_cdf: list[tuple[int, float]]
    ixps_per_asn_cdf: list[tuple[int, float]]

    @property
    def asn_count(self) -> int:
        return len(self.per_asn_counts)

    def asns_at_more_than(self, threshold: int) -> int:
        return sum(1 for count in self.per_asn_counts.values() if count > threshold)


def _cdf(values: Sequence[int]) -> list[tuple[int, float]]:
    if not values:
        return []
    ordered = sorted(values)
    total = len(ordered)
    series: list[tuple[int, float]] = []
    for i, value in enumerate(ordered, start=1):
        if i == total or ordered[i] != value:
            series.append((value, i / total))
    return series


def participant_stats(ixps: Sequence[CanonicalIxp], source: SourceId) -> ParticipantStats:
    """Participants-per-IXP and IXPs-per-ASN views for one source.

    Mean and median cover only IXPs with at least one participant; they
    are None when every IXP is empty. The median takes the lower middle
    element for even-length lists.
    """
    counts = [
        len(entity.participant_asns(source))
        for entity in ixps
        if source in entity.status_by_source
    ]
    nonzero = sorted(c for c in counts if c > 0)
    per_asn: dict[int, int] = {}
    for entity in ixps:
        for asn in entity.participant_asns(source):
            per_asn[asn] = per_asn.get(asn, 0) + 1

    return ParticipantStats(
        source=source,
        ixps_present=len(counts),
        zero_participant_ixps=sum(1 for c in counts if c == 0),
        mean=sum(nonzero) / len(nonzero) if nonzero else None,
        median=nonzero[(len(nonzero) - 1) // 2] if nonzero else None,
        per_asn_counts=per_asn,
        members_per_ixp_cdf=_cdf(nonzero),
        ixps_per_asn_cdf=_cdf(list(per_asn.values())),
    )


@dataclass
class TopAsnRow:
    asn: int
    counts: dict[str, int]
    total: int


def top_asns(link_sets: Sequence[LinkSet], n: int) -> list[TopAsnRow]:
    """ASNs ranked by summed distinct-IXP counts; ties broken by ASN."""
    per_asn: dict[int, dict[str, int]] = {}
    for link_set in link_sets:
        label = link_set.source_label()
        for cid, asn in link_set.links:
            counts = per_asn.setdefault(asn, {})
            counts[label] = counts.get(label, 0) + 1
    labels = [ls.source_label() for ls in link_sets]
    rows = [
        TopAsnRow(
            asn=asn,
            counts={label: counts.get(label, 0) for label in labels},
            total=sum(counts.values()),
        )
        for asn, counts in per_asn.items()
    ]
    rows.sort(key=lambda r: (-r.total, r.asn))
    return rows[:n]


@dataclass
class StatusConsistencyReport:
    pair: tuple[SourceId, SourceId]
    pairs_total: int
    consistent: int
    fraction: Optional[float]
    table: dict[tuple[str, str], int] = field(default_factory=dict)

    def cell(self, left_status: str, right_status: str) -> int:
        return self.table.get((left_status, right_status), 0)

    def right_only_status(self, status: str) -> int:
        """Linked pairs where only the right source reports this status."""
        return sum(
            count
            for (left, right), count in self.table.items()
            if right == status and left != status
        )

    def left_only_status(self, status: str) -> int:
        return sum(
            count
            for (left, right), count in self.table.items()
            if left == status and right != status
        )


def status_consistency(
    unified: Sequence[CanonicalIxp],
    pair: tuple[SourceId, SourceId] = (SourceId.EURO_IX, SourceId.PCH),
) -> StatusConsistencyReport:
    """Status agreement over entities linked across the two sources.

    Statuses are compared for equality only; the full contingency table is
    part of the report so asymmetries stay observable. With no linked
    pairs the fraction is None, never 0/0.
    """
    left_source, right_source = pair
    table: dict[tuple[str, str], int] = {}
    total = 0
    consistent = 0
    for entity in unified:
        statuses = entity.status_by_source
        if left_source not in statuses or right_source not in statuses:
            continue
        total += 1
        key = (statuses[left_source].value, statuses[right_source].value)
        table[key] = table.get(key, 0) + 1
        if key[0] == key[1]:
            consistent += 1
    return StatusConsistencyReport(
        pair=pair,
        pairs_total=total,
        consistent=consistent,
        fraction=consistent / total if total else None,
        table=table,
    )


@dataclass
class GeoTable:
    """Counts of raw records per continent/country/city and source."""

    sources: list[SourceId]
    # continent -> country -> city -> {source: count}; "" keys hold totals
    counts: dict[str, dict[str, dict[str, dict[str, int]]]]

    def world_total(self, source: SourceId) -> int:
        return sum(
            branch[""][""].get(source.value, 0) for branch in self.counts.values()
        )

    def continent_total(self, continent: str, source: SourceId) -> int:
        branch = self.counts.get(continent)
        if branch is None:
            return 0
        return branch[""][""].get(source.value, 0)


def geo_table(records_by_source: dict[SourceId, Sequence[SourceRecord]]) -> GeoTable:
    """Geographic distribution of raw (pre-sibling-merge) records.

    Every record counts once, at its first listed location; records with
    unknown countries land in the Unknown continent bucket.
    """
    counts: dict[str, dict[str, dict[str, dict[str, int]]]] = {}

    def bump(continent: str, country: str, city: str, source: SourceId) -> None:
        branch = counts.setdefault(continent, {})
        keys = dict.fromkeys([("", ""), (country, ""), (country, city)])
        for country_key, city_key in keys:
            cell = branch.setdefault(country_key, {}).setdefault(city_key, {})
            cell[source.value] = cell.get(source.value, 0) + 1

    for source, records in records_by_source.items():
        for record in records:
            loc = record.locations[0]
            bump(loc.continent.value, loc.country, loc.city, source)

    return GeoTable(sources=list(records_by_source), counts=counts)


@dataclass
class FacilityStats:
    facility_count: int
    facilities_per_country: dict[str, int]
    orphan_facilities: int
    facilities_with_multiple_ixps: int
    ixps_at_more_than_one: int
    ixps_at_more_than_ten: int
    ixps_without_facilities: int
    facilities_per_ixp: dict[str, int]
    ixps_per_facility: dict[str, int]


def facility_stats(
    facilities: Sequence[Facility], records: Sequence[SourceRecord]
) -> FacilityStats:
    """Facility coverage counts over the PeeringDB snapshot.

    IXP-facility edges are the union of both reported directions (the
    facility's IXP list and the record's facility list).
    """
    edges: set[tuple[str, str]] = set()
    for fac in facilities:
        for rid in fac.ixp_record_ids:
            edges.add((fac.facility_id, rid))
    for record in records:
        for fid in record.facility_ids:
            edges.add((fid, record.record_id))

    ixps_per_facility: dict[str, int] = {f.facility_id: 0 for f in facilities}
    facilities_per_ixp: dict[str, int] = {r.record_id: 0 for r in records}
    for fid, rid in edges:
        ixps_per_facility[fid] = ixps_per_facility.get(fid, 0) + 1
        facilities_per_ixp[rid] = facilities_per_ixp.get(rid, 0) + 1

    per_country: dict[str, int] = {}
    for fac in facilities:
        per_country[fac.location.country] = per_country.get(fac.location.country, 0) + 1

    return FacilityStats(
        facility_count=len(facilities),
        facilities_per_country=per_country,
        orphan_facilities=sum(
            1 for f in facilities if not f.ixp_record_ids and not f.network_asns
        ),
        facilities_with_multiple_ixps=sum(
            1 for f in facilities if ixps_per_facility.get(f.facility_id, 0) > 1
        ),
        ixps_at_more_than_one=sum(
            1 for r in records if facilities_per_ixp.get(r.record_id, 0) > 1
        ),
        ixps_at_more_than_ten=sum(
            1 for r in records if facilities_per_ixp.get(r.record_id, 0) > 10
        ),
        ixps_without_facilities=sum(
            1 for r in records if facilities_per_ixp.get(r.record_id, 0) == 0
        ),
        facilities_per_ixp=facilities_per_ixp,
        ixps_per_facility=ixps_per_facility,
    )


@dataclass
class ExternalComparison:
    canonical_id: str
    common: set[int]
    only_external: set[int]
    only_union: set[int]
    jaccard: float

    @property
    def coverage(self) -> float:
        """Fraction of the external membership present in the union."""
        denominator = len(self.common) + len(self.only_external)
        return len(self.common) / denominator if denominator else 0.0


def compare_external_list(
    canonical_id: str, external: set[int], union_link_set: LinkSet
) -> ExternalComparison:
    """Partition an externally sourced membership list against the union."""
    if not external:
        raise ValueError("external membership set must be non-empty")
    if canonical_id not in union_link_set.ixp_ids():
        raise UnknownIxp(f"no links for IXP {canonical_id!r} in the union dataset")
    ours = union_link_set.asns_for(canonical_id)
    return ExternalComparison(
        canonical_id=canonical_id,
        common=external & ours,
        only_external=external - ours,
        only_union=ours - external,
        jaccard=jaccard(external, ours),
    )


def aggregate_external_coverage(
    comparisons: Sequence[ExternalComparison],
) -> dict[str, float]:
    """Coverage fractions aggregated over several compared IXPs."""
    common = sum(len(c.common) for c in comparisons)
    only_external = sum(len(c.only_external) for c in comparisons)
    only_union = sum(len(c.only_union) for c in comparisons)
    external_total = common + only_external
    all_links = common + only_external + only_union
    return {
        "external_links": float(external_total),
        "union_links": float(common + only_union),
        "coverage": common / external_total if external_total else 0.0,
        "only_external_fraction": only_external / all_links if all_links else 0.0,
        "only_union_fraction": only_union / all_links if all_links else 0.0,
    }


# --- CSV writers ----------------------------------------------------------
#
# One file per report table; UTF-8, LF line endings, fixed headers.


def _writer(path: Path):
    fh = open(path, "w", encoding="utf-8", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def write_table2_csv(path: Path, combination_rows: Sequence[dict[str, Any]]) -> None:
    fh, out = _writer(path)
    with fh:
        out.writerow(["sources", "intersection", "union", "jaccard_pct", "overlap_pct"])
        for row in combination_rows:
            out.writerow(
                [
                    "+".join(row["sources"]),
                    row["intersection"],
                    row["union"],
                    percent(row["jaccard"]),
                    percent(row["overlap"]),
                ]
            )


def write_top_asns_csv(
    path: Path,
    rows: Sequence[TopAsnRow],
    info: Optional[dict[int, dict[str, str]]] = None,
) -> None:
    fh, out = _writer(path)
    with fh:
        out.writerow(
            ["asn", "name", "policy", "network_type", "euro-ix", "peeringdb", "pch", "total"]
        )
        for row in rows:
            meta = (info or {}).get(row.asn, {})
            out.writerow(
                [
                    row.asn,
                    meta.get("name", ""),
                    meta.get("policy", ""),
                    meta.get("network_type", ""),
                    row.counts.get(SourceId.EURO_IX.value, 0),
                    row.counts.get(SourceId.PEERING_DB.value, 0),
                    row.counts.get(SourceId.PCH.value, 0),
                    row.total,
                ]
            )


def write_group_similarity_csv(path: Path, reports: Sequence[SimilarityReport]) -> None:
    """Pivot of per-group reports: one row per group, pairs as columns."""
    by_group: dict[str, dict[tuple[str, ...], SimilarityReport]] = {}
    order: list[str] = []
    for report in reports:
        if report.group_key not in by_group:
            order.append(report.group_key)
        by_group.setdefault(report.group_key, {})[tuple(report.sets_compared)] = report

    pair_columns = [
        (SourceId.EURO_IX.value, SourceId.PEERING_DB.value),
        (SourceId.EURO_IX.value, SourceId.PCH.value),
        (SourceId.PEERING_DB.value, SourceId.PCH.value),
    ]
    triple = tuple(s.value for s in DATABASE_SOURCES)

    fh, out = _writer(path)
    with fh:
        header = ["category", "group", "euro-ix_links", "peeringdb_links", "pch_links"]
        for a, b in pair_columns:
            header += [f"jaccard_{a}_{b}_pct", f"overlap_{a}_{b}_pct"]
        header += ["jaccard_all_pct", "overlap_all_pct"]
        out.writerow(header)
        for group_key in order:
            reports_by_combo = by_group[group_key]
            category, _, group = group_key.partition(":")
            triple_report = reports_by_combo.get(triple)
            counts = dict(zip(triple_report.sets_compared, triple_report.cardinalities)) if triple_report else {}
            row: list[Any] = [
                category,
                group or category,
                counts.get(SourceId.EURO_IX.value, 0),
                counts.get(SourceId.PEERING_DB.value, 0),
                counts.get(SourceId.PCH.value, 0),
            ]
            for combo in pair_columns:
                report = reports_by_combo.get(combo)
                row += (
                    [percent(report.jaccard), percent(report.overlap)]
                    if report
                    else ["", ""]
                )
            row += (
                [percent(triple_report.jaccard), percent(triple_report.overlap)]
                if triple_report
                else ["", ""]
            )
            out.writerow(row)


def write_geo_table_csv(
    path: Path, table: GeoTable, city_threshold: int = 0
) -> None:
    """Continent/country/city rows; empty country and city cells mark totals.

    City rows appear only when the combined count across sources reaches
    the threshold (0 keeps every city).
    """
    source_labels = [s.value for s in table.sources]

    def cell_counts(cell: dict[str, int]) -> list[int]:
        return [cell.get(label, 0) for label in source_labels]

    continent_order = [c.value for c in Continent]
    fh, out = _writer(path)
    with fh:
        out.writerow(["continent", "country", "city"] + source_labels)
        for continent in continent_order:
            branch = table.counts.get(continent)
            if branch is None:
                continue
            out.writerow([continent, "", ""] + cell_counts(branch[""][""]))
            countries = sorted(
                (c for c in branch if c != ""),
                key=lambda c: (-sum(branch[c][""].values()), c),
            )
            for country in countries:
                cities = branch[country]
                out.writerow([continent, country, ""] + cell_counts(cities[""]))
                named = sorted(
                    (c for c in cities if c != ""),
                    key=lambda c: (-sum(cities[c].values()), c),
                )
                for city in named:
                    if sum(cities[city].values()) < city_threshold:
                        continue
                    out.writerow([continent, country, city] + cell_counts(cities[city]))
        world = [
            sum(table.continent_total(c, s) for c in table.counts)
            for s in table.sources
        ]
        out.writerow(["World", "", ""] + world)


def write_status_contingency_csv(path: Path, report: StatusConsistencyReport) -> None:
    fh, out = _writer(path)
    with fh:
        left, right = report.pair
        out.writerow([f"{left.value}_status", f"{right.value}_status", "count"])
        for (a, b), count in sorted(report.table.items()):
            out.writerow([a, b, count])


def write_cdf_csv(path: Path, series_by_source: dict[str, list[tuple[int, float]]]) -> None:
    fh, out = _writer(path)
    with fh:
        out.writerow(["source", "value", "cumulative_fraction"])
        for label in sorted(series_by_source):
            for value, fraction in series_by_source[label]:
                out.writerow([label, value, repr(fraction)])
