"""Similarity indices, link extraction, and the report tables."""

import pytest
from hypothesis import given, settings, strategies as st

from conftest import canonical, participant, record
from ixpkit.analytics import (
    Grouping,
    UnknownIxp,
    aggregate_external_coverage,
    compare_external_list,
    extract_links,
    facility_stats,
    geo_table,
    group_similarity,
    ixp_size,
    jaccard,
    overlap,
    participant_stats,
    percent,
    round_sig,
    similarity_report,
    size_bucket,
    status_consistency,
    top_asns,
    union_links,
)
from ixpkit.linker import merge_canonical
from ixpkit.model import (
    Facility,
    IxpStatus,
    LinkSet,
    Location,
    SourceId,
)
from ixpkit.regions import Continent


class TestIndices:
    def test_two_set_jaccard(self):
        assert jaccard({1, 2}, {2, 3}) == pytest.approx(1 / 3)

    def test_three_set_extension(self):
        # triple intersection over triple union
        a = set(range(673))  # placeholder sizing checked in acceptance
        assert jaccard(a, a, a) == 1.0

    def test_identical_sets(self):
        assert jaccard({1, 2}, {1, 2}) == 1.0
        assert overlap({1, 2}, {1, 2}) == 1.0

    def test_empty_cases(self):
        assert jaccard(set(), set()) == 0.0
        assert overlap({1}, set()) == 0.0

    def test_subset_overlap_is_one(self):
        assert overlap({1}, {1, 2, 3}) == 1.0

    def test_table2_overlap_denominator(self):
        sets = _sets_with(sizes=(441, 480, 374), triple_common=273)
        assert overlap(*sets) == pytest.approx(273 / 374)

    def test_symmetry(self):
        a, b = {1, 2, 3}, {3, 4}
        assert jaccard(a, b) == jaccard(b, a)
        assert overlap(a, b) == overlap(b, a)


def _sets_with(sizes, triple_common):
    """Three integer sets with given sizes sharing exactly triple_common."""
    common = set(range(triple_common))
    out = []
    base = 10_000
    for size in sizes:
        extra = size - triple_common
        out.append(common | set(range(base, base + extra)))
        base += extra
    return out


class TestRounding:
    def test_three_significant_figures(self):
        assert round_sig(0.40564, 3) == 0.406
        assert round_sig(0.091834, 3) == 0.0918
        assert round_sig(123.456, 3) == 123.0

    def test_half_even(self):
        assert round_sig(0.40650, 3) == 0.406  # ties to even
        assert round_sig(0.40750, 3) == 0.408

    def test_percent_formatting(self):
        assert percent(0.406) == "40.6"
        assert percent(0.000918) == "0.0918"
        assert percent(1.0) == "100"
        assert percent(None) == ""


class TestExtractLinks:
    def test_set_semantics_over_ports(self):
        entity = canonical("x", source=SourceId.PCH, participants=[1, 1, 2])
        links = extract_links([entity], SourceId.PCH)
        assert links.links == {(entity.canonical_id, 1), (entity.canonical_id, 2)}

    def test_shared_asn_across_ixps(self):
        a = canonical("a", participants=[1])
        b = canonical("b", participants=[1])
        links = extract_links([a, b], SourceId.EURO_IX)
        assert len(links.links) == 2

    def test_empty_participants(self):
        assert extract_links([canonical("a")], SourceId.EURO_IX).links == set()

    def test_no_asn_and_excluded_skipped(self):
        entity = canonical(
            "x",
            source=SourceId.PCH,
            participants=[
                participant(None, ips=["198.51.100.7"]),
                participant(9, excluded_from_links=True),
                participant(7),
            ],
        )
        links = extract_links([entity], SourceId.PCH)
        assert links.links == {(entity.canonical_id, 7)}

    def test_output_bounded_by_participant_lists(self):
        entity = canonical("x", participants=[1, 2, 3])
        links = extract_links([entity], SourceId.EURO_IX)
        assert len(links.links) <= 3


def _cross_entity(rid, e_asns=(), p_asns=(), c_asns=(), country="DE", city=""):
    parts = []
    if e_asns is not None:
        parts.append(canonical(f"{rid}-e", source=SourceId.EURO_IX, country=country,
                               city=city, participants=list(e_asns)))
    if p_asns is not None:
        parts.append(canonical(f"{rid}-p", source=SourceId.PEERING_DB, country=country,
                               city=city, participants=list(p_asns)))
    if c_asns is not None:
        parts.append(canonical(f"{rid}-c", source=SourceId.PCH, country=country,
                               city=city, participants=list(c_asns)))
    return merge_canonical(parts)


class TestGroupSimilarity:
    def test_identical_member_sets_give_one(self):
        entity = _cross_entity("x", e_asns=[1, 2], p_asns=[1, 2], c_asns=None)
        link_sets = {
            s: extract_links([entity], s)
            for s in (SourceId.EURO_IX, SourceId.PEERING_DB)
        }
        reports = group_similarity(link_sets, Grouping.TOTAL, [entity])
        pair = [r for r in reports if r.sets_compared == ["euro-ix", "peeringdb"]][0]
        assert pair.jaccard == 1.0 and pair.overlap == 1.0

    def test_total_band_check_against_back_solved_intersection(self):
        # |A| = 12584, |B| = 10269, |A∩B| back-solved from J = 0.401:
        # |∩| = J(|A|+|B|)/(1+J) = 6541; J = 6541/16312 = 0.401
        intersection = round(0.401 * (12584 + 10269) / 1.401)
        assert intersection == 6541
        a, b = _sets_with(sizes=(12584, 10269), triple_common=6541)
        assert jaccard(a, b) == pytest.approx(6541 / 16312, abs=1e-9)
        assert round_sig(jaccard(a, b) * 100) == 40.1

    def test_size_buckets(self):
        assert size_bucket(0) == "Less than 30"
        assert size_bucket(29.9) == "Less than 30"
        assert size_bucket(30) == "30 to 59"
        assert size_bucket(104) == "60 to 119"
        assert size_bucket(240) == "240 or more"

    def test_size_is_mean_over_reporting_datasets(self):
        entity = _cross_entity("x", e_asns=range(104), p_asns=(), c_asns=())
        # only Euro-IX lists participants: mean of a single value
        assert ixp_size(entity) == 104
        assert size_bucket(ixp_size(entity)) == "60 to 119"

    def test_no_participants_lands_in_smallest_bucket(self):
        entity = _cross_entity("x")
        assert size_bucket(ixp_size(entity)) == "Less than 30"

    def test_partition_consistency(self):
        entities = [
            _cross_entity("x", e_asns=[1, 2], p_asns=[2], c_asns=None, country="DE"),
            _cross_entity("y", e_asns=[3], p_asns=[3, 4], c_asns=None, country="US"),
        ]
        link_sets = {
            s: extract_links(entities, s)
            for s in (SourceId.EURO_IX, SourceId.PEERING_DB)
        }
        reports = group_similarity(link_sets, Grouping.CONTINENT, entities)
        groups = {r.group_key for r in reports}
        assert groups == {"continent:Europe", "continent:North America"}
        euro = [
            r for r in reports
            if r.group_key == "continent:Europe"
            and r.sets_compared == ["euro-ix", "peeringdb"]
        ][0]
        assert euro.cardinalities == [2, 1]


class TestParticipantStats:
    def test_mean_and_median(self):
        entities = [
            canonical("a", participants=list(range(1, 18))),  # 17
            canonical("b", participants=list(range(100, 117))),  # 17
            canonical("c", participants=list(range(1000, 1100))),  # 100
        ]
        stats = participant_stats(entities, SourceId.EURO_IX)
        assert stats.mean == pytest.approx(44.67, abs=0.005)
        assert stats.median == 17
        assert stats.zero_participant_ixps == 0

    def test_all_empty_reported_absent(self):
        entities = [canonical("a"), canonical("b")]
        stats = participant_stats(entities, SourceId.EURO_IX)
        assert stats.mean is None and stats.median is None
        assert stats.zero_participant_ixps == 2

    def test_per_asn_counts(self):
        entities = [
            canonical("a", participants=[9]),
            canonical("b", participants=[9]),
            canonical("c", participants=[9]),
        ]
        stats = participant_stats(entities, SourceId.EURO_IX)
        assert stats.per_asn_counts == {9: 3}
        assert stats.asns_at_more_than(1) == 1
        assert stats.asns_at_more_than(10) == 0

    def test_median_lower_middle_for_even_length(self):
        entities = [
            canonical("a", participants=list(range(1, 3))),  # 2
            canonical("b", participants=list(range(1, 9))),  # 8
        ]
        stats = participant_stats(entities, SourceId.EURO_IX)
        assert stats.median == 2

    def test_cdf_series(self):
        entities = [
            canonical("a", participants=[1]),
            canonical("b", participants=[1, 2]),
            canonical("c", participants=[1, 2]),
        ]
        stats = participant_stats(entities, SourceId.EURO_IX)
        assert stats.members_per_ixp_cdf == [(1, pytest.approx(1 / 3)), (2, 1.0)]

    def test_ixps_absent_from_source_not_counted(self):
        entities = [canonical("a", source=SourceId.PCH)]
        stats = participant_stats(entities, SourceId.EURO_IX)
        assert stats.ixps_present == 0
        assert stats.zero_participant_ixps == 0


TABLE3_COUNTS = {
    20940: (61, 91, 31),
    6939: (66, 84, 32),
    15169: (60, 76, 24),
    3856: (50, 74, 21),
    42: (44, 75, 21),
    8075: (37, 59, 22),
    22822: (41, 39, 18),
    15133: (25, 31, 18),
    16509: (21, 44, 7),
    10310: (27, 27, 14),
}

TABLE3_ORDER = [20940, 6939, 15169, 3856, 42, 8075, 22822, 15133, 16509, 10310]


def _table3_link_sets(counts):
    sets = {s: set() for s in (SourceId.EURO_IX, SourceId.PEERING_DB, SourceId.PCH)}
    for asn, (e, p, c) in counts.items():
        for n, source in ((e, SourceId.EURO_IX), (p, SourceId.PEERING_DB), (c, SourceId.PCH)):
            for i in range(n):
                sets[source].add((f"ixp-{source.value}-{asn}-{i}", asn))
    return [LinkSet(source=s, links=links) for s, links in sets.items()]


class TestTopAsns:
    def test_sum_ranking_reproduces_known_order(self):
        rows = top_asns(_table3_link_sets(TABLE3_COUNTS), 10)
        assert [r.asn for r in rows] == TABLE3_ORDER
        akamai, hurricane = rows[0], rows[1]
        assert akamai.total == 183 and hurricane.total == 182

    def test_single_source_ranking(self):
        links = LinkSet(source=SourceId.PCH, links={("a", 5), ("b", 5), ("a", 6)})
        rows = top_asns([links], 10)
        assert [r.asn for r in rows] == [5, 6]

    def test_tie_breaks_by_lower_asn(self):
        counts = dict(TABLE3_COUNTS)
        counts[99999] = (5, 5, 0)
        counts[88888] = (0, 5, 5)
        rows = top_asns(_table3_link_sets(counts), 12)
        assert [r.asn for r in rows[-2:]] == [88888, 99999]


def _status_pair(rid, e_status, c_status):
    e = canonical(f"{rid}-e", source=SourceId.EURO_IX, status=e_status)
    c = canonical(f"{rid}-c", source=SourceId.PCH, status=c_status)
    return merge_canonical([e, c])


class TestStatusConsistency:
    def test_fraction_and_contingency(self):
        entities = []
        entities += [_status_pair(f"aa{i}", IxpStatus.ACTIVE, IxpStatus.ACTIVE) for i in range(3)]
        entities += [_status_pair("dd", IxpStatus.DEFUNCT, IxpStatus.DEFUNCT)]
        entities += [_status_pair("ad", IxpStatus.ACTIVE, IxpStatus.DEFUNCT)]
        report = status_consistency(entities)
        assert report.pairs_total == 5
        assert report.consistent == 4
        assert report.fraction == pytest.approx(0.8)
        assert report.cell("active", "defunct") == 1
        assert report.right_only_status("defunct") == 1
        assert report.left_only_status("defunct") == 0

    def test_all_equal(self):
        entities = [_status_pair("x", IxpStatus.ACTIVE, IxpStatus.ACTIVE)]
        assert status_consistency(entities).fraction == 1.0

    def test_no_linked_pairs_reports_absent(self):
        entities = [canonical("solo", source=SourceId.EURO_IX)]
        report = status_consistency(entities)
        assert report.pairs_total == 0
        assert report.fraction is None


class TestGeoTable:
    def test_zz_lands_in_unknown_bucket(self):
        records = {SourceId.PCH: [record("x", source=SourceId.PCH, country="ZZ")]}
        table = geo_table(records)
        assert table.continent_total("Unknown", SourceId.PCH) == 1

    def test_partition_property(self):
        records = {
            SourceId.EURO_IX: [
                record("a", country="DE", city="Berlin"),
                record("b", country="JP", city="Tokyo"),
                record("c", country="ZZ"),
            ],
            SourceId.PCH: [record("d", source=SourceId.PCH, country="US")],
        }
        table = geo_table(records)
        for source, rows in records.items():
            total = sum(
                table.continent_total(c.value, source) for c in Continent
            )
            assert total == table.world_total(source) == len(rows)

    def test_city_level_counts(self):
        records = {
            SourceId.EURO_IX: [
                record("a", country="JP", city="Tokyo"),
                record("b", country="JP", city="Tokyo"),
                record("c", country="JP", city="Osaka"),
            ]
        }
        table = geo_table(records)
        branch = table.counts["Asia Pacific"]["JP"]
        assert branch["Tokyo"] == {"euro-ix": 2}
        assert branch["Osaka"] == {"euro-ix": 1}
        assert branch[""] == {"euro-ix": 3}


class TestFacilityStats:
    def _facility(self, fid, country="US", ixps=(), asns=()):
        return Facility(
            facility_id=fid,
            name=fid.upper(),
            location=Location.make("", country),
            ixp_record_ids=list(ixps),
            network_asns=list(asns),
        )

    def test_orphan_counted(self):
        stats = facility_stats([self._facility("f1")], [])
        assert stats.orphan_facilities == 1

    def test_ixp_at_thirteen_facilities(self):
        ixp = record("big", source=SourceId.PEERING_DB)
        facilities = [self._facility(f"f{i}", ixps=["big"]) for i in range(13)]
        stats = facility_stats(facilities, [ixp])
        assert stats.ixps_at_more_than_ten == 1
        assert stats.ixps_at_more_than_one == 1
        assert stats.facilities_per_ixp["big"] == 13

    def test_country_table(self):
        facilities = [
            self._facility("f1", country="US"),
            self._facility("f2", country="US"),
            self._facility("f3", country="DE"),
        ]
        stats = facility_stats(facilities, [])
        assert stats.facilities_per_country == {"US": 2, "DE": 1}

    def test_edges_union_both_directions(self):
        ixp = record("x", source=SourceId.PEERING_DB, facility_ids=["f1"])
        facilities = [self._facility("f1"), self._facility("f2", ixps=["x"])]
        stats = facility_stats(facilities, [ixp])
        assert stats.facilities_per_ixp["x"] == 2
        assert stats.ixps_without_facilities == 0


class TestExternalComparison:
    def test_partition(self):
        union = LinkSet(source="union", links={("x", 2), ("x", 3)})
        result = compare_external_list("x", {1, 2}, union)
        assert result.common == {2}
        assert result.only_external == {1}
        assert result.only_union == {3}
        assert result.jaccard == pytest.approx(1 / 3)

    def test_full_coverage(self):
        union = LinkSet(source="union", links={("x", 1), ("x", 2), ("x", 3)})
        result = compare_external_list("x", {1, 2}, union)
        assert result.only_external == set()
        assert result.coverage == 1.0

    def test_unknown_ixp(self):
        union = LinkSet(source="union", links={("x", 1)})
        with pytest.raises(UnknownIxp):
            compare_external_list("ghost", {1}, union)

    def test_aggregate_94_percent_coverage(self):
        # 20 IXPs, 50 external links each; 47 covered per IXP -> 94 %
        links = set()
        comparisons = []
        for i in range(20):
            cid = f"top{i}"
            asns = set(range(50))
            covered = set(range(47))
            links = LinkSet(source="union", links={(cid, a) for a in covered})
            comparisons.append(compare_external_list(cid, asns, links))
        aggregate = aggregate_external_coverage(comparisons)
        assert aggregate["coverage"] == pytest.approx(0.94)


def _brute_force_report(labeled_sets):
    """Element-by-element set materialization, no set operators."""
    universe = []
    for _, s in labeled_sets:
        for element in s:
            if element not in universe:
                universe.append(element)
    inter = [e for e in universe if all(e in s for _, s in labeled_sets)]
    union = universe
    sizes = [len(s) for _, s in labeled_sets]
    jac = len(inter) / len(union) if union else 0.0
    ov = len(inter) / min(sizes) if min(sizes) else 0.0
    return len(inter), len(union), jac, ov


@settings(max_examples=300, deadline=None)
@given(
    st.lists(
        st.sets(st.tuples(st.sampled_from(["a", "b", "c"]), st.integers(0, 9)), max_size=30),
        min_size=2,
        max_size=3,
    )
)
def test_similarity_report_matches_brute_force_oracle(link_sets):
    labeled = [(str(i), s) for i, s in enumerate(link_sets)]
    report = similarity_report("g", labeled)
    inter, union, jac, ov = _brute_force_report(labeled)
    assert report.intersection == inter
    assert report.union_size == union
    assert report.jaccard == pytest.approx(jac)
    assert report.overlap == pytest.approx(ov)


class TestUnionLinks:
    def test_union_covers_every_source(self):
        entity = _cross_entity("x", e_asns=[1], p_asns=[2], c_asns=[3])
        union = union_links([entity])
        for source in (SourceId.EURO_IX, SourceId.PEERING_DB, SourceId.PCH):
            assert extract_links([entity], source).links <= union.links
