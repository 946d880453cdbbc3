"""File-based pipeline stages and the union export.

Every stage reads and writes JSON files under the output directory, so
each one is independently runnable and the whole pipeline is resumable.
Output bytes are deterministic: same snapshots, same decision log, same
flags give identical artifacts.
"""

from __future__ import annotations

import hashlib
import json
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

from . import __version__
from .analytics import (
    Grouping,
    aggregate_external_coverage,
    compare_external_list,
    extract_links,
    facility_stats,
    geo_table,
    group_similarity,
    participant_stats,
    status_consistency,
    top_asns,
    union_links,
    write_cdf_csv,
    write_geo_table_csv,
    write_group_similarity_csv,
    write_status_contingency_csv,
    write_table2_csv,
    write_top_asns_csv,
)
from .bgp import completeness_report, link_collector, parse_bgp_summary
from .errors import InputError, IxpkitError, PipelineError
from .ingest import IngestResult, ingest_source
from .linker import (
    CascadeState,
    ManualCandidate,
    ResolveResult,
    merge_siblings,
    resolve_mappings,
    run_cascade,
)
from .model import (
    DATABASE_SOURCES,
    UNION,
    CanonicalIxp,
    Facility,
    IxpStatus,
    Location,
    Participant,
    SourceId,
    SourceRecord,
)
from .review import DecisionLog, ManualCandidateStore


def canonical_json_bytes(data: Any) -> bytes:
    return (
        json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    ).encode("utf-8")


def write_json(path: Path, data: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(canonical_json_bytes(data))


def read_json(path: Path) -> Any:
    if not path.exists():
        raise InputError(f"file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class PipelineConfig:
    snapshots: dict[SourceId, Path] = field(default_factory=dict)
    decisions: Optional[Path] = None
    manual_candidates: Optional[Path] = None
    out_dir: Path = Path("out")
    auto_accept_steps: tuple[int, ...] = ()
    city_threshold: int = 0
    collectors_dir: Optional[Path] = None
    exclude_asns: tuple[int, ...] = ()
    external_lists: Optional[Path] = None
    top_asn_count: int = 10

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise InputError(f"config file not found: {path}")
        if path.suffix == ".toml":
            try:
                import tomllib  # Python 3.11+
            except ModuleNotFoundError:
                import tomli as tomllib
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        else:
            raw = read_json(path)
        base = path.parent

        def respath(value: Optional[str]) -> Optional[Path]:
            if value is None:
                return None
            p = Path(value)
            return p if p.is_absolute() else base / p

        snapshots = {
            SourceId(src): respath(p) for src, p in raw.get("snapshots", {}).items()
        }
        return cls(
            snapshots=snapshots,
            decisions=respath(raw.get("decisions")),
            manual_candidates=respath(raw.get("manual_candidates")),
            out_dir=respath(raw.get("out")) or Path("out"),
            auto_accept_steps=tuple(raw.get("auto_accept_steps", ())),
            city_threshold=int(raw.get("city_threshold", 0)),
            collectors_dir=respath(raw.get("collectors_dir")),
            exclude_asns=tuple(raw.get("exclude_asns", ())),
            external_lists=respath(raw.get("external_lists")),
            top_asn_count=int(raw.get("top_asn_count", 10)),
        )


# --- stage: ingest -----------------------------------------------------------


def stage_ingest(config: PipelineConfig) -> dict[SourceId, IngestResult]:
    if not config.snapshots:
        raise InputError("no snapshots configured")
    results: dict[SourceId, IngestResult] = {}
    for source in DATABASE_SOURCES:
        path = config.snapshots.get(source)
        if path is None:
            continue
        results[source] = ingest_source(path, source)
    if not results:
        raise InputError("no snapshots configured for any known source")
    return results


def write_ingest_outputs(
    out_dir: Path, results: dict[SourceId, IngestResult]
) -> None:
    for source, result in results.items():
        data = {
            "manifest": result.manifest.to_dict(),
            "records": [r.to_dict() for r in result.records],
            "facilities": [f.to_dict() for f in result.facilities],
            "zero_asn_removed": result.zero_asn_removed,
        }
        if result.peeringdb_report is not None:
            data["peeringdb_report"] = result.peeringdb_report.to_dict()
        write_json(out_dir / f"records_{source.value}.json", data)


def load_ingest_outputs(
    out_dir: Path,
) -> tuple[dict[SourceId, list[SourceRecord]], list[Facility]]:
    records: dict[SourceId, list[SourceRecord]] = {}
    facilities: list[Facility] = []
    for source in DATABASE_SOURCES:
        path = out_dir / f"records_{source.value}.json"
        if not path.exists():
            continue
        data = read_json(path)
        records[source] = [SourceRecord.from_dict(d) for d in data["records"]]
        facilities.extend(Facility.from_dict(d) for d in data.get("facilities", ()))
    if not records:
        raise InputError(f"no ingest outputs found under {out_dir}")
    return records, facilities


# --- stage: sibling merge and cascade ---------------------------------------


def stage_merge_siblings(
    records_by_source: dict[SourceId, list[SourceRecord]], decisions
) -> dict[SourceId, Any]:
    out = {}
    for source, records in sorted(records_by_source.items()):
        merged, candidates = merge_siblings(records, decisions)
        out[source] = {"ixps": merged, "candidates": candidates}
    return out


def stage_link(
    records_by_source: dict[SourceId, list[SourceRecord]],
    decisions,
    manuals: Sequence[ManualCandidate],
    auto_accept_steps: Sequence[int],
) -> tuple[dict[SourceId, list[CanonicalIxp]], CascadeState]:
    datasets = {
        source: merge_siblings(records, decisions)[0]
        for source, records in sorted(records_by_source.items())
    }
    cascade = run_cascade(
        datasets, decisions, manuals, auto_accept_steps=auto_accept_steps
    )
    return datasets, cascade


def write_state(
    path: Path,
    records_by_source: dict[SourceId, list[SourceRecord]],
    facilities: Sequence[Facility],
    auto_accept_steps: Sequence[int],
) -> None:
    write_json(
        path,
        {
            "records": {
                source.value: [r.to_dict() for r in records]
                for source, records in sorted(records_by_source.items())
            },
            "facilities": [f.to_dict() for f in facilities],
            "auto_accept_steps": sorted(auto_accept_steps),
        },
    )


def load_state(
    path: Path,
) -> tuple[dict[SourceId, list[SourceRecord]], list[Facility], tuple[int, ...]]:
    data = read_json(path)
    records = {
        SourceId(src): [SourceRecord.from_dict(d) for d in rs]
        for src, rs in data["records"].items()
    }
    facilities = [Facility.from_dict(d) for d in data.get("facilities", ())]
    return records, facilities, tuple(data.get("auto_accept_steps", ()))


def read_decisions(path: Optional[Path]):
    if path is None:
        return []
    return DecisionLog(path).read()


def read_manuals(path: Optional[Path]):
    if path is None:
        return []
    store = ManualCandidateStore(path)
    return store.read()


# --- stage: resolve and export ----------------------------------------------


def _export_entity(entity: CanonicalIxp) -> dict[str, Any]:
    prefixes: dict[str, list[str]] = {}
    for source, values in sorted(entity.prefixes_by_source.items()):
        for value in values:
            prefixes.setdefault(value, []).append(source.value)
    urls: dict[str, list[str]] = {}
    for source, values in sorted(entity.urls_by_source.items()):
        for value in values:
            urls.setdefault(value, []).append(source.value)
    return {
        "canonical_id": entity.canonical_id,
        "members": [{"source": s.value, "record_id": r} for s, r in entity.members],
        "names": [
            {"value": name, "sources": [s.value for s in sources]}
            for name, sources in zip(entity.merged_names, entity.name_sources)
        ],
        "locations": [
            {**loc.to_dict(), "sources": [s.value for s in sources]}
            for loc, sources in zip(entity.merged_locations, entity.location_sources)
        ],
        "status_by_source": {
            s.value: st.value for s, st in sorted(entity.status_by_source.items())
        },
        "prefixes": [
            {"value": value, "sources": sorted(sources)}
            for value, sources in sorted(prefixes.items())
        ],
        "urls": [
            {"value": value, "sources": sorted(sources)}
            for value, sources in sorted(urls.items())
        ],
        "participants_by_source": {
            s.value: sorted(entity.participant_asns(s))
            for s in sorted(entity.participants_by_source)
        },
        "participant_counts": {
            s.value: len(entity.participant_asns(s))
            for s in sorted(entity.participants_by_source)
        },
    }


def export_union(unified: Sequence[CanonicalIxp], out_path: Path) -> None:
    """Write the unified dataset with per-field source provenance.

    Entities are ordered by canonical id and the encoder is canonical, so
    re-exporting the same data produces identical bytes.
    """
    entities = sorted(unified, key=lambda e: e.canonical_id)
    document = {"ixps": [_export_entity(e) for e in entities]}
    try:
        write_json(out_path, document)
    except OSError as exc:
        raise PipelineError(f"cannot write union export: {exc}") from None


def read_union(path: Path) -> list[CanonicalIxp]:
    """Load an exported union document back into canonical entities."""
    data = read_json(path)
    out = []
    for raw in data["ixps"]:
        participants = {
            SourceId(s): frozenset(Participant(asn=a) for a in asns)
            for s, asns in raw["participants_by_source"].items()
        }
        prefixes: dict[SourceId, list[str]] = {}
        for entry in raw.get("prefixes", ()):
            for s in entry["sources"]:
                prefixes.setdefault(SourceId(s), []).append(entry["value"])
        urls: dict[SourceId, list[str]] = {}
        for entry in raw.get("urls", ()):
            for s in entry["sources"]:
                urls.setdefault(SourceId(s), []).append(entry["value"])
        out.append(
            CanonicalIxp(
                canonical_id=raw["canonical_id"],
                members=[(SourceId(m["source"]), m["record_id"]) for m in raw["members"]],
                merged_names=[n["value"] for n in raw["names"]],
                merged_locations=[Location.from_dict(l) for l in raw["locations"]],
                status_by_source={
                    SourceId(s): IxpStatus(st)
                    for s, st in raw["status_by_source"].items()
                },
                participants_by_source=participants,
                name_sources=[
                    tuple(SourceId(s) for s in n["sources"]) for n in raw["names"]
                ],
                location_sources=[
                    tuple(SourceId(s) for s in l["sources"]) for l in raw["locations"]
                ],
                prefixes_by_source={s: tuple(ps) for s, ps in prefixes.items()},
                urls_by_source={s: tuple(us) for s, us in urls.items()},
            )
        )
    return out


def resolve_report_dict(result: ResolveResult) -> dict[str, Any]:
    return {
        "mapping_counts": dict(sorted(result.mapping_counts.items())),
        "active_counts": {
            s.value: result.active_counts[s] for s in sorted(result.active_counts)
        },
        "combinations": result.combination_rows,
        "union_active": result.union_active,
        "union_growth_vs_peeringdb": result.union_growth_vs_peeringdb,
        "unified_count": len(result.unified),
    }


def write_mappings_jsonl(path: Path, result: ResolveResult) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for row in result.mappings:
            fh.write(json.dumps(row.to_dict(), sort_keys=True) + "\n")


# --- stage: analytics --------------------------------------------------------


def stage_analyze(
    unified: Sequence[CanonicalIxp],
    records_by_source: dict[SourceId, list[SourceRecord]],
    facilities: Sequence[Facility],
    resolve_result: ResolveResult,
    out_dir: Path,
    city_threshold: int = 0,
    external_lists: Optional[dict[str, set[int]]] = None,
    top_asn_count: int = 10,
) -> dict[str, Any]:
    out_dir.mkdir(parents=True, exist_ok=True)

    link_sets = {s: extract_links(unified, s) for s in DATABASE_SOURCES}
    union_set = union_links(unified)

    write_table2_csv(out_dir / "table2_intersections.csv", resolve_result.combination_rows)

    ranked = top_asns([link_sets[s] for s in DATABASE_SOURCES], top_asn_count)
    info: dict[int, dict[str, str]] = {}
    for entity in unified:
        for participant in entity.participants_by_source.get(
            SourceId.PEERING_DB, frozenset()
        ):
            if participant.asn is None or participant.asn in info:
                continue
            if participant.name or participant.policy or participant.network_type:
                info[participant.asn] = {
                    "name": participant.name,
                    "policy": participant.policy or "",
                    "network_type": participant.network_type or "",
                }
    write_top_asns_csv(out_dir / "table3_top_asns.csv", ranked, info)

    reports = []
    for grouping in (Grouping.CONTINENT, Grouping.SIZE_BUCKET, Grouping.TOTAL):
        reports.extend(group_similarity(link_sets, grouping, unified))
    write_group_similarity_csv(out_dir / "table4_group_similarity.csv", reports)

    raw_geo = geo_table(records_by_source)
    write_geo_table_csv(out_dir / "geo_table.csv", raw_geo, city_threshold)

    consistency = status_consistency(unified)
    write_status_contingency_csv(out_dir / "status_contingency.csv", consistency)

    stats = {s: participant_stats(unified, s) for s in DATABASE_SOURCES}
    write_cdf_csv(
        out_dir / "cdf_members_per_ixp.csv",
        {s.value: stats[s].members_per_ixp_cdf for s in stats},
    )
    write_cdf_csv(
        out_dir / "cdf_ixps_per_asn.csv",
        {s.value: stats[s].ixps_per_asn_cdf for s in stats},
    )

    summary: dict[str, Any] = {
        "participant_stats": {
            s.value: {
                "ixps_present": stats[s].ixps_present,
                "zero_participant_ixps": stats[s].zero_participant_ixps,
                "mean": stats[s].mean,
                "median": stats[s].median,
                "asn_count": stats[s].asn_count,
                "asns_at_more_than_one": stats[s].asns_at_more_than(1),
                "asns_at_more_than_ten": stats[s].asns_at_more_than(10),
            }
            for s in stats
        },
        "status_consistency": {
            "pairs_total": consistency.pairs_total,
            "consistent": consistency.consistent,
            "fraction": consistency.fraction,
        },
        "link_counts": {
            **{s.value: len(link_sets[s].links) for s in link_sets},
            UNION: len(union_set.links),
        },
    }

    if facilities:
        fac = facility_stats(
            facilities, records_by_source.get(SourceId.PEERING_DB, [])
        )
        summary["facilities"] = {
            "count": fac.facility_count,
            "orphans": fac.orphan_facilities,
            "with_multiple_ixps": fac.facilities_with_multiple_ixps,
            "ixps_at_more_than_one": fac.ixps_at_more_than_one,
            "ixps_at_more_than_ten": fac.ixps_at_more_than_ten,
            "ixps_without_facilities": fac.ixps_without_facilities,
            "per_country": dict(sorted(fac.facilities_per_country.items())),
        }

    if external_lists:
        comparisons = []
        per_ixp = {}
        for cid, asns in sorted(external_lists.items()):
            comparison = compare_external_list(cid, asns, union_set)
            comparisons.append(comparison)
            per_ixp[cid] = {
                "common": len(comparison.common),
                "only_external": len(comparison.only_external),
                "only_union": len(comparison.only_union),
                "jaccard": comparison.jaccard,
                "coverage": comparison.coverage,
            }
        summary["external_comparison"] = {
            "per_ixp": per_ixp,
            "aggregate": aggregate_external_coverage(comparisons),
        }

    write_json(out_dir / "analytics_summary.json", summary)
    return summary


def load_external_lists(path: Path) -> dict[str, set[int]]:
    raw = read_json(path)
    return {cid: set(asns) for cid, asns in raw.items()}


# --- stage: bgp validation ----------------------------------------------------


def stage_bgp_validate(
    collectors_dir: Path,
    unified: Sequence[CanonicalIxp],
    out_dir: Path,
    jaccard_threshold: float = 0.05,
    ambiguity_margin: float = 0.01,
    exclude_asns: Sequence[int] = (),
) -> dict[str, Any]:
    if not collectors_dir.is_dir():
        raise InputError(f"collector directory not found: {collectors_dir}")
    paths = sorted(collectors_dir.glob("*.json"))
    if not paths:
        raise InputError(f"no collector files under {collectors_dir}")

    links = []
    failures = []
    for path in paths:
        snapshot = parse_bgp_summary(path)
        try:
            links.append(
                link_collector(
                    snapshot,
                    unified,
                    jaccard_threshold=jaccard_threshold,
                    ambiguity_margin=ambiguity_margin,
                )
            )
        except PipelineError as exc:
            failures.append({"collector_id": snapshot.collector_id, "error": str(exc)})

    if not links:
        raise PipelineError("no collector could be linked to any IXP")

    link_sets = [union_links(unified)] + [
        extract_links(unified, s) for s in DATABASE_SOURCES
    ]
    report = completeness_report(links, link_sets, exclude_asns=exclude_asns)

    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(
        out_dir / "collector_links.json",
        {"links": [l.to_dict() for l in links], "failures": failures},
    )
    write_json(out_dir / "bgp_completeness.json", report.to_dict())

    import csv

    with open(out_dir / "table5_bgp_completeness.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["dataset", "links", "jaccard_pct", "overlap_pct", "bgp_coverage_pct", "db_coverage_pct"]
        )
        from .analytics import percent

        for row in report.rows:
            writer.writerow(
                [
                    row.dataset,
                    row.link_count,
                    percent(row.jaccard),
                    percent(row.overlap),
                    percent(row.bgp_coverage),
                    percent(row.db_coverage),
                ]
            )
    return report.to_dict()


# --- full pipeline -------------------------------------------------------------


@contextmanager
def stage_marker(name: str):
    """Tag toolkit errors with the stage they escaped from."""
    try:
        yield
    except IxpkitError as exc:
        if not getattr(exc, "stage", None):
            exc.stage = name  # type: ignore[attr-defined]
        raise


def run_pipeline(config: PipelineConfig) -> dict[str, Any]:
    """Ingest, sanitize, merge, cascade, resolve, analyze, export.

    Returns the run manifest (also written to the output directory).
    """
    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    stage_counts: dict[str, Any] = {}
    inputs: dict[str, str] = {}

    with stage_marker("ingest"):
        results = stage_ingest(config)
        for source, result in results.items():
            inputs[str(config.snapshots[source])] = sha256_file(config.snapshots[source])
        write_ingest_outputs(out_dir, results)
    stage_counts["ingest"] = {
        source.value: result.manifest.record_count for source, result in results.items()
    }

    records_by_source = {s: r.records for s, r in results.items()}
    facilities = [f for r in results.values() for f in r.facilities]

    decisions = read_decisions(config.decisions)
    manuals = read_manuals(config.manual_candidates)
    if config.decisions is not None:
        inputs[str(config.decisions)] = (
            sha256_file(config.decisions) if config.decisions.exists() else ""
        )

    with stage_marker("link"):
        datasets, cascade = stage_link(
            records_by_source, decisions, manuals, config.auto_accept_steps
        )
        write_state(
            out_dir / "state.json", records_by_source, facilities, config.auto_accept_steps
        )
        write_json(out_dir / "cascade.json", cascade.to_dict())
    stage_counts["siblings"] = {
        source.value: len(entities) for source, entities in datasets.items()
    }
    stage_counts["cascade"] = {
        label: dict(sorted(outcome.accepted_by_step.items()))
        for label, outcome in sorted(cascade.pairs.items())
    }

    with stage_marker("resolve"):
        result = resolve_mappings(cascade, decisions)
        write_json(out_dir / "resolve_report.json", resolve_report_dict(result))
        write_mappings_jsonl(out_dir / "mappings.jsonl", result)
        export_union(result.unified, out_dir / "union.json")
    stage_counts["resolve"] = {
        "unified": len(result.unified),
        "mappings": sum(result.mapping_counts.values()),
    }

    with stage_marker("analyze"):
        external = (
            load_external_lists(config.external_lists) if config.external_lists else None
        )
        stage_analyze(
            result.unified,
            records_by_source,
            facilities,
            result,
            out_dir,
            city_threshold=config.city_threshold,
            external_lists=external,
            top_asn_count=config.top_asn_count,
        )
    stage_counts["analyze"] = {"reports": 7}

    if config.collectors_dir is not None:
        with stage_marker("bgp-validate"):
            bgp = stage_bgp_validate(
                config.collectors_dir,
                result.unified,
                out_dir,
                exclude_asns=config.exclude_asns,
            )
        stage_counts["bgp_validate"] = {
            "collectors_linked": bgp["collectors_linked"],
            "bgp_links": bgp["bgp_link_count"],
        }

    manifest = {
        "inputs": dict(sorted(inputs.items())),
        "stage_counts": stage_counts,
        "versions": {
            "ixpkit": __version__,
            "python": sys.version.split()[0],
        },
    }
    write_json(out_dir / "run_manifest.json", manifest)
    return manifest
