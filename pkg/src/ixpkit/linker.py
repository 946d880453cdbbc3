"""Sibling merging and cross-dataset candidate generation.

Linking runs as a cascade of name-transformation schemes. For each pair
of datasets, candidates are proposed at the first scheme under which two
IXPs share a transformed name and a country; a human verdict (or the
opt-in auto-accept for identical-name/city matches) settles each
candidate, and accepted endpoints leave the working sets before the next
scheme runs. The whole cascade is a pure function of the datasets and
the decision log, so replaying it after new decisions is cheap and
byte-identical.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Optional, Sequence

from .errors import InputError, PipelineError
from .model import (
    DATABASE_SOURCES,
    CandidateState,
    CanonicalIxp,
    IxpStatus,
    LocationEvidence,
    MappingCandidate,
    MappingDecision,
    MappingScope,
    SourceId,
    SourceRecord,
    Verdict,
    derive_canonical_id,
)
from .regions import UNKNOWN_COUNTRY


class EmptyName(InputError):
    pass


class ConflictingDecisions(PipelineError):
    """Two contradictory verdicts on one pair that cannot be ordered."""


class NameScheme(Enum):
    IDENTITY = 1
    LOWERCASE = 2
    TRUNCATE_2_WORDS = 3
    TRUNCATE_1_WORD = 4
    STRIP_NONWORD = 5
    MANUAL = 6

    @property
    def step(self) -> int:
        return self.value


CASCADE_SCHEMES = (
    NameScheme.IDENTITY,
    NameScheme.LOWERCASE,
    NameScheme.TRUNCATE_2_WORDS,
    NameScheme.TRUNCATE_1_WORD,
    NameScheme.STRIP_NONWORD,
)

_WORD_RUN = re.compile(r"\w+")
_NON_WORD = re.compile(r"\W+")

_SOURCE_ORDER = {SourceId.EURO_IX: 0, SourceId.PEERING_DB: 1, SourceId.PCH: 2}

CROSS_PAIRS: tuple[tuple[SourceId, SourceId], ...] = (
    (SourceId.EURO_IX, SourceId.PEERING_DB),
    (SourceId.EURO_IX, SourceId.PCH),
    (SourceId.PEERING_DB, SourceId.PCH),
)


def pair_label(left: SourceId, right: SourceId) -> str:
    return f"{left.value}|{right.value}"


def normalize_name(name: str, scheme: NameScheme) -> str:
    """Apply one name-transformation scheme.

    Word tokens are maximal runs of word characters (letters, digits,
    underscore); punctuation and whitespace both delimit, so "SIX.SK"
    truncates to "six" at the first word boundary.
    """
    if not name:
        raise EmptyName("cannot normalize an empty name")
    if scheme is NameScheme.MANUAL:
        raise ValueError("MANUAL is not a name transformation")
    if scheme is NameScheme.IDENTITY:
        return name
    if scheme is NameScheme.LOWERCASE:
        return name.lower()
    if scheme is NameScheme.TRUNCATE_2_WORDS:
        return " ".join(_WORD_RUN.findall(name)[:2]).lower()
    if scheme is NameScheme.TRUNCATE_1_WORD:
        return " ".join(_WORD_RUN.findall(name)[:1]).lower()
    if scheme is NameScheme.STRIP_NONWORD:
        return _NON_WORD.sub("", name).lower()
    raise ValueError(f"unhandled scheme {scheme}")


def _combined_transform(name: str, words: int) -> str:
    # strip-nonword applied after truncation; used for step-6 suggestions
    return "".join(_WORD_RUN.findall(name)[:words]).lower()


class _UnionFind:
    def __init__(self) -> None:
        self._parent: dict[str, str] = {}

    def add(self, item: str) -> None:
        self._parent.setdefault(item, item)

    def find(self, item: str) -> str:
        parent = self._parent
        root = item
        while parent[root] != root:
            root = parent[root]
        while parent[item] != root:
            parent[item], item = root, parent[item]
        return root

    def union(self, a: str, b: str) -> None:
        self.add(a)
        self.add(b)
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self._parent[max(ra, rb)] = min(ra, rb)

    def groups(self) -> list[list[str]]:
        by_root: dict[str, list[str]] = {}
        for item in self._parent:
            by_root.setdefault(self.find(item), []).append(item)
        return [sorted(members) for _, members in sorted(by_root.items())]


_STATUS_PRIORITY = [
    IxpStatus.ACTIVE,
    IxpStatus.UNDER_CONSTRUCTION,
    IxpStatus.PLANNED,
    IxpStatus.DEPRECATED,
    IxpStatus.DEFUNCT,
    IxpStatus.NOT_AN_EXCHANGE,
    IxpStatus.UNKNOWN,
]


def _combine_statuses(statuses: Iterable[IxpStatus]) -> IxpStatus:
    return min(statuses, key=_STATUS_PRIORITY.index)


def _dedup_names(names: Iterable[str]) -> list[str]:
    seen: set[str] = set()
    out: list[str] = []
    for name in names:
        key = name.lower()
        if key not in seen:
            seen.add(key)
            out.append(name)
    return out


def record_as_canonical(record: SourceRecord) -> CanonicalIxp:
    """Wrap a single source record as a singleton canonical entity."""
    member = (record.source, record.record_id)
    names = _dedup_names(record.names)
    locations = list(dict.fromkeys(record.locations))
    return CanonicalIxp(
        canonical_id=derive_canonical_id([member]),
        members=[member],
        merged_names=names,
        merged_locations=locations,
        status_by_source={record.source: record.status},
        participants_by_source={record.source: frozenset(record.participants)},
        name_sources=[(record.source,)] * len(names),
        location_sources=[(record.source,)] * len(locations),
        prefixes_by_source=(
            {record.source: tuple(record.prefixes)} if record.prefixes else {}
        ),
        urls_by_source={record.source: (record.url,)} if record.url else {},
    )


def merge_canonical(entities: Sequence[CanonicalIxp]) -> CanonicalIxp:
    """Merge canonical entities into one, unioning every field.

    Per-source statuses collapse by "most alive wins" so that one active
    sibling keeps the merged entity active. Name and location provenance
    sets are unioned across contributing entities.
    """
    members: list = []
    names: list[str] = []
    name_sources: dict[str, set[SourceId]] = {}
    locations: list = []
    location_sources: dict[Any, set[SourceId]] = {}
    status_lists: dict[SourceId, list[IxpStatus]] = {}
    participants: dict[SourceId, set] = {}
    prefixes: dict[SourceId, list[str]] = {}
    urls: dict[SourceId, list[str]] = {}
    for entity in sorted(entities, key=lambda e: e.canonical_id):
        members.extend(entity.members)
        for name, sources in zip(entity.merged_names, entity.name_sources):
            key = name.lower()
            if key not in name_sources:
                names.append(name)
                name_sources[key] = set()
            name_sources[key].update(sources)
        for location, sources in zip(entity.merged_locations, entity.location_sources):
            if location not in location_sources:
                locations.append(location)
                location_sources[location] = set()
            location_sources[location].update(sources)
        for source, status in entity.status_by_source.items():
            status_lists.setdefault(source, []).append(status)
        for source, parts in entity.participants_by_source.items():
            participants.setdefault(source, set()).update(parts)
        for source, values in entity.prefixes_by_source.items():
            bucket = prefixes.setdefault(source, [])
            bucket.extend(v for v in values if v not in bucket)
        for source, values in entity.urls_by_source.items():
            bucket = urls.setdefault(source, [])
            bucket.extend(v for v in values if v not in bucket)
    members = sorted(set(members), key=lambda m: (m[0].value, m[1]))
    return CanonicalIxp(
        canonical_id=derive_canonical_id(members),
        members=members,
        merged_names=names,
        merged_locations=locations,
        status_by_source={s: _combine_statuses(sts) for s, sts in status_lists.items()},
        participants_by_source={s: frozenset(ps) for s, ps in participants.items()},
        name_sources=[
            tuple(sorted(name_sources[name.lower()])) for name in names
        ],
        location_sources=[
            tuple(sorted(location_sources[loc])) for loc in locations
        ],
        prefixes_by_source={s: tuple(ps) for s, ps in prefixes.items()},
        urls_by_source={s: tuple(us) for s, us in urls.items()},
    )


def resolve_decision_log(
    decisions: Sequence[MappingDecision],
) -> dict[str, MappingDecision]:
    """Last decision per candidate wins; ties on timestamp go to log order."""
    resolved: dict[str, tuple[int, MappingDecision]] = {}
    for index, decision in enumerate(decisions):
        current = resolved.get(decision.candidate_id)
        if current is None:
            resolved[decision.candidate_id] = (index, decision)
            continue
        _, existing = current
        if decision.timestamp >= existing.timestamp:
            resolved[decision.candidate_id] = (index, decision)
    return {cid: decision for cid, (_, decision) in resolved.items()}


def _check_pair_conflicts(
    candidates_by_pair: dict[tuple[str, str], list[MappingCandidate]],
    resolved: dict[str, MappingDecision],
) -> None:
    for pair, cands in candidates_by_pair.items():
        decided = [resolved[c.candidate_id] for c in cands if c.candidate_id in resolved]
        by_time: dict[Any, set[Verdict]] = {}
        for decision in decided:
            by_time.setdefault(decision.timestamp, set()).add(decision.verdict)
        for timestamp, verdicts in by_time.items():
            if len(verdicts) > 1:
                raise ConflictingDecisions(
                    f"pair {pair} has contradictory verdicts at {timestamp}"
                )


@dataclass
class _Matchers:
    """Cached normalized names per entity and scheme."""

    names: dict[str, dict[NameScheme, set[str]]] = field(default_factory=dict)

    def for_entity(self, entity: CanonicalIxp, scheme: NameScheme) -> set[str]:
        per_scheme = self.names.setdefault(entity.canonical_id, {})
        if scheme not in per_scheme:
            values = set()
            for name in entity.merged_names:
                if not name:
                    continue
                value = normalize_name(name, scheme)
                if value:
                    values.add(value)
            per_scheme[scheme] = values
        return per_scheme[scheme]


def _location_evidence(left: CanonicalIxp, right: CanonicalIxp) -> LocationEvidence:
    if left.cities() & right.cities():
        return LocationEvidence.CITY_MATCH
    shared = left.countries() & right.countries()
    if shared - {UNKNOWN_COUNTRY}:
        return LocationEvidence.COUNTRY_MATCH
    return LocationEvidence.NONE


def _match_pairs(
    left_entities: Sequence[CanonicalIxp],
    right_entities: Sequence[CanonicalIxp],
    scheme: NameScheme,
    matchers: _Matchers,
    scope: MappingScope,
) -> list[MappingCandidate]:
    buckets: dict[str, list[CanonicalIxp]] = {}
    for entity in right_entities:
        for value in matchers.for_entity(entity, scheme):
            buckets.setdefault(value, []).append(entity)

    found: dict[tuple[str, str], tuple[str, CanonicalIxp, CanonicalIxp]] = {}
    for left in left_entities:
        for value in matchers.for_entity(left, scheme):
            for right in buckets.get(value, ()):
                if left.canonical_id == right.canonical_id:
                    continue
                if not (left.countries() & right.countries()):
                    continue
                key = (left.canonical_id, right.canonical_id)
                if key not in found or value < found[key][0]:
                    found[key] = (value, left, right)

    candidates = []
    for (left_id, right_id), (value, left, right) in found.items():
        candidates.append(
            MappingCandidate.make(
                left=left_id,
                right=right_id,
                scope=scope,
                step=scheme.step,
                transformed_name=value,
                location_evidence=_location_evidence(left, right),
            )
        )
    candidates.sort(key=lambda c: (c.transformed_name, c.left, c.right))
    return candidates


@dataclass
class WorkingSet:
    """Entities of one source still unmapped for a given source pair."""

    source: SourceId
    entities: dict[str, CanonicalIxp]

    @property
    def ids(self) -> set[str]:
        return set(self.entities)

    def remove(self, canonical_id: str) -> None:
        self.entities.pop(canonical_id, None)


def generate_candidates(
    left: WorkingSet, right: WorkingSet, scheme: NameScheme
) -> list[MappingCandidate]:
    """All cross-dataset pairs matching under one scheme.

    Orientation follows the fixed source order (Euro-IX < PeeringDB <
    PCH) regardless of argument order; output is sorted by
    (transformed_name, left id, right id).
    """
    if scheme is NameScheme.MANUAL:
        raise ValueError("manual candidates are created explicitly, not generated")
    if left.source is right.source:
        raise ValueError("cross-dataset candidates need two different sources")
    if _SOURCE_ORDER[left.source] > _SOURCE_ORDER[right.source]:
        left, right = right, left
    return _match_pairs(
        sorted(left.entities.values(), key=lambda e: e.canonical_id),
        sorted(right.entities.values(), key=lambda e: e.canonical_id),
        scheme,
        _Matchers(),
        MappingScope.CROSS,
    )


def merge_siblings(
    records: Sequence[SourceRecord],
    decisions: Sequence[MappingDecision],
) -> tuple[list[CanonicalIxp], list[MappingCandidate]]:
    """Merge same-source records that describe one IXP.

    Candidates are pairs matching on (any cascade scheme over all names
    and aliases) plus a shared country, tagged with the first scheme that
    matched. Accepted candidates merge transitively; everything else
    stays a singleton.
    """
    sources = {record.source for record in records}
    if len(sources) > 1:
        raise ValueError(f"sibling merging works per source, got {sorted(sources)}")

    singles = {record.record_id: record_as_canonical(record) for record in records}
    by_id = {entity.canonical_id: entity for entity in singles.values()}
    # deterministic orientation inside one source: by record id
    ordered = [singles[rid] for rid in sorted(singles)]
    matchers = _Matchers()

    candidates: list[MappingCandidate] = []
    proposed: set[tuple[str, str]] = set()
    for scheme in CASCADE_SCHEMES:
        for cand in _match_pairs(ordered, ordered, scheme, matchers, MappingScope.SIBLING):
            left_rid = by_id[cand.left].members[0][1]
            right_rid = by_id[cand.right].members[0][1]
            if left_rid > right_rid:
                continue  # keep one orientation of each pair
            if (cand.left, cand.right) in proposed:
                continue
            proposed.add((cand.left, cand.right))
            candidates.append(cand)

    resolved = resolve_decision_log(decisions)
    by_pair: dict[tuple[str, str], list[MappingCandidate]] = {}
    for cand in candidates:
        by_pair.setdefault(cand.pair(), []).append(cand)
    _check_pair_conflicts(by_pair, resolved)

    uf = _UnionFind()
    for entity in singles.values():
        uf.add(entity.canonical_id)
    for cand in candidates:
        decision = resolved.get(cand.candidate_id)
        if decision is None:
            continue
        if decision.verdict is Verdict.ACCEPT:
            cand.state = CandidateState.ACCEPTED
            uf.union(cand.left, cand.right)
        else:
            cand.state = CandidateState.REJECTED

    merged = [merge_canonical([by_id[m] for m in group]) for group in uf.groups()]
    merged.sort(key=lambda e: e.canonical_id)
    return merged, candidates


@dataclass
class PairOutcome:
    """Cascade result for one source pair.

    working_sizes_by_step records (left, right) working-set sizes after
    each step, so monotonic shrinkage stays observable.
    """

    left_source: SourceId
    right_source: SourceId
    accepted_by_step: dict[int, int] = field(default_factory=dict)
    candidates: list[MappingCandidate] = field(default_factory=list)
    working_left: set[str] = field(default_factory=set)
    working_right: set[str] = field(default_factory=set)
    accepted_pairs: list[tuple[str, str, int]] = field(default_factory=list)
    working_sizes_by_step: dict[int, tuple[int, int]] = field(default_factory=dict)

    @property
    def label(self) -> str:
        return pair_label(self.left_source, self.right_source)

    def pending(self) -> list[MappingCandidate]:
        return [c for c in self.candidates if c.state is CandidateState.PENDING]

    def to_dict(self) -> dict[str, Any]:
        return {
            "left_source": self.left_source.value,
            "right_source": self.right_source.value,
            "accepted_by_step": {str(k): v for k, v in sorted(self.accepted_by_step.items())},
            "candidates": [c.to_dict() for c in self.candidates],
            "working_left": sorted(self.working_left),
            "working_right": sorted(self.working_right),
            "accepted_pairs": [[l, r, s] for l, r, s in self.accepted_pairs],
            "working_sizes_by_step": {
                str(k): list(v) for k, v in sorted(self.working_sizes_by_step.items())
            },
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PairOutcome":
        return cls(
            left_source=SourceId(data["left_source"]),
            right_source=SourceId(data["right_source"]),
            accepted_by_step={int(k): v for k, v in data["accepted_by_step"].items()},
            candidates=[MappingCandidate.from_dict(d) for d in data["candidates"]],
            working_left=set(data["working_left"]),
            working_right=set(data["working_right"]),
            accepted_pairs=[(l, r, s) for l, r, s in data["accepted_pairs"]],
            working_sizes_by_step={
                int(k): (v[0], v[1])
                for k, v in data.get("working_sizes_by_step", {}).items()
            },
        )


@dataclass
class CascadeState:
    """Everything the cascade produced, replayable and serializable."""

    pairs: dict[str, PairOutcome]
    entities: dict[str, CanonicalIxp]
    datasets: dict[SourceId, list[str]]
    unmatched_decision_ids: list[str] = field(default_factory=list)
    auto_accept_steps: tuple[int, ...] = ()

    def all_candidates(self) -> dict[str, MappingCandidate]:
        out: dict[str, MappingCandidate] = {}
        for outcome in self.pairs.values():
            for cand in outcome.candidates:
                out[cand.candidate_id] = cand
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "pairs": {label: outcome.to_dict() for label, outcome in sorted(self.pairs.items())},
            "entities": {
                cid: entity.to_dict() for cid, entity in sorted(self.entities.items())
            },
            "datasets": {
                source.value: sorted(ids) for source, ids in sorted(self.datasets.items())
            },
            "unmatched_decision_ids": sorted(self.unmatched_decision_ids),
            "auto_accept_steps": sorted(self.auto_accept_steps),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CascadeState":
        return cls(
            pairs={k: PairOutcome.from_dict(v) for k, v in data["pairs"].items()},
            entities={k: CanonicalIxp.from_dict(v) for k, v in data["entities"].items()},
            datasets={SourceId(k): list(v) for k, v in data["datasets"].items()},
            unmatched_decision_ids=list(data["unmatched_decision_ids"]),
            auto_accept_steps=tuple(data["auto_accept_steps"]),
        )


@dataclass(frozen=True)
class ManualCandidate:
    """A curator-created pairing (heuristic step 6)."""

    left: str
    right: str

    def to_dict(self) -> dict[str, Any]:
        return {"left": self.left, "right": self.right}


def run_cascade(
    datasets: dict[SourceId, list[CanonicalIxp]],
    decision_log: Sequence[MappingDecision],
    manual_candidates: Sequence[ManualCandidate] = (),
    auto_accept_steps: Iterable[int] = (),
) -> CascadeState:
    """Run schemes 1-5 over every source pair, consuming the decision log.

    Candidates are proposed once per pair at the first matching scheme;
    accepted endpoints leave the working sets before the next scheme.
    After scheme 5, combined-transform suggestions plus any curator
    pairings are emitted at step 6 (never auto-accepted).
    """
    auto_steps = frozenset(auto_accept_steps) - {6}
    resolved = resolve_decision_log(decision_log)
    matchers = _Matchers()
    entities: dict[str, CanonicalIxp] = {}
    for group in datasets.values():
        for entity in group:
            entities[entity.canonical_id] = entity

    matched_ids = set()
    pair_outcomes: dict[str, PairOutcome] = {}
    for left_source, right_source in CROSS_PAIRS:
        left_all = sorted(
            (e for e in datasets.get(left_source, ())), key=lambda e: e.canonical_id
        )
        right_all = sorted(
            (e for e in datasets.get(right_source, ())), key=lambda e: e.canonical_id
        )
        outcome = PairOutcome(
            left_source=left_source,
            right_source=right_source,
            working_left={e.canonical_id for e in left_all},
            working_right={e.canonical_id for e in right_all},
        )
        proposed: set[tuple[str, str]] = set()

        def admit(cand: MappingCandidate, step: int, auto_ok: bool) -> None:
            outcome.candidates.append(cand)
            proposed.add(cand.pair())
            decision = resolved.get(cand.candidate_id)
            if decision is not None:
                matched_ids.add(cand.candidate_id)
                accepted = decision.verdict is Verdict.ACCEPT
                cand.state = (
                    CandidateState.ACCEPTED if accepted else CandidateState.REJECTED
                )
            elif auto_ok and cand.location_evidence is LocationEvidence.CITY_MATCH:
                cand.state = CandidateState.AUTO_ACCEPTED
                accepted = True
            else:
                accepted = False
            if accepted:
                outcome.working_left.discard(cand.left)
                outcome.working_right.discard(cand.right)
                outcome.accepted_by_step[step] = outcome.accepted_by_step.get(step, 0) + 1
                outcome.accepted_pairs.append((cand.left, cand.right, step))

        for scheme in CASCADE_SCHEMES:
            lefts = [entities[cid] for cid in sorted(outcome.working_left)]
            rights = [entities[cid] for cid in sorted(outcome.working_right)]
            step_cands = _match_pairs(lefts, rights, scheme, matchers, MappingScope.CROSS)
            for cand in step_cands:
                if cand.pair() in proposed:
                    continue
                admit(cand, scheme.step, scheme.step in auto_steps)
            outcome.working_sizes_by_step[scheme.step] = (
                len(outcome.working_left),
                len(outcome.working_right),
            )

        # step 6a: combined-transform suggestions over what is left
        combo_cands: list[MappingCandidate] = []
        for words in (2, 1):
            buckets: dict[str, list[CanonicalIxp]] = {}
            for cid in sorted(outcome.working_right):
                for name in entities[cid].merged_names:
                    value = _combined_transform(name, words)
                    if value:
                        buckets.setdefault(value, []).append(entities[cid])
            for cid in sorted(outcome.working_left):
                left_entity = entities[cid]
                for name in left_entity.merged_names:
                    value = _combined_transform(name, words)
                    if not value:
                        continue
                    for right_entity in buckets.get(value, ()):
                        pair = (cid, right_entity.canonical_id)
                        if pair in proposed or any(c.pair() == pair for c in combo_cands):
                            continue
                        if not (left_entity.countries() & right_entity.countries()):
                            continue
                        combo_cands.append(
                            MappingCandidate.make(
                                left=cid,
                                right=right_entity.canonical_id,
                                scope=MappingScope.CROSS,
                                step=6,
                                transformed_name=value,
                                location_evidence=_location_evidence(
                                    left_entity, right_entity
                                ),
                            )
                        )
        combo_cands.sort(key=lambda c: (c.transformed_name, c.left, c.right))
        for cand in combo_cands:
            admit(cand, 6, auto_ok=False)

        # step 6b: curator-created pairings for this source pair
        for manual in manual_candidates:
            left_entity = entities.get(manual.left)
            right_entity = entities.get(manual.right)
            if left_entity is None or right_entity is None:
                continue
            sources = (
                next(iter(left_entity.sources())),
                next(iter(right_entity.sources())),
            )
            if set(sources) != {left_source, right_source}:
                continue
            if sources[0] is not left_source:
                left_entity, right_entity = right_entity, left_entity
            pair = (left_entity.canonical_id, right_entity.canonical_id)
            if pair in proposed:
                continue
            cand = MappingCandidate.make(
                left=pair[0],
                right=pair[1],
                scope=MappingScope.CROSS,
                step=6,
                transformed_name="",
                location_evidence=_location_evidence(left_entity, right_entity),
            )
            admit(cand, 6, auto_ok=False)

        outcome.working_sizes_by_step[6] = (
            len(outcome.working_left),
            len(outcome.working_right),
        )

        by_pair: dict[tuple[str, str], list[MappingCandidate]] = {}
        for cand in outcome.candidates:
            by_pair.setdefault(cand.pair(), []).append(cand)
        _check_pair_conflicts(by_pair, resolved)
        pair_outcomes[outcome.label] = outcome

    unmatched = sorted(set(resolved) - matched_ids)
    return CascadeState(
        pairs=pair_outcomes,
        entities=entities,
        datasets={s: sorted(e.canonical_id for e in es) for s, es in datasets.items()},
        unmatched_decision_ids=unmatched,
        auto_accept_steps=tuple(sorted(auto_steps)),
    )


@dataclass
class MappingExportRow:
    """One accepted cross-dataset mapping, as published."""

    left_source: SourceId
    left_record_ids: list[str]
    right_source: SourceId
    right_record_ids: list[str]
    heuristic_step: int
    decided_by: str
    decided_at: Optional[str]

    def to_dict(self) -> dict[str, Any]:
        return {
            "left_source": self.left_source.value,
            "left_record_ids": list(self.left_record_ids),
            "right_source": self.right_source.value,
            "right_record_ids": list(self.right_record_ids),
            "heuristic_step": self.heuristic_step,
            "decided_by": self.decided_by,
            "decided_at": self.decided_at,
        }


@dataclass
class ResolveResult:
    unified: list[CanonicalIxp]
    mapping_counts: dict[str, int]  # pair label -> accepted mappings
    active_counts: dict[SourceId, int]
    combination_rows: list[dict[str, Any]]  # active-IXP rows per dataset combination
    union_active: int
    union_growth_vs_peeringdb: Optional[float]
    mappings: list[MappingExportRow]


def resolve_mappings(
    cascade: CascadeState, decision_log: Sequence[MappingDecision]
) -> ResolveResult:
    """Merge accepted cross-dataset candidates into the unified dataset.

    Acceptance is transitive: chains across pairs collapse into one
    entity spanning up to three sources. The result also carries the
    active-IXP intersection/union table for every dataset combination.
    """
    from .analytics import jaccard, overlap  # local import, no cycle

    resolved = resolve_decision_log(decision_log)
    uf = _UnionFind()
    for cid in cascade.entities:
        uf.add(cid)

    mapping_counts: dict[str, int] = {}
    mappings: list[MappingExportRow] = []
    for label, outcome in sorted(cascade.pairs.items()):
        count = 0
        for cand in outcome.candidates:
            if cand.state not in (CandidateState.ACCEPTED, CandidateState.AUTO_ACCEPTED):
                continue
            count += 1
            uf.union(cand.left, cand.right)
            decision = resolved.get(cand.candidate_id)
            left_entity = cascade.entities[cand.left]
            right_entity = cascade.entities[cand.right]
            mappings.append(
                MappingExportRow(
                    left_source=outcome.left_source,
                    left_record_ids=sorted(r for _, r in left_entity.members),
                    right_source=outcome.right_source,
                    right_record_ids=sorted(r for _, r in right_entity.members),
                    heuristic_step=cand.heuristic_step,
                    decided_by=decision.reviewer if decision else "auto",
                    decided_at=decision.to_dict()["timestamp"] if decision else None,
                )
            )
        mapping_counts[label] = count

    unified = [
        merge_canonical([cascade.entities[cid] for cid in group])
        for group in uf.groups()
    ]
    unified.sort(key=lambda e: e.canonical_id)

    active_ids: dict[SourceId, set[str]] = {s: set() for s in DATABASE_SOURCES}
    for entity in unified:
        for source in DATABASE_SOURCES:
            if entity.active_in(source):
                active_ids[source].add(entity.canonical_id)

    combos: list[tuple[SourceId, ...]] = [
        DATABASE_SOURCES,
        (SourceId.EURO_IX, SourceId.PEERING_DB),
        (SourceId.EURO_IX, SourceId.PCH),
        (SourceId.PEERING_DB, SourceId.PCH),
    ]
    rows = []
    for combo in combos:
        sets = [active_ids[s] for s in combo]
        inter = set.intersection(*sets)
        union = set.union(*sets)
        rows.append(
            {
                "sources": [s.value for s in combo],
                "intersection": len(inter),
                "union": len(union),
                "jaccard": jaccard(*sets),
                "overlap": overlap(*sets),
            }
        )

    union_active = len(set.union(*(active_ids[s] for s in DATABASE_SOURCES)))
    pdb_active = len(active_ids[SourceId.PEERING_DB])
    growth = union_active / pdb_active - 1.0 if pdb_active else None

    return ResolveResult(
        unified=unified,
        mapping_counts=mapping_counts,
        active_counts={s: len(ids) for s, ids in active_ids.items()},
        combination_rows=rows,
        union_active=union_active,
        union_growth_vs_peeringdb=growth,
        mappings=mappings,
    )
