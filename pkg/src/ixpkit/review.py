"""Candidate review: append-only decision storage and the HTTP API.

Decisions and curator-created candidates are JSON Lines files; nothing
else persists. After every append the store replays sibling merging and
the cascade from the raw records, which keeps served state consistent
with what a fresh pipeline run would produce.
"""

from __future__ import annotations

import base64
import json
import logging
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional, Sequence

from .errors import InputError, PipelineError
from .linker import (
    CascadeState,
    ManualCandidate,
    NameScheme,
    merge_siblings,
    pair_label,
    run_cascade,
)
from .model import (
    CandidateState,
    CanonicalIxp,
    MappingCandidate,
    MappingDecision,
    SourceId,
    SourceRecord,
    Verdict,
)

log = logging.getLogger(__name__)


class UnknownCandidate(InputError):
    pass


class StorageFailure(PipelineError):
    pass


class _JsonLinesFile:
    """Append-only JSONL storage; a record is visible once its line is full."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def read_dicts(self) -> list[dict]:
        if not self.path.exists():
            return []
        out = []
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.endswith("\n"):
                    log.warning("%s:%d: ignoring torn trailing line", self.path, lineno)
                    break
                line = line.strip()
                if not line:
                    continue
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError:
                    raise StorageFailure(f"{self.path}:{lineno}: corrupt JSON line")
        return out

    def append_dict(self, record: dict) -> None:
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise StorageFailure(f"cannot append to {self.path}: {exc}") from None


class DecisionLog(_JsonLinesFile):
    def read(self) -> list[MappingDecision]:
        return [MappingDecision.from_dict(d) for d in self.read_dicts()]

    def append(self, decision: MappingDecision) -> None:
        self.append_dict(decision.to_dict())


class ManualCandidateStore(_JsonLinesFile):
    def read(self) -> list[ManualCandidate]:
        return [ManualCandidate(d["left"], d["right"]) for d in self.read_dicts()]

    def append(self, manual: ManualCandidate) -> None:
        self.append_dict(manual.to_dict())


@dataclass
class ReviewQueueEntry:
    """A candidate plus read-only snapshots of both endpoints."""

    candidate: MappingCandidate
    left_detail: CanonicalIxp
    right_detail: CanonicalIxp
    suggested_evidence: list[str]
    pair: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "candidate": self.candidate.to_dict(),
            "left": _entity_summary(self.left_detail),
            "right": _entity_summary(self.right_detail),
            "evidence": list(self.suggested_evidence),
            "pair": self.pair,
        }


def _entity_summary(entity: CanonicalIxp) -> dict[str, Any]:
    participant_counts = {
        source.value: len(entity.participant_asns(source))
        for source in entity.participants_by_source
    }
    urls = sorted({url for urls in entity.urls_by_source.values() for url in urls})
    return {
        "canonical_id": entity.canonical_id,
        "sources": sorted(s.value for s in entity.sources()),
        "members": [[s.value, r] for s, r in entity.members],
        "names": list(entity.merged_names),
        "locations": [loc.to_dict() for loc in entity.merged_locations],
        "status_by_source": {
            s.value: st.value for s, st in sorted(entity.status_by_source.items())
        },
        "participant_counts": participant_counts,
        "urls": urls,
        "continent": entity.continent().value,
    }


_SCHEME_BY_STEP = {scheme.step: scheme.name.lower().replace("_", "-") for scheme in NameScheme}


def _evidence_for(candidate: MappingCandidate) -> list[str]:
    evidence = [f"step {candidate.heuristic_step}: {_SCHEME_BY_STEP[candidate.heuristic_step]}"]
    if candidate.transformed_name:
        evidence.append(f"matched name: {candidate.transformed_name}")
    evidence.append(f"location: {candidate.location_evidence.value}")
    return evidence


def _encode_cursor(key: tuple) -> str:
    return base64.urlsafe_b64encode(json.dumps(list(key)).encode()).decode()

def _decode_cursor(cursor: str) -> tuple:
    try:
        return tuple(json.loads(base64.urlsafe_b64decode(cursor.encode())))
    except Exception:
        raise InputError(f"bad cursor: {cursor!r}") from None


@dataclass
class PairProgress:
    pending: int = 0
    accepted: int = 0
    rejected: int = 0
    working_left: int = 0
    working_right: int = 0

    def to_dict(self) -> dict[str, int]:
        return {
            "pending": self.pending,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "working_left": self.working_left,
            "working_right": self.working_right,
        }


class ReviewStore:
    """Serves candidates and consumes decisions for one pipeline state.

    All reads happen against an immutable snapshot that is swapped out
    atomically after each append; appends are serialized by a lock.
    """

    def __init__(
        self,
        records_by_source: dict[SourceId, list[SourceRecord]],
        decisions_path: str | Path,
        manual_path: Optional[str | Path] = None,
        auto_accept_steps: Sequence[int] = (),
    ):
        self.records_by_source = records_by_source
        self.decision_log = DecisionLog(decisions_path)
        manual_path = manual_path or str(decisions_path) + ".manual"
        self.manual_store = ManualCandidateStore(manual_path)
        self.auto_accept_steps = tuple(auto_accept_steps)
        self._write_lock = threading.Lock()
        self._snapshot: _Snapshot = self._replay()

    # -- state ------------------------------------------------------------

    def _replay(self) -> "_Snapshot":
        decisions = self.decision_log.read()
        manuals = self.manual_store.read()

        entities: dict[str, CanonicalIxp] = {}
        candidates: dict[str, tuple[MappingCandidate, str]] = {}
        datasets: dict[SourceId, list[CanonicalIxp]] = {}
        sibling_pairs: dict[str, PairProgress] = {}

        from .linker import record_as_canonical

        for source, records in sorted(self.records_by_source.items()):
            for record in records:
                single = record_as_canonical(record)
                entities[single.canonical_id] = single
            merged, sib_candidates = merge_siblings(records, decisions)
            datasets[source] = merged
            for entity in merged:
                entities[entity.canonical_id] = entity
            label = pair_label(source, source)
            progress = sibling_pairs.setdefault(label, PairProgress())
            progress.working_left = progress.working_right = len(merged)
            for cand in sib_candidates:
                candidates[cand.candidate_id] = (cand, label)

        cascade = run_cascade(
            datasets, decisions, manuals, auto_accept_steps=self.auto_accept_steps
        )
        for label, outcome in cascade.pairs.items():
            for cand in outcome.candidates:
                candidates[cand.candidate_id] = (cand, label)
        entities.update(cascade.entities)

        return _Snapshot(
            entities=entities,
            candidates=candidates,
            cascade=cascade,
            sibling_pairs=sibling_pairs,
            datasets=datasets,
        )

    def refresh(self) -> None:
        self._snapshot = self._replay()

    @property
    def snapshot(self) -> "_Snapshot":
        return self._snapshot

    def cascade_state(self) -> CascadeState:
        return self._snapshot.cascade

    # -- operations ---------------------------------------------------------

    def append_decision(self, decision: MappingDecision) -> MappingCandidate:
        """Durably append one decision; returns the candidate's new state."""
        with self._write_lock:
            snapshot = self._snapshot
            if decision.candidate_id not in snapshot.candidates:
                raise UnknownCandidate(f"unknown candidate {decision.candidate_id!r}")
            self.decision_log.append(decision)
            self._snapshot = self._replay()
        candidate = self._snapshot.candidates.get(decision.candidate_id)
        if candidate is None:
            # the decision changed sibling structure and the candidate id
            # no longer exists in the replayed state
            raise UnknownCandidate(
                f"candidate {decision.candidate_id!r} vanished after replay"
            )
        return candidate[0]

    def create_manual_candidate(self, left: str, right: str) -> MappingCandidate:
        with self._write_lock:
            snapshot = self._snapshot
            if left == right:
                raise InputError("a candidate needs two different IXPs")
            for cid in (left, right):
                if cid not in snapshot.entities:
                    raise UnknownCandidate(f"unknown IXP {cid!r}")
            left_sources = snapshot.entities[left].sources()
            right_sources = snapshot.entities[right].sources()
            if len(left_sources) != 1 or len(right_sources) != 1:
                raise InputError("manual candidates pair single-source entities")
            if left_sources == right_sources:
                raise InputError("manual candidates must span two different sources")
            self.manual_store.append(ManualCandidate(left, right))
            self._snapshot = self._replay()
        for cand, _ in self._snapshot.candidates.values():
            if {cand.left, cand.right} == {left, right} and cand.heuristic_step == 6:
                return cand
        raise PipelineError("manual candidate did not materialize after replay")

    def get_candidate(self, candidate_id: str) -> ReviewQueueEntry:
        snapshot = self._snapshot
        found = snapshot.candidates.get(candidate_id)
        if found is None:
            raise UnknownCandidate(f"unknown candidate {candidate_id!r}")
        return snapshot.entry(found[0], found[1])

    def next_pending(
        self,
        source_pair: Optional[str] = None,
        heuristic_step: Optional[int] = None,
        continent: Optional[str] = None,
        state: CandidateState = CandidateState.PENDING,
        cursor: Optional[str] = None,
        limit: int = 50,
    ) -> tuple[list[ReviewQueueEntry], Optional[str]]:
        """Filtered candidates ordered by (step, transformed name); paginated."""
        snapshot = self._snapshot
        rows = []
        for cand, label in snapshot.candidates.values():
            if cand.state is not state:
                continue
            if source_pair and label != source_pair:
                continue
            if heuristic_step is not None and cand.heuristic_step != heuristic_step:
                continue
            if continent:
                sides = (snapshot.entities[cand.left], snapshot.entities[cand.right])
                if all(e.continent().value.lower() != continent.lower() for e in sides):
                    continue
            rows.append((cand, label))
        rows.sort(key=lambda item: _order_key(item[0], item[1]))
        if cursor:
            after = _decode_cursor(cursor)
            rows = [item for item in rows if list(_order_key(*item)) > list(after)]
        page = rows[:limit]
        next_cursor = None
        if len(rows) > limit and page:
            next_cursor = _encode_cursor(_order_key(*page[-1]))
        return [snapshot.entry(cand, label) for cand, label in page], next_cursor

    def progress(self) -> dict[str, Any]:
        snapshot = self._snapshot
        pairs: dict[str, PairProgress] = {
            label: PairProgress(
                working_left=progress.working_left,
                working_right=progress.working_right,
            )
            for label, progress in snapshot.sibling_pairs.items()
        }
        for label, outcome in snapshot.cascade.pairs.items():
            pairs[label] = PairProgress(
                working_left=len(outcome.working_left),
                working_right=len(outcome.working_right),
            )
        for cand, label in snapshot.candidates.values():
            progress = pairs.setdefault(label, PairProgress())
            if cand.state is CandidateState.PENDING:
                progress.pending += 1
            elif cand.state is CandidateState.REJECTED:
                progress.rejected += 1
            else:
                progress.accepted += 1
        totals = PairProgress()
        for progress in pairs.values():
            totals.pending += progress.pending
            totals.accepted += progress.accepted
            totals.rejected += progress.rejected
        return {
            "pairs": {label: p.to_dict() for label, p in sorted(pairs.items())},
            "totals": {
                "pending": totals.pending,
                "accepted": totals.accepted,
                "rejected": totals.rejected,
                "candidates": totals.pending + totals.accepted + totals.rejected,
            },
        }

    def search_ixps(
        self,
        query: str = "",
        source: Optional[SourceId] = None,
        unmatched_for: Optional[str] = None,
        limit: int = 50,
    ) -> list[dict[str, Any]]:
        """Substring search over current entities, for manual matching."""
        snapshot = self._snapshot
        needle = query.lower()
        pool: list[CanonicalIxp] = []
        for src, merged in sorted(snapshot.datasets.items()):
            if source and src is not source:
                continue
            pool.extend(merged)
        if unmatched_for:
            outcome = snapshot.cascade.pairs.get(unmatched_for)
            if outcome is None:
                raise InputError(f"unknown pair {unmatched_for!r}")
            keep = outcome.working_left | outcome.working_right
            pool = [e for e in pool if e.canonical_id in keep]
        hits = [
            entity
            for entity in pool
            if not needle or any(needle in name.lower() for name in entity.merged_names)
        ]
        hits.sort(key=lambda e: e.canonical_id)
        return [_entity_summary(e) for e in hits[:limit]]

    def get_ixp(self, canonical_id: str) -> dict[str, Any]:
        entity = self._snapshot.entities.get(canonical_id)
        if entity is None:
            raise UnknownCandidate(f"unknown IXP {canonical_id!r}")
        return _entity_summary(entity)


def _order_key(cand: MappingCandidate, label: str) -> tuple:
    return (cand.heuristic_step, cand.transformed_name, label, cand.candidate_id)


@dataclass
class _Snapshot:
    entities: dict[str, CanonicalIxp]
    candidates: dict[str, tuple[MappingCandidate, str]]
    cascade: CascadeState
    sibling_pairs: dict[str, PairProgress]
    datasets: dict[SourceId, list[CanonicalIxp]]

    def entry(self, cand: MappingCandidate, label: str) -> ReviewQueueEntry:
        return ReviewQueueEntry(
            candidate=cand,
            left_detail=self.entities[cand.left],
            right_detail=self.entities[cand.right],
            suggested_evidence=_evidence_for(cand),
            pair=label,
        )


# --- HTTP API ---------------------------------------------------------------


def create_app(store: ReviewStore, ui_dir: Optional[Path] = None):
    """FastAPI application over a ReviewStore.

    Errors use a {"code", "message"} envelope; all payloads are JSON.
    """
    from fastapi import FastAPI, Request
    from fastapi.responses import JSONResponse
    from fastapi.staticfiles import StaticFiles

    app = FastAPI(title="ixpkit review", version="1")

    @app.exception_handler(UnknownCandidate)
    async def _unknown(request: Request, exc: UnknownCandidate):
        return JSONResponse(
            status_code=404, content={"code": "not_found", "message": str(exc)}
        )

    @app.exception_handler(InputError)
    async def _bad_input(request: Request, exc: InputError):
        return JSONResponse(
            status_code=400, content={"code": "bad_request", "message": str(exc)}
        )

    @app.exception_handler(PipelineError)
    async def _failure(request: Request, exc: PipelineError):
        return JSONResponse(
            status_code=500, content={"code": "internal", "message": str(exc)}
        )

    @app.get("/api/v1/candidates")
    def list_candidates(
        state: str = "pending",
        pair: Optional[str] = None,
        step: Optional[int] = None,
        continent: Optional[str] = None,
        cursor: Optional[str] = None,
        limit: int = 50,
    ):
        entries, next_cursor = store.next_pending(
            source_pair=pair,
            heuristic_step=step,
            continent=continent,
            state=CandidateState(state),
            cursor=cursor,
            limit=limit,
        )
        return {"items": [e.to_dict() for e in entries], "next_cursor": next_cursor}

    @app.get("/api/v1/candidates/{candidate_id}")
    def get_candidate(candidate_id: str):
        return store.get_candidate(candidate_id).to_dict()

    @app.post("/api/v1/candidates/{candidate_id}/decision")
    def post_decision(candidate_id: str, body: dict):
        try:
            verdict = Verdict(body["verdict"])
            reviewer = body["reviewer"]
        except (KeyError, ValueError) as exc:
            raise InputError(f"bad decision payload: {exc}") from None
        decision = MappingDecision(
            candidate_id=candidate_id,
            verdict=verdict,
            reviewer=reviewer,
            timestamp=datetime.now(timezone.utc),
            note=body.get("note"),
        )
        candidate = store.append_decision(decision)
        return {"ok": True, "candidate": candidate.to_dict()}

    @app.post("/api/v1/candidates")
    def create_candidate(body: dict):
        try:
            left, right = body["left"], body["right"]
        except KeyError as exc:
            raise InputError(f"missing field: {exc}") from None
        candidate = store.create_manual_candidate(left, right)
        return {"ok": True, "candidate": candidate.to_dict()}

    @app.get("/api/v1/progress")
    def progress():
        return store.progress()

    @app.get("/api/v1/ixps/{canonical_id}")
    def get_ixp(canonical_id: str):
        return store.get_ixp(canonical_id)

    @app.get("/api/v1/ixps")
    def search_ixps(
        q: str = "",
        source: Optional[str] = None,
        unmatched_for: Optional[str] = None,
        limit: int = 50,
    ):
        return {
            "items": store.search_ixps(
                query=q,
                source=SourceId(source) if source else None,
                unmatched_for=unmatched_for,
                limit=limit,
            )
        }

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
