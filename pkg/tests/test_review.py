"""Decision storage, queue serving, progress, and the HTTP API."""

import json

import pytest
from fastapi.testclient import TestClient

from conftest import decision, record
from ixpkit.model import CandidateState, SourceId, Verdict
from ixpkit.review import DecisionLog, ReviewStore, UnknownCandidate, create_app


def five_candidate_records():
    euro = [
        record("e-linx", names=("LINX",), country="GB", city="London"),
        record("e-alpha", names=("Alpha IX",), country="DE"),
        record("e-beta", names=("Beta IX",), country="DE"),
        record("e-six", names=("SIX",), country="SK"),
        record("e-gamma", names=("Gamma IX",), country="DE"),
        record("e-solo", names=("Solo Exchange",), country="FR"),
    ]
    pdb = [
        record("p-linx", source=SourceId.PEERING_DB, names=("LINX",), country="GB",
               city="London"),
        record("p-alpha", source=SourceId.PEERING_DB, names=("Alpha IX",), country="DE"),
        record("p-beta", source=SourceId.PEERING_DB, names=("Beta IX",), country="DE"),
        record("p-six", source=SourceId.PEERING_DB, names=("SIX.SK",), country="SK"),
        record("p-gamma", source=SourceId.PEERING_DB, names=("gamma ix",), country="DE"),
        record("p-target", source=SourceId.PEERING_DB, names=("Different Name",),
               country="FR"),
    ]
    return {SourceId.EURO_IX: euro, SourceId.PEERING_DB: pdb}


@pytest.fixture
def store(tmp_path):
    return ReviewStore(
        five_candidate_records(),
        decisions_path=tmp_path / "decisions.jsonl",
    )


def pending_ids(store):
    entries, _ = store.next_pending(limit=100)
    return [e.candidate.candidate_id for e in entries]


class TestStore:
    def test_five_pending_from_fixture(self, store):
        assert len(pending_ids(store)) == 5

    def test_accept_changes_state_on_next_read(self, store):
        cid = pending_ids(store)[0]
        store.append_decision(decision(cid))
        assert store.get_candidate(cid).candidate.state is CandidateState.ACCEPTED
        assert cid not in pending_ids(store)

    def test_last_writer_wins(self, store):
        cid = pending_ids(store)[0]
        store.append_decision(decision(cid, Verdict.REJECT, minute=0))
        store.append_decision(decision(cid, Verdict.ACCEPT, minute=1))
        assert store.get_candidate(cid).candidate.state is CandidateState.ACCEPTED

    def test_unknown_candidate(self, store):
        with pytest.raises(UnknownCandidate):
            store.append_decision(decision("mc-missing"))

    def test_log_is_append_only_in_order(self, store, tmp_path):
        ids = pending_ids(store)[:3]
        for i, cid in enumerate(ids):
            store.append_decision(decision(cid, minute=i))
        log = DecisionLog(tmp_path / "decisions.jsonl").read()
        assert [d.candidate_id for d in log] == ids

    def test_filters_and_ordering(self, store):
        entries, _ = store.next_pending(heuristic_step=1, limit=100)
        assert len(entries) == 3
        names = [e.candidate.transformed_name for e in entries]
        assert names == sorted(names)
        entries, _ = store.next_pending(source_pair="euro-ix|peeringdb", limit=100)
        assert len(entries) == 5
        entries, _ = store.next_pending(continent="Europe", limit=100)
        assert len(entries) == 5

    def test_pagination_is_stable(self, store):
        page1, cursor = store.next_pending(limit=2)
        assert cursor is not None
        page2, cursor2 = store.next_pending(cursor=cursor, limit=2)
        page3, cursor3 = store.next_pending(cursor=cursor2, limit=2)
        ids = [e.candidate.candidate_id for e in page1 + page2 + page3]
        assert len(ids) == 5
        assert len(set(ids)) == 5
        assert cursor3 is None

    def test_progress_counts(self, store):
        fresh = store.progress()
        assert fresh["totals"] == {
            "pending": 5, "accepted": 0, "rejected": 0, "candidates": 5,
        }
        ids = pending_ids(store)
        store.append_decision(decision(ids[0], minute=0))
        store.append_decision(decision(ids[1], Verdict.REJECT, minute=1))
        progress = store.progress()
        assert progress["totals"]["accepted"] == 1
        assert progress["totals"]["rejected"] == 1
        assert progress["totals"]["pending"] == 3
        assert progress["totals"]["candidates"] == 5
        ep = progress["pairs"]["euro-ix|peeringdb"]
        assert ep["working_left"] == 5  # one of six entities got mapped
        assert all(v >= 0 for v in ep.values())

    def test_crash_consistency_on_log_prefixes(self, store, tmp_path):
        ids = pending_ids(store)
        for i, cid in enumerate(ids[:3]):
            store.append_decision(decision(cid, minute=i))
        full_log = (tmp_path / "decisions.jsonl").read_text().splitlines()
        for prefix_len in range(len(full_log) + 1):
            prefix_path = tmp_path / f"prefix{prefix_len}.jsonl"
            prefix_path.write_text(
                "".join(line + "\n" for line in full_log[:prefix_len])
            )
            replayed = ReviewStore(
                five_candidate_records(), decisions_path=prefix_path
            )
            snapshot = replayed.snapshot
            for outcome in snapshot.cascade.pairs.values():
                for cand in outcome.candidates:
                    if cand.state is not CandidateState.PENDING:
                        assert cand.candidate_id in snapshot.candidates
            totals = replayed.progress()["totals"]
            assert totals["candidates"] == totals["pending"] + totals["accepted"] + totals["rejected"]

    def test_torn_trailing_line_ignored(self, store, tmp_path):
        cid = pending_ids(store)[0]
        store.append_decision(decision(cid))
        path = tmp_path / "decisions.jsonl"
        with open(path, "a", encoding="utf-8") as fh:
            fh.write('{"candidate_id": "mc-torn", "verdict": "acc')  # no newline
        log = DecisionLog(path).read()
        assert [d.candidate_id for d in log] == [cid]

    def test_manual_candidate_lifecycle(self, store):
        solo = [
            e for e in store.snapshot.datasets[SourceId.EURO_IX]
            if "Solo Exchange" in e.merged_names
        ][0]
        target = [
            e for e in store.snapshot.datasets[SourceId.PEERING_DB]
            if "Different Name" in e.merged_names
        ][0]
        cand = store.create_manual_candidate(solo.canonical_id, target.canonical_id)
        assert cand.heuristic_step == 6
        assert cand.state is CandidateState.PENDING
        assert len(pending_ids(store)) == 6
        store.append_decision(decision(cand.candidate_id))
        assert store.get_candidate(cand.candidate_id).candidate.state is CandidateState.ACCEPTED

    def test_manual_candidate_validation(self, store):
        solo = store.snapshot.datasets[SourceId.EURO_IX][0].canonical_id
        with pytest.raises(Exception):
            store.create_manual_candidate(solo, solo)
        with pytest.raises(UnknownCandidate):
            store.create_manual_candidate(solo, "cx-ghost")


@pytest.fixture
def client(store):
    return TestClient(create_app(store))


class TestApi:
    def test_list_pending(self, client):
        response = client.get("/api/v1/candidates?state=pending")
        assert response.status_code == 200
        body = response.json()
        assert len(body["items"]) == 5
        entry = body["items"][0]
        assert {"candidate", "left", "right", "evidence", "pair"} <= entry.keys()

    def test_decision_round_trip(self, client):
        cid = client.get("/api/v1/candidates").json()["items"][0]["candidate"]["candidate_id"]
        response = client.post(
            f"/api/v1/candidates/{cid}/decision",
            json={"verdict": "accept", "reviewer": "tester"},
        )
        assert response.status_code == 200
        assert response.json()["candidate"]["state"] == "accepted"
        assert client.get(f"/api/v1/candidates/{cid}").json()["candidate"]["state"] == "accepted"

    def test_unknown_candidate_envelope(self, client):
        response = client.post(
            "/api/v1/candidates/mc-missing/decision",
            json={"verdict": "accept", "reviewer": "tester"},
        )
        assert response.status_code == 404
        assert response.json() == {
            "code": "not_found",
            "message": "unknown candidate 'mc-missing'",
        }

    def test_bad_verdict_rejected(self, client):
        cid = client.get("/api/v1/candidates").json()["items"][0]["candidate"]["candidate_id"]
        response = client.post(
            f"/api/v1/candidates/{cid}/decision",
            json={"verdict": "maybe", "reviewer": "tester"},
        )
        assert response.status_code == 400
        assert response.json()["code"] == "bad_request"

    def test_scripted_session(self, client):
        # accept 2, reject 1, create 1 manual candidate
        items = client.get("/api/v1/candidates?limit=100").json()["items"]
        assert len(items) == 5
        ids = [i["candidate"]["candidate_id"] for i in items]
        for cid in ids[:2]:
            assert client.post(
                f"/api/v1/candidates/{cid}/decision",
                json={"verdict": "accept", "reviewer": "s"},
            ).status_code == 200
        assert client.post(
            f"/api/v1/candidates/{ids[2]}/decision",
            json={"verdict": "reject", "reviewer": "s"},
        ).status_code == 200

        unmatched = client.get(
            "/api/v1/ixps?q=solo&source=euro-ix&unmatched_for=euro-ix|peeringdb"
        ).json()["items"]
        assert len(unmatched) == 1
        target = client.get("/api/v1/ixps?q=different&source=peeringdb").json()["items"]
        created = client.post(
            "/api/v1/candidates",
            json={"left": unmatched[0]["canonical_id"], "right": target[0]["canonical_id"]},
        )
        assert created.status_code == 200
        assert created.json()["candidate"]["heuristic_step"] == 6

        progress = client.get("/api/v1/progress").json()
        assert progress["totals"] == {
            "pending": 3, "accepted": 2, "rejected": 1, "candidates": 6,
        }

    def test_ixp_detail(self, client, store):
        cid = store.snapshot.datasets[SourceId.EURO_IX][0].canonical_id
        body = client.get(f"/api/v1/ixps/{cid}").json()
        assert body["canonical_id"] == cid
        assert body["sources"] == ["euro-ix"]

    def test_state_survives_restart(self, client, store, tmp_path):
        cid = client.get("/api/v1/candidates").json()["items"][0]["candidate"]["candidate_id"]
        client.post(
            f"/api/v1/candidates/{cid}/decision",
            json={"verdict": "accept", "reviewer": "s"},
        )
        reloaded = ReviewStore(
            five_candidate_records(), decisions_path=tmp_path / "decisions.jsonl"
        )
        restarted = TestClient(create_app(reloaded))
        assert restarted.get(f"/api/v1/candidates/{cid}").json()["candidate"]["state"] == "accepted"
