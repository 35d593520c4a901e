from __future__ import annotations

import random
import threading
from dataclasses import replace

import pytest

from qabd.casebook import fixture, observation_to_dict, serialize_case
from qabd.errors import ReplayMismatchError
from qabd.estimator import QuantumAbductor
from qabd.store import SessionManager, read_log, verify_log


def _stripped(fixture_id):
    case = fixture(fixture_id).case
    return serialize_case(replace(case, observations=()))


def _create(client, fixture_id="bossetti", stripped=True):
    doc = _stripped(fixture_id) if stripped else serialize_case(fixture(fixture_id).case)
    status, body = client.post("/cases", doc)
    assert status == 201
    return body["case_id"]


class TestCaseLifecycle:
    def test_create_and_state(self, service):
        case_id = _create(service, "bossetti")
        status, state = service.get(f"/cases/{case_id}/state")
        assert status == 200
        assert state["revision"] == 0
        assert len(state["amplitudes"]) == 6
        assert state["coherence"] == pytest.approx(1 / 6, abs=1e-9)

    def test_create_applies_embedded_log(self, service):
        case_id = _create(service, "bossetti", stripped=False)
        _, state = service.get(f"/cases/{case_id}/state")
        assert state["revision"] == 7
        assert state["step"] == 7

    def test_append_observation(self, service):
        case_id = _create(service, "bossetti")
        o1 = observation_to_dict(fixture("bossetti").case.observations[0])
        status, event = service.post(f"/cases/{case_id}/observations", o1)
        assert status == 200
        assert event["revision"] == 1
        amplitudes = event["state"]["amplitudes"]
        assert len(set(amplitudes)) > 1  # non-uniform after contested evidence

    def test_append_to_unknown_case(self, service):
        status, body = service.error_of(
            "POST", "/cases/nope/observations", {"id": "O1", "statement": "s"}
        )
        assert status == 404
        assert body["code"] == "unknown_case"

    def test_unknown_fixture_404(self, service):
        status, body = service.error_of("GET", "/fixtures/orient")
        assert status == 404

    def test_fixture_endpoints(self, service):
        status, listing = service.get("/fixtures")
        assert status == 200
        assert {f["id"] for f in listing} >= {"ludwig", "bossetti", "medical", "drift"}
        status, doc = service.get("/fixtures/medical")
        assert status == 200
        assert doc["schema"] == 1 and len(doc["hypotheses"]) == 2

    def test_malformed_case_rejected(self, service):
        status, body = service.error_of("POST", "/cases", {"schema": 1, "name": "x"})
        assert status == 400


class TestInterferenceOverride:
    def test_symmetric_override(self, service):
        case_id = _create(service, "bossetti")
        status, event = service.put(
            f"/cases/{case_id}/interference", {"i": "H1", "j": "H2", "value": -0.9}
        )
        assert status == 200
        assert event["revision"] == 1
        _, payload = service.get(f"/cases/{case_id}/map?format=json")
        edge = next(
            e for e in payload["edges"] if {e["i"], e["j"]} == {"H1", "H2"}
        )
        assert edge["value"] == -0.9
        assert edge["provenance"] == "expert-override"

    def test_diagonal_rejected(self, service):
        case_id = _create(service)
        status, body = service.error_of(
            "PUT", f"/cases/{case_id}/interference", {"i": "H1", "j": "H1", "value": 0.2}
        )
        assert status == 400
        assert body["code"] == "diagonal_override"

    def test_out_of_range_rejected(self, service):
        case_id = _create(service)
        status, body = service.error_of(
            "PUT", f"/cases/{case_id}/interference", {"i": "H1", "j": "H2", "value": 3}
        )
        assert status == 400
        assert body["code"] == "bad_value"

    def test_override_prospective_not_retroactive(self, service):
        case_id = _create(service, "bossetti")
        o1 = observation_to_dict(fixture("bossetti").case.observations[0])
        _, before_event = service.post(f"/cases/{case_id}/observations", o1)
        service.put(
            f"/cases/{case_id}/interference", {"i": "H1", "j": "H2", "value": 0.9}
        )
        _, state = service.get(f"/cases/{case_id}/state")
        assert state["amplitudes"] == before_event["state"]["amplitudes"]


class TestForceCollapse:
    def test_uniform_tie_break(self, service):
        case_id = _create(service, "medical")
        status, event = service.post(f"/cases/{case_id}/collapse")
        assert status == 200
        outcome = event["outcome"]
        assert outcome["kind"] == "dominant"
        assert outcome["members"] == ["H1"]
        assert outcome["forced"] is True
        assert outcome["tie_break"] is True

    def test_bossetti_forced_dominant_h1(self, service):
        case_id = _create(service, "bossetti", stripped=False)
        _, event = service.post(f"/cases/{case_id}/collapse")
        assert event["outcome"]["kind"] == "dominant"
        assert event["outcome"]["members"] == ["H1"]

    def test_session_state_untouched_and_repeatable(self, service):
        case_id = _create(service, "medical", stripped=False)
        _, before = service.get(f"/cases/{case_id}/state")
        _, first = service.post(f"/cases/{case_id}/collapse")
        _, second = service.post(f"/cases/{case_id}/collapse")
        _, after = service.get(f"/cases/{case_id}/state")
        assert after["amplitudes"] == before["amplitudes"]
        assert first["outcome"] == second["outcome"]
        assert second["revision"] == first["revision"] + 1
        events = read_log(service.data_dir / f"{case_id}.jsonl")
        assert sum(1 for e in events if e["type"] == "forced_collapse") == 2


class TestFork:
    def test_fork_drops_observation(self, service):
        case_id = _create(service, "bossetti", stripped=False)
        status, body = service.post(
            f"/cases/{case_id}/fork", {"drop_observation_ids": ["O7"]}
        )
        assert status == 201
        _, parent = service.get(f"/cases/{case_id}/state")
        _, child = service.get(f"/cases/{body['case_id']}/state")
        assert child["revision"] == 6
        # without the final ruling, the lead hypothesis sits lower
        assert child["amplitudes"][0] < parent["amplitudes"][0]

    def test_fork_with_no_changes_identical(self, service):
        case_id = _create(service, "drift", stripped=False)
        _, body = service.post(f"/cases/{case_id}/fork", {})
        _, parent = service.get(f"/cases/{case_id}/state")
        _, child = service.get(f"/cases/{body['case_id']}/state")
        assert child["amplitudes"] == parent["amplitudes"]

    def test_fork_unknown_case(self, service):
        status, body = service.error_of("POST", "/cases/ghost/fork", {})
        assert status == 404

    def test_fork_unknown_observation(self, service):
        case_id = _create(service, "drift", stripped=False)
        status, body = service.error_of(
            "POST", f"/cases/{case_id}/fork", {"drop_observation_ids": ["O99"]}
        )
        assert status == 400


class TestReadsAndCompare:
    def test_reads_do_not_bump_revision(self, service):
        case_id = _create(service, "ludwig", stripped=False)
        _, before = service.get(f"/cases/{case_id}/state")
        service.get(f"/cases/{case_id}/compare")
        service.get(f"/cases/{case_id}/map?format=json")
        service.get_text(f"/cases/{case_id}/map?format=dot")
        service.get("/cases")
        _, after = service.get(f"/cases/{case_id}/state")
        assert after["revision"] == before["revision"]

    def test_compare_endpoint(self, service):
        case_id = _create(service, "bossetti", stripped=False)
        _, report = service.get(f"/cases/{case_id}/compare")
        assert "deadlock" in report["flags"]
        assert report["classical"]["survivors"] == []

    def test_dot_map(self, service):
        case_id = _create(service, "medical", stripped=False)
        dot = service.get_text(f"/cases/{case_id}/map?format=dot")
        assert dot.startswith("graph interference {")
        assert "style=dashed" in dot  # the expert -0.4 coupling


class TestPushStream:
    def test_snapshot_then_ordered_revisions(self, service):
        case_id = _create(service, "bossetti")
        events: list = []
        done = threading.Event()

        def listen():
            events.extend(service.stream_events(f"/cases/{case_id}/events", count=8))
            done.set()

        thread = threading.Thread(target=listen, daemon=True)
        thread.start()
        observations = fixture("bossetti").case.observations
        import time

        time.sleep(0.2)
        for o in observations:
            service.post(
                f"/cases/{case_id}/observations", observation_to_dict(o)
            )
        assert done.wait(timeout=10)
        assert [e["revision"] for e in events] == list(range(0, 8))
        assert events[0]["event"] == "snapshot"
        assert all(e["event"] == "observation" for e in events[1:])
        final = events[-1]["state"]
        assert final["outcome"]["kind"] == "deferred"
        squares = final["squares"]
        assert squares.index(max(squares)) == 0


class TestHistoryReplayStream:
    def test_from_zero_replays_all_revisions(self, service):
        case_id = _create(service, "bossetti", stripped=False)
        events = service.stream_events(f"/cases/{case_id}/events?from=0", count=7)
        assert [e["revision"] for e in events] == list(range(1, 8))
        assert all(e["event"] == "observation" for e in events)
        # the replayed history survives a service restart path too
        reborn = SessionManager(service.data_dir)
        session = reborn.get(case_id)
        assert [p["revision"] for p in session.history] == list(range(1, 8))

    def test_from_midpoint(self, service):
        case_id = _create(service, "medical", stripped=False)
        events = service.stream_events(f"/cases/{case_id}/events?from=2", count=2)
        assert [e["revision"] for e in events] == [3, 4]


class TestConcurrency:
    def test_interleaved_appends_dense_revisions(self, service):
        case_id = _create(service, "drift")
        observations = [
            {"id": f"T{k}", "statement": f"concurrent evidence {k}", "weight": 0.5,
             "overrides": {"H1": 0.5, "H2": -0.5}}
            for k in range(20)
        ]
        revisions = []
        lock = threading.Lock()

        def worker(chunk):
            for obs in chunk:
                _, event = service.post(f"/cases/{case_id}/observations", obs)
                with lock:
                    revisions.append(event["revision"])

        threads = [
            threading.Thread(target=worker, args=(observations[i::4],)) for i in range(4)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(revisions) == list(range(1, 21))
        events = read_log(service.data_dir / f"{case_id}.jsonl")
        logged = [e["revision"] for e in events if e["type"] == "observation"]
        assert logged == list(range(1, 21))


class TestReplayDeterminism:
    def _random_session(self, manager, seed=1234, events=50):
        rng = random.Random(seed)
        case = replace(fixture("bossetti").case, observations=())
        session = manager.create_case(case)
        hyp_ids = [h.id for h in case.hypotheses]
        for k in range(events):
            roll = rng.random()
            if roll < 0.75:
                overrides = {
                    hid: rng.choice([-1.0, -0.5, 0.0, 0.5, 1.0]) for hid in hyp_ids
                }
                manager.apply_observation(
                    session.case_id,
                    {
                        "id": f"R{k}",
                        "statement": f"randomized evidence {k}",
                        "weight": rng.choice([0.2, 0.6, 1.0]),
                        "overrides": overrides,
                    },
                )
            elif roll < 0.9:
                i, j = rng.sample(hyp_ids, 2)
                manager.override_interference(
                    session.case_id, i, j, round(rng.uniform(-1, 1), 3)
                )
            else:
                manager.force_collapse(session.case_id)
        return session.case_id

    def test_rebuild_bit_identical(self, tmp_path):
        data_dir = tmp_path / "sessions"
        manager = SessionManager(data_dir)
        case_id = self._random_session(manager)
        live = manager.get(case_id)
        amplitudes = live.engine.amplitudes_
        revision = live.revision

        reborn = SessionManager(data_dir)  # simulated restart
        session = reborn.get(case_id)
        assert session.engine.amplitudes_ == amplitudes  # exact, bitwise
        assert session.revision == revision

    def test_verify_log_passes_and_detects_tampering(self, tmp_path):
        data_dir = tmp_path / "sessions"
        manager = SessionManager(data_dir)
        case_id = self._random_session(manager, seed=99, events=25)
        log_path = data_dir / f"{case_id}.jsonl"
        verified = list(verify_log(log_path))
        assert len(verified) == 25

        # flip one recorded amplitude: replay must fail at that revision
        lines = log_path.read_text(encoding="utf-8").splitlines()
        import json as _json

        target_index, target_revision = next(
            (idx, _json.loads(line)["revision"])
            for idx, line in enumerate(lines)
            if _json.loads(line).get("type") == "observation"
        )
        doc = _json.loads(lines[target_index])
        doc["state"]["amplitudes"][0] += 1e-9
        lines[target_index] = _json.dumps(doc, sort_keys=True, separators=(",", ":"))
        log_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(ReplayMismatchError) as excinfo:
            list(verify_log(log_path))
        assert excinfo.value.revision == target_revision

    def test_fork_lineage_verified(self, tmp_path):
        manager = SessionManager(tmp_path / "sessions")
        case = fixture("drift").case
        session = manager.create_case(case)
        manager.fork(session.case_id, drop_observation_ids=["O3"])
        verified = list(verify_log(session.log_path))
        # parent (4 observations) + child (3 observations)
        assert len(verified) == 7

    def test_restart_preserves_engine_continuation(self, tmp_path):
        data_dir = tmp_path / "sessions"
        manager = SessionManager(data_dir)
        case = replace(fixture("medical").case, observations=())
        session = manager.create_case(case)
        for o in fixture("medical").case.observations[:2]:
            manager.apply_observation(session.case_id, observation_to_dict(o))

        reborn = SessionManager(data_dir)
        for o in fixture("medical").case.observations[2:]:
            reborn.apply_observation(session.case_id, observation_to_dict(o))
        resumed = reborn.get(session.case_id).engine.amplitudes_

        oneshot = QuantumAbductor.from_case(fixture("medical").case).fit(
            fixture("medical").case
        )
        assert resumed == oneshot.amplitudes_
