"""Event-sourced session store: append-only JSON-lines log per case.

The log is the source of truth. Every mutation appends one event carrying
the resulting amplitudes, so any session can be rebuilt bit-identically by
replaying its file. Overrides are prospective (they shape future steps,
never history), and observation retraction exists only as a fork to a new
case.

Event types::

    created          case definition (no observations), revision 0
    observation      applied evidence + resulting state/trace/outcome
    override         symmetric interference override
    forced_collapse  decision-forced outcome (state untouched)
    fork             marker pointing at the child case (no revision bump)
"""

from __future__ import annotations

import json
import queue
import threading
import uuid
from dataclasses import replace
from pathlib import Path
from typing import Any, Iterator, Mapping, Optional

from . import casebook, export
from .classical import compare
from .dynamics import coherence
from .errors import (
    BadValueError,
    DiagonalOverrideError,
    ReplayMismatchError,
    UnknownCaseError,
)
from .estimator import QuantumAbductor
from .model import CaseFile, Observation, set_override


def _new_case_id(name: str) -> str:
    slug = "".join(ch if ch.isalnum() else "-" for ch in name.lower()).strip("-") or "case"
    return f"{slug}-{uuid.uuid4().hex[:8]}"


def _push_detail(event: dict) -> dict:
    """What the subscribers see about the triggering event (everything but
    the bulky recomputable parts)."""
    return {
        k: v
        for k, v in event.items()
        if k not in ("type", "revision", "state", "trace")
    }


class Session:
    """One live case: engine state plus its append-only log."""

    def __init__(self, case_id: str, log_path: Path, engine: QuantumAbductor):
        self.case_id = case_id
        self.log_path = log_path
        self.engine = engine
        self.revision = 0
        self.lock = threading.RLock()
        self.subscribers: list[queue.Queue] = []
        # Every push payload ever emitted, in revision order, so subscribers
        # can replay history (`?from=N`) through the same stream shape.
        self.history: list[dict] = []

    @property
    def case(self) -> CaseFile:
        return self.engine.case_

    def state_payload(self) -> dict:
        amplitudes = list(self.engine.amplitudes_)
        return {
            "case_id": self.case_id,
            "name": self.case.name,
            "revision": self.revision,
            "amplitudes": amplitudes,
            "squares": [a * a for a in amplitudes],
            "coherence": self.engine.coherence_,
            "step": self.engine.state_.step,
            "hypotheses": [
                {"id": h.id, "label": h.label, "statement": h.statement}
                for h in self.case.hypotheses
            ],
            "outcome": export.outcome_to_dict(self.engine.predict()),
        }


class SessionManager:
    """Registry of sessions persisted under one directory.

    Per-case mutations are serialized by the session lock (single logical
    writer); distinct cases mutate in parallel. Push subscribers receive
    every revision in order.
    """

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, Session] = {}
        self._registry_lock = threading.RLock()
        for log_path in sorted(self.data_dir.glob("*.jsonl")):
            session = self._rebuild(log_path)
            self.sessions[session.case_id] = session

    # -- log plumbing -------------------------------------------------------

    def _append_event(self, session: Session, event: dict) -> None:
        line = json.dumps(event, sort_keys=True, separators=(",", ":"))
        with session.log_path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()

    def _notify(self, session: Session, event: dict) -> None:
        push = {
            "revision": session.revision,
            "event": event["type"],
            "state": session.state_payload(),
            "detail": _push_detail(event),
        }
        session.history.append(push)
        for q in list(session.subscribers):
            q.put(push)

    def _rebuild(self, log_path: Path) -> Session:
        """Replay a persisted log; raises if recorded states diverge."""
        events = read_log(log_path)
        if not events or events[0].get("type") != "created":
            raise ReplayMismatchError(log_path.stem, 0, f"no creation event in {log_path}")
        created = events[0]
        case = casebook.parse_case(created["case"])
        case_id = created["case_id"]
        engine = QuantumAbductor.from_case(case)
        engine.fit(case)
        session = Session(case_id, log_path, engine)
        for event in events[1:]:
            kind = event.get("type")
            if kind == "observation":
                observation = casebook.parse_observation(
                    event["observation"], sequence=event["sequence"]
                )
                engine.partial_fit(observation)
                session.revision = event["revision"]
                recorded = tuple(event["state"]["amplitudes"])
                if recorded != engine.amplitudes_:
                    raise ReplayMismatchError(case_id, event["revision"])
            elif kind == "override":
                engine.override_interference(event["i"], event["j"], event["value"])
                session.revision = event["revision"]
            elif kind == "forced_collapse":
                session.revision = event["revision"]
            elif kind == "fork":
                continue
            else:
                raise ReplayMismatchError(case_id, session.revision, f"unknown event {kind!r}")
            session.history.append(
                {
                    "revision": session.revision,
                    "event": kind,
                    "state": session.state_payload(),
                    "detail": _push_detail(event),
                }
            )
        return session

    # -- public operations --------------------------------------------------

    def create_case(self, case: CaseFile, forked_from: Optional[str] = None) -> Session:
        """Register a case; its embedded observation log is applied event by
        event so the persisted history replays one revision per observation."""
        case_id = _new_case_id(case.name)
        log_path = self.data_dir / f"{case_id}.jsonl"
        definition = replace(case, observations=())
        engine = QuantumAbductor.from_case(definition)
        engine.fit(definition)
        session = Session(case_id, log_path, engine)
        created_event: dict[str, Any] = {
            "type": "created",
            "case_id": case_id,
            "case": casebook.serialize_case(definition),
        }
        if forked_from:
            created_event["forked_from"] = forked_from
        self._append_event(session, created_event)
        with self._registry_lock:
            self.sessions[case_id] = session
        for observation in sorted(case.observations, key=lambda o: o.sequence):
            self.apply_observation(case_id, observation)
        return session

    def get(self, case_id: str) -> Session:
        with self._registry_lock:
            session = self.sessions.get(case_id)
        if session is None:
            raise UnknownCaseError(f"no case {case_id!r}")
        return session

    def apply_observation(
        self, case_id: str, observation: Observation | Mapping[str, Any]
    ) -> dict:
        session = self.get(case_id)
        with session.lock:
            if not isinstance(observation, Observation):
                observation = casebook.parse_observation(
                    observation, sequence=session.case.next_sequence()
                )
            elif observation.sequence <= (
                session.case.observations[-1].sequence if session.case.observations else 0
            ):
                observation = replace(observation, sequence=session.case.next_sequence())
            session.engine.partial_fit(observation)
            session.revision += 1
            trace = session.engine.traces_[-1]
            event = {
                "type": "observation",
                "revision": session.revision,
                "sequence": observation.sequence,
                "observation": casebook.observation_to_dict(observation),
                "state": {
                    "amplitudes": list(session.engine.amplitudes_),
                    "step": session.engine.state_.step,
                },
                "trace": export.trace_to_dict(trace),
                "outcome": export.outcome_to_dict(session.engine.predict()),
            }
            self._append_event(session, event)
            self._notify(session, event)
            return event

    def override_interference(self, case_id: str, i: str, j: str, value) -> dict:
        session = self.get(case_id)
        if i == j:
            raise DiagonalOverrideError(f"cannot override diagonal ({i},{j})")
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise BadValueError(f"override value must be a number, got {value!r}") from None
        if not (-1.0 <= value <= 1.0):
            raise BadValueError(f"override value {value} outside [-1, +1]")
        with session.lock:
            known = {h.id for h in session.case.hypotheses}
            if i not in known or j not in known:
                raise BadValueError(f"unknown hypothesis in override ({i},{j})")
            session.engine.override_interference(i, j, value)
            session.revision += 1
            event = {
                "type": "override",
                "revision": session.revision,
                "i": i,
                "j": j,
                "value": value,
            }
            self._append_event(session, event)
            self._notify(session, event)
            return event

    def force_collapse(self, case_id: str) -> dict:
        """Decision-forced outcome; recorded in the log, state untouched."""
        session = self.get(case_id)
        with session.lock:
            outcome = session.engine.force_collapse()
            session.revision += 1
            event = {
                "type": "forced_collapse",
                "revision": session.revision,
                "outcome": export.outcome_to_dict(outcome),
            }
            self._append_event(session, event)
            self._notify(session, event)
            return event

    def fork(
        self,
        case_id: str,
        drop_observation_ids: Optional[list[str]] = None,
        extra_overrides: Optional[list[Mapping[str, Any]]] = None,
    ) -> Session:
        """What-if copy: replay the case without some observations and/or
        with extra couplings. The parent log records a fork marker."""
        session = self.get(case_id)
        drops = set(drop_observation_ids or [])
        with session.lock:
            parent = session.case
            unknown = drops - {o.id for o in parent.observations}
            if unknown:
                raise BadValueError(f"cannot drop unknown observation(s) {sorted(unknown)}")
            overrides = dict(parent.interference_overrides)
            for entry in extra_overrides or []:
                i, j, value = str(entry["i"]), str(entry["j"]), float(entry["value"])
                if i == j:
                    raise DiagonalOverrideError(f"cannot override diagonal ({i},{j})")
                overrides = set_override(overrides, i, j, value)
            child_case = CaseFile(
                name=f"{parent.name}-fork",
                hypotheses=parent.hypotheses,
                observations=tuple(
                    o for o in parent.observations if o.id not in drops
                ),
                config=parent.config,
                interference_overrides=overrides,
            )
            child = self.create_case(child_case, forked_from=case_id)
            self._append_event(
                session,
                {
                    "type": "fork",
                    "child_id": child.case_id,
                    "dropped": sorted(drops),
                    "extra_overrides": [
                        {"i": i, "j": j, "value": v}
                        for (i, j), v in sorted(overrides.items())
                    ],
                },
            )
            return child

    def compare_payload(self, case_id: str) -> dict:
        session = self.get(case_id)
        with session.lock:
            return compare(session.case).to_dict()

    def map_payload(self, case_id: str, fmt: str = "json") -> str | dict:
        session = self.get(case_id)
        with session.lock:
            hypotheses = session.case.hypotheses
            interference = session.engine.interference_
            if fmt == "dot":
                return export.interference_to_dot(hypotheses, interference)
            if fmt == "json":
                return export.interference_to_json(hypotheses, interference)
        raise BadValueError(f"unknown map format {fmt!r}")

    def subscribe(
        self, case_id: str, from_revision: Optional[int] = None
    ) -> tuple[queue.Queue, list[dict]]:
        """Register a push subscriber; returns the queue plus the lines to
        send before going live. Without ``from_revision`` that is a single
        snapshot of the current state; with it, the replay of every recorded
        push after that revision (``from_revision=0`` replays the whole
        history)."""
        session = self.get(case_id)
        with session.lock:
            q: queue.Queue = queue.Queue()
            session.subscribers.append(q)
            if from_revision is None:
                backlog = [
                    {
                        "revision": session.revision,
                        "event": "snapshot",
                        "state": session.state_payload(),
                    }
                ]
            else:
                backlog = [
                    push for push in session.history if push["revision"] > from_revision
                ]
            return q, backlog

    def unsubscribe(self, case_id: str, q: queue.Queue) -> None:
        try:
            session = self.get(case_id)
        except UnknownCaseError:
            return
        with session.lock:
            if q in session.subscribers:
                session.subscribers.remove(q)

    def list_cases(self) -> list[dict]:
        with self._registry_lock:
            sessions = list(self.sessions.values())
        return [
            {"case_id": s.case_id, "name": s.case.name, "revision": s.revision}
            for s in sessions
        ]


def read_log(log_path: Path) -> list[dict]:
    events = []
    with Path(log_path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(json.loads(line))
    return events


def verify_log(log_path: str | Path, _seen: Optional[set] = None) -> Iterator[tuple[str, int]]:
    """Replay a log and every fork descendant, yielding (case_id, revision)
    per verified mutation. Raises ReplayMismatchError at the first recorded
    state that the recomputation cannot reproduce bit-for-bit."""
    log_path = Path(log_path)
    seen = _seen if _seen is not None else set()
    if log_path in seen:
        return
    seen.add(log_path)
    events = read_log(log_path)
    if not events or events[0].get("type") != "created":
        raise ReplayMismatchError(log_path.stem, 0, f"no creation event in {log_path}")
    case = casebook.parse_case(events[0]["case"])
    case_id = events[0]["case_id"]
    engine = QuantumAbductor.from_case(case)
    engine.fit(case)
    forks: list[str] = []
    for event in events[1:]:
        kind = event.get("type")
        if kind == "observation":
            observation = casebook.parse_observation(
                event["observation"], sequence=event["sequence"]
            )
            engine.partial_fit(observation)
            recorded = tuple(event["state"]["amplitudes"])
            if recorded != engine.amplitudes_:
                raise ReplayMismatchError(case_id, event["revision"])
            yield case_id, event["revision"]
        elif kind == "override":
            engine.override_interference(event["i"], event["j"], event["value"])
            yield case_id, event["revision"]
        elif kind == "forced_collapse":
            yield case_id, event["revision"]
        elif kind == "fork":
            forks.append(event["child_id"])
        else:
            raise ReplayMismatchError(case_id, 0, f"unknown event {kind!r}")
    for child_id in forks:
        child_path = log_path.parent / f"{child_id}.jsonl"
        yield from verify_log(child_path, _seen=seen)
