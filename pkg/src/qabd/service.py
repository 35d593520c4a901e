"""HTTP+JSON service over the event-sourced session store.

Routes::

    POST /cases                          create from a schema-1 case doc
    GET  /cases                          list live cases
    GET  /cases/{id}/state               {revision, amplitudes, coherence, ...}
    POST /cases/{id}/observations        append evidence, one engine step
    PUT  /cases/{id}/interference        {"i","j","value"} symmetric override
    POST /cases/{id}/collapse            decision-forced outcome (state kept)
    POST /cases/{id}/fork                {"drop_observation_ids","extra_overrides"}
    GET  /cases/{id}/compare             classical-vs-quantum report
    GET  /cases/{id}/map?format=dot|json interference map export
    GET  /cases/{id}/events              newline-delimited JSON push stream
    GET  /fixtures, /fixtures/{id}       bundled case documents
    GET  /healthz                        liveness probe

Errors are JSON ``{"code", "message"}``: 404 for unknown cases/fixtures,
400 for malformed or invalid input, 409 for engine-state conflicts
(degenerate update). The push stream opens with a snapshot line, then one
line per revision, in order.
"""

from __future__ import annotations

import json
import queue
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any
from urllib.parse import parse_qs, urlparse

from . import casebook
from .errors import (
    BadValueError,
    DegenerateStateError,
    DiagonalOverrideError,
    DuplicateIdError,
    ParseError,
    QabdError,
    SchemaViolationError,
    TooFewHypothesesError,
    UnknownCaseError,
    ValidationFailedError,
)
from .store import SessionManager

_BAD_REQUEST = (
    ParseError,
    SchemaViolationError,
    ValidationFailedError,
    BadValueError,
    DiagonalOverrideError,
    DuplicateIdError,
    TooFewHypothesesError,
)

_CASE_ROUTE = re.compile(r"^/cases/(?P<case_id>[^/]+)(?P<tail>/[a-z]+)?$")


class ServiceServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, manager: SessionManager):
        super().__init__(address, RequestHandler)
        self.manager = manager
        self.shutting_down = threading.Event()

    def shutdown(self):
        self.shutting_down.set()
        super().shutdown()


class RequestHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: ServiceServer

    # -- plumbing -----------------------------------------------------------

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, status: int, payload: Any) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self._send_cors()
        self.end_headers()
        self.wfile.write(body)

    def _send_text(self, status: int, text: str, content_type: str) -> None:
        body = text.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self._send_cors()
        self.end_headers()
        self.wfile.write(body)

    def _send_cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")

    def _send_error(self, status: int, exc: Exception) -> None:
        code = exc.code if isinstance(exc, QabdError) else "internal"
        self._send_json(status, {"code": code, "message": str(exc)})

    def _read_body(self) -> Any:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b"{}"
        try:
            return json.loads(raw or b"{}")
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON body: {exc}") from None

    def _dispatch(self, method: str) -> None:
        try:
            self._route(method)
        except UnknownCaseError as exc:
            self._send_error(404, exc)
        except _BAD_REQUEST as exc:
            self._send_error(400, exc)
        except DegenerateStateError as exc:
            self._send_error(409, exc)
        except (BrokenPipeError, ConnectionResetError):
            pass
        except Exception as exc:  # pragma: no cover - defensive
            self._send_error(500, exc)

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_PUT(self):
        self._dispatch("PUT")

    def do_OPTIONS(self):
        self.send_response(204)
        self._send_cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    # -- routing ------------------------------------------------------------

    def _route(self, method: str) -> None:
        manager = self.server.manager
        parsed = urlparse(self.path)
        path = parsed.path.rstrip("/") or "/"

        if method == "GET" and path == "/healthz":
            self._send_json(200, {"status": "ok"})
            return
        if method == "GET" and path == "/fixtures":
            payload = [
                {
                    "id": m.fixture_id,
                    "description": m.description,
                    "source": m.source,
                    "hypotheses": len(m.case.hypotheses),
                    "observations": len(m.case.observations),
                }
                for m in casebook.list_fixtures()
            ]
            self._send_json(200, payload)
            return
        fixture_match = re.match(r"^/fixtures/([^/]+)$", path)
        if method == "GET" and fixture_match:
            fixture_id = fixture_match.group(1)
            if fixture_id not in casebook.FIXTURE_IDS:
                raise UnknownCaseError(f"no fixture {fixture_id!r}")
            self._send_json(200, casebook.serialize_case(casebook.fixture(fixture_id).case))
            return
        if path == "/cases" and method == "POST":
            case = casebook.parse_case(self._read_body())
            session = manager.create_case(case)
            self._send_json(
                201, {"case_id": session.case_id, "revision": session.revision}
            )
            return
        if path == "/cases" and method == "GET":
            self._send_json(200, manager.list_cases())
            return

        match = _CASE_ROUTE.match(path)
        if not match:
            self._send_json(404, {"code": "not_found", "message": f"no route {path}"})
            return
        case_id = match.group("case_id")
        tail = (match.group("tail") or "").lstrip("/")

        if method == "GET" and tail == "state":
            self._send_json(200, manager.get(case_id).state_payload())
        elif method == "POST" and tail == "observations":
            event = manager.apply_observation(case_id, self._read_body())
            self._send_json(200, event)
        elif method == "PUT" and tail == "interference":
            body = self._read_body()
            try:
                event = manager.override_interference(
                    case_id, str(body["i"]), str(body["j"]), body["value"]
                )
            except KeyError as exc:
                raise BadValueError(f"missing field {exc}") from None
            self._send_json(200, event)
        elif method == "POST" and tail == "collapse":
            self._send_json(200, manager.force_collapse(case_id))
        elif method == "POST" and tail == "fork":
            body = self._read_body()
            child = manager.fork(
                case_id,
                drop_observation_ids=body.get("drop_observation_ids"),
                extra_overrides=body.get("extra_overrides"),
            )
            self._send_json(201, {"case_id": child.case_id, "revision": child.revision})
        elif method == "GET" and tail == "compare":
            self._send_json(200, manager.compare_payload(case_id))
        elif method == "GET" and tail == "map":
            fmt = (parse_qs(parsed.query).get("format") or ["json"])[0]
            payload = manager.map_payload(case_id, fmt)
            if fmt == "dot":
                self._send_text(200, payload, "text/vnd.graphviz")
            else:
                self._send_json(200, payload)
        elif method == "GET" and tail == "events":
            raw_from = (parse_qs(parsed.query).get("from") or [None])[0]
            try:
                from_revision = int(raw_from) if raw_from is not None else None
            except ValueError:
                raise BadValueError(f"from must be an integer, got {raw_from!r}") from None
            self._stream_events(case_id, from_revision)
        else:
            self._send_json(
                404, {"code": "not_found", "message": f"no route {method} {path}"}
            )

    # -- push stream ----------------------------------------------------------

    def _stream_events(self, case_id: str, from_revision=None) -> None:
        manager = self.server.manager
        q, backlog = manager.subscribe(case_id, from_revision)
        try:
            self.send_response(200)
            self.send_header("Content-Type", "application/x-ndjson")
            self.send_header("Cache-Control", "no-store")
            self.send_header("Transfer-Encoding", "chunked")
            self._send_cors()
            self.end_headers()
            for line in backlog:
                self._write_chunk(json.dumps(line, sort_keys=True) + "\n")
            while not self.server.shutting_down.is_set():
                try:
                    push = q.get(timeout=0.25)
                except queue.Empty:
                    continue
                self._write_chunk(json.dumps(push, sort_keys=True) + "\n")
            self.wfile.write(b"0\r\n\r\n")
            self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError, OSError):
            pass
        finally:
            manager.unsubscribe(case_id, q)

    def _write_chunk(self, text: str) -> None:
        data = text.encode("utf-8")
        self.wfile.write(f"{len(data):X}\r\n".encode("ascii"))
        self.wfile.write(data + b"\r\n")
        self.wfile.flush()


def make_server(data_dir: str | Path, host: str = "127.0.0.1", port: int = 0) -> ServiceServer:
    manager = SessionManager(data_dir)
    return ServiceServer((host, port), manager)


def serve(data_dir: str | Path, host: str = "127.0.0.1", port: int = 8901) -> None:
    """Run the service until interrupted."""
    server = make_server(data_dir, host, port)
    address = f"http://{server.server_address[0]}:{server.server_address[1]}"
    print(f"serving abduction sessions from {Path(data_dir).resolve()} at {address}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()
