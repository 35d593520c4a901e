from __future__ import annotations

import json
import sys
import threading
import urllib.request
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qabd.service import make_server


class ServiceClient:
    """Tiny urllib wrapper for exercising the HTTP surface in tests."""

    def __init__(self, base_url: str):
        self.base_url = base_url

    def request(self, method: str, path: str, payload=None, timeout=10):
        body = json.dumps(payload).encode("utf-8") if payload is not None else None
        request = urllib.request.Request(
            self.base_url + path,
            data=body,
            method=method,
            headers={"Content-Type": "application/json"},
        )
        with urllib.request.urlopen(request, timeout=timeout) as response:
            return response.status, json.loads(response.read())

    def get(self, path):
        return self.request("GET", path)

    def get_text(self, path, timeout=10) -> str:
        with urllib.request.urlopen(self.base_url + path, timeout=timeout) as response:
            return response.read().decode("utf-8")

    def post(self, path, payload=None):
        return self.request("POST", path, payload or {})

    def put(self, path, payload=None):
        return self.request("PUT", path, payload or {})

    def error_of(self, method, path, payload=None):
        """Issue a request expected to fail; returns (status, body)."""
        try:
            return self.request(method, path, payload)
        except urllib.error.HTTPError as exc:
            return exc.code, json.loads(exc.read())

    def stream_events(self, path, count, timeout=30):
        """Read `count` newline-delimited events from a push stream."""
        events = []
        with urllib.request.urlopen(self.base_url + path, timeout=timeout) as response:
            for line in response:
                events.append(json.loads(line))
                if len(events) >= count:
                    break
        return events


@pytest.fixture
def service(tmp_path):
    server = make_server(tmp_path / "svc-data", port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    client = ServiceClient(f"http://{host}:{port}")
    client.data_dir = tmp_path / "svc-data"
    client.server = server
    yield client
    server.shutdown()
    server.server_close()
    thread.join(timeout=5)
