from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from ccloop.compiler import CompilerConfig


@pytest.fixture(scope="session")
def cc() -> CompilerConfig:
    return CompilerConfig()


class _StubHandler(BaseHTTPRequestHandler):
    """Minimal OpenAI-style chat-completions endpoint for gateway tests."""

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else {}
        self.server.requests.append(
            {"path": self.path, "body": body, "headers": dict(self.headers)}
        )
        behavior = (
            self.server.behaviors.pop(0)
            if self.server.behaviors
            else {"content": "ok"}
        )
        status = behavior.get("status", 200)
        if "raw" in behavior:
            payload = behavior["raw"].encode("utf-8")
        elif "error" in behavior:
            payload = json.dumps({"error": behavior["error"]}).encode("utf-8")
        else:
            payload = json.dumps(
                {
                    "choices": [
                        {
                            "message": {
                                "role": "assistant",
                                "content": behavior.get("content"),
                            }
                        }
                    ]
                }
            ).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    server.behaviors = []
    server.requests = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    server.endpoint = f"http://127.0.0.1:{server.server_address[1]}/v1"
    yield server
    server.shutdown()
    thread.join(timeout=5)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = []
    for status in ("passed", "failed", "skipped"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" in nodeid and report.when in ("call", "setup"):
                rows.append((nodeid.split("::")[-1], status.upper()))
    if rows:
        terminalreporter.section("acceptance criteria")
        for name, status in sorted(rows):
            terminalreporter.write_line(f"{status:7s} {name}")
