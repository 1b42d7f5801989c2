import json
import sys
import threading
from datetime import date, datetime, timedelta, timezone
from http.server import BaseHTTPRequestHandler, HTTPServer
from urllib.parse import parse_qs, urlparse

import numpy as np
import pytest

from bugcast import bundled
from bugcast.features import build_exogenous
from bugcast.ingest import WeeklySeries


def weekly(counts, start=date(2015, 1, 5), label="arrival"):
    weeks = tuple(start + timedelta(weeks=k) for k in range(len(counts)))
    return WeeklySeries(weeks, tuple(int(c) for c in counts), label)


@pytest.fixture(scope="session")
def mozilla():
    return bundled.arrival_series()


@pytest.fixture(scope="session")
def calendar():
    return bundled.release_calendar()


@pytest.fixture(scope="session")
def mozilla_exog(mozilla, calendar):
    return build_exogenous(mozilla, calendar)


def ar2(n, a1=0.5, a2=0.3, seed=0, sd=1.0, burn=200):
    rng = np.random.default_rng(seed)
    e = rng.normal(0.0, sd, n + burn)
    y = np.zeros(n + burn)
    for t in range(2, n + burn):
        y[t] = a1 * y[t - 1] + a2 * y[t - 2] + e[t]
    return y[burn:]


class FakeBugzilla(BaseHTTPRequestHandler):
    bugs = []
    calls = 0
    fail_first = 0
    garbage = False

    def do_GET(self):
        cls = type(self)
        cls.calls += 1
        if cls.fail_first > 0:
            cls.fail_first -= 1
            self.send_response(503)
            self.end_headers()
            return
        if cls.garbage:
            body = b"<html>oops</html>"
        else:
            q = parse_qs(urlparse(self.path).query)
            lo = q["creation_time"][0]
            hi = q["v1"][0]
            chosen = [b for b in cls.bugs if lo <= b["creation_time"][:10] < hi]
            off, lim = int(q["offset"][0]), int(q["limit"][0])
            body = json.dumps({"bugs": chosen[off : off + lim]}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def tracker():
    handler = type("H", (FakeBugzilla,), {"bugs": [], "calls": 0, "fail_first": 0, "garbage": False})
    bugs = []
    for i in range(1, 26):
        created = datetime(2015, 1, 5, tzinfo=timezone.utc) + timedelta(days=i % 20, hours=i)
        resolved = created + timedelta(days=3) if i % 3 else None
        bugs.append(
            {
                "id": i,
                "creation_time": created.strftime("%Y-%m-%dT%H:%M:%SZ"),
                "cf_last_resolved": resolved.strftime("%Y-%m-%dT%H:%M:%SZ") if resolved else None,
            }
        )
    handler.bugs = bugs
    server = HTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}", handler
    server.shutdown()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
