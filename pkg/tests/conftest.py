import json
import sys
from pathlib import Path

import pytest

from fairnets.corpus import build_corpus

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"
CORPUS = FIXTURES / "corpus"
EVAL_CORPUS = FIXTURES / "eval_corpus"
ROBUSTNESS = FIXTURES / "robustness"
HTTP = FIXTURES / "http"
MAPPING = FIXTURES / "mapping"

# fixture generators double as data modules
sys.path.insert(0, str(FIXTURES))


class FakeResponse:
    def __init__(self, status: int, body, headers=None):
        self.status_code = status
        self._body = body
        self.headers = headers or {}

    def json(self):
        if isinstance(self._body, (dict, list)):
            return self._body
        return json.loads(self._body)


class ReplaySession:
    """Serves recorded API responses keyed by path; a list value replays in order."""

    def __init__(self, routes: dict, base: str = "https://api.github.com"):
        self.routes = {k: list(v) if isinstance(v, list) else v for k, v in routes.items()}
        self.base = base
        self.calls: list[str] = []

    def get(self, url, headers=None, timeout=None):
        path = url[len(self.base):] if url.startswith(self.base) else url
        self.calls.append(path)
        entry = self.routes.get(path)
        if entry is None:
            return FakeResponse(404, {"message": "Not Found"})
        if isinstance(entry, list):
            entry = entry.pop(0) if len(entry) > 1 else entry[0]
        return FakeResponse(entry["status"], entry.get("json"), entry.get("headers"))


def load_routes(name: str) -> dict:
    return json.loads((HTTP / name).read_text())


@pytest.fixture
def replay():
    def make(*names: str) -> ReplaySession:
        routes = {}
        for n in names:
            routes.update(load_routes(n))
        return ReplaySession(routes)

    return make


@pytest.fixture(scope="session")
def corpus_build():
    return build_corpus(CORPUS)


@pytest.fixture(scope="session")
def corpus_graph(corpus_build):
    return corpus_build.graph


@pytest.fixture(scope="session")
def corpus_merged(corpus_build):
    return corpus_build.merged


# one line per acceptance criterion, echoed after the run regardless of capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
