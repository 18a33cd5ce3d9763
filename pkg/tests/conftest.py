"""Shared fakes: a deterministic clock, canned HTTP responses, and a
scripted session that records request timing."""
from __future__ import annotations

import json
from datetime import datetime, timezone
from xml.sax.saxutils import escape

import pytest

from repoharvest.github import RepoMetrics
from repoharvest.links import RepoRef

_UNSET = object()


class FakeClock:
    """Callable monotonic clock whose sleep() just advances time."""

    def __init__(self, start: float = 0.0) -> None:
        self.now = start
        self.sleeps: list[float] = []

    def __call__(self) -> float:
        return self.now

    def sleep(self, seconds: float) -> None:
        assert seconds >= 0, f"negative sleep {seconds}"
        self.sleeps.append(seconds)
        self.now += seconds

    def advance(self, seconds: float) -> None:
        self.now += seconds


class FakeResponse:
    """Just enough of requests.Response for the clients under test."""

    def __init__(self, status_code=200, json_body=_UNSET, text="", headers=None):
        self.status_code = status_code
        self.headers = dict(headers or {})
        if json_body is not _UNSET:
            self.text = json.dumps(json_body)
        else:
            self.text = text
        self.content = self.text.encode("utf-8")

    def json(self):
        return json.loads(self.text)


class FakeSession:
    """Scripted HTTP session.

    ``handler(url, params)`` returns the next FakeResponse (or raises).
    Every call is recorded as (clock_time, url, params) so tests can check
    both ordering and spacing.
    """

    def __init__(self, handler, clock=None):
        self._handler = handler
        self._clock = clock
        self.calls: list[tuple[float, str, dict | None]] = []

    def get(self, url, params=None, **kwargs):
        at = self._clock() if self._clock is not None else 0.0
        self.calls.append((at, url, dict(params) if params else None))
        return self._handler(url, params)

    @property
    def times(self) -> list[float]:
        return [at for at, _, _ in self.calls]


def atom_entry(arxiv_id: str, title: str = "", abstract: str = "",
               published: str = "2021-06-01T00:00:00Z") -> str:
    return (
        "<entry>"
        f"<id>http://arxiv.org/abs/{arxiv_id}</id>"
        f"<title>{escape(title)}</title>"
        f"<summary>{escape(abstract)}</summary>"
        f"<published>{published}</published>"
        "</entry>"
    )


def atom_feed(entries: list[str], total: int | None = None) -> str:
    total_el = (
        f'<opensearch:totalResults xmlns:opensearch='
        f'"http://a9.com/-/spec/opensearch/1.1/">{total}</opensearch:totalResults>'
        if total is not None
        else ""
    )
    return (
        '<?xml version="1.0" encoding="UTF-8"?>'
        '<feed xmlns="http://www.w3.org/2005/Atom">'
        f"{total_el}{''.join(entries)}</feed>"
    )


def make_ref(owner="octo", name="spoon", sources=()) -> RepoRef:
    return RepoRef(
        owner=owner,
        name=name,
        canonical_url=f"https://github.com/{owner}/{name}",
        source_papers=frozenset(sources),
    )


def make_metrics(
    name="spoon",
    stars=0,
    forks=0,
    open_issues=0,
    contributors=1,
    description=None,
    fetched_at=None,
) -> RepoMetrics:
    return RepoMetrics(
        name=name,
        description=description,
        stars=stars,
        forks=forks,
        open_issues=open_issues,
        contributors=contributors,
        fetched_at=fetched_at or datetime(2024, 1, 1, tzinfo=timezone.utc),
    )


@pytest.fixture
def fake_clock() -> FakeClock:
    return FakeClock()
