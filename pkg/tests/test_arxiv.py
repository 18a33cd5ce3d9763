"""Feed client: query construction, parsing, paging, retries, politeness."""
from __future__ import annotations

from datetime import date

import pytest
from hypothesis import given, strategies as st

from conftest import FakeClock, FakeResponse, FakeSession, atom_entry, atom_feed
from repoharvest.arxiv import (
    ArxivClient,
    ArxivRequestError,
    FeedParseError,
    PaperRecord,
    SearchSpec,
    SearchSpecError,
    build_query,
    default_spec,
    normalize_date_range,
)

EXPECTED_DEFAULT_QUERY = (
    "ti:clinical informatics OR abs:clinical informatics OR "
    "ti:healthcare data analytics OR abs:healthcare data analytics OR "
    "ti:electronic health records OR abs:electronic health records OR "
    "ti:medical software development OR abs:medical software development "
    "AND submittedDate:[2019 TO 2024]"
)


def _client(handler, clock=None, delay=0.0, **kwargs):
    clock = clock or FakeClock()
    session = FakeSession(handler, clock=clock)
    client = ArxivClient(
        base_url="http://feed.test/api/query",
        delay=delay,
        session=session,
        clock=clock,
        sleep=clock.sleep,
        **kwargs,
    )
    return client, session, clock


class TestBuildQuery:
    def test_default_query_string_exact(self):
        assert build_query(default_spec()) == EXPECTED_DEFAULT_QUERY

    def test_single_term(self):
        spec = SearchSpec(terms=("sepsis prediction",), date_from=2020, date_to=2021)
        assert build_query(spec) == (
            "ti:sepsis prediction OR abs:sepsis prediction"
            " AND submittedDate:[2020 TO 2021]"
        )

    def test_terms_are_trimmed(self):
        spec = SearchSpec(terms=("  icu mortality  ",))
        assert build_query(spec).startswith("ti:icu mortality OR abs:icu mortality")

    @given(st.lists(st.sampled_from(["alpha", "beta gamma", "delta"]),
                    min_size=1, max_size=6))
    def test_clause_count_scales_with_terms(self, terms):
        query = build_query(SearchSpec(terms=tuple(terms)))
        assert query.count(" OR ") == 2 * len(terms) - 1
        assert query.count("ti:") == len(terms)
        assert query.count("abs:") == len(terms)
        assert query.endswith(" AND submittedDate:[2019 TO 2024]")

    def test_normalize_date_range_rewrites_years(self):
        normalized = normalize_date_range(EXPECTED_DEFAULT_QUERY)
        assert normalized.endswith(
            "AND submittedDate:[201901010000 TO 202412312359]"
        )
        assert "submittedDate:[2019 TO 2024]" not in normalized


class TestSearchSpecValidation:
    @pytest.mark.parametrize("kwargs", [
        {"terms": ()},
        {"terms": ("ok", "   ")},
        {"terms": ("ok",), "date_from": 2025, "date_to": 2024},
        {"terms": ("ok",), "max_results": 0},
        {"terms": ("ok",), "page_size": 0},
        {"terms": ("ok",), "max_results": 10, "page_size": 11},
    ])
    def test_bad_specs_rejected(self, kwargs):
        with pytest.raises(SearchSpecError):
            SearchSpec(**kwargs)

    def test_good_spec_accepted(self):
        spec = SearchSpec(terms=("a",), max_results=10, page_size=10)
        assert spec.page_size == 10


class TestFetchPage:
    def test_parses_three_entry_feed(self):
        feed = atom_feed(
            [
                atom_entry("2101.00001", "First title", "First abstract",
                           "2021-01-05T10:00:00Z"),
                atom_entry("2102.00002v2", "Second", "Body two",
                           "2021-02-06T00:00:00Z"),
                atom_entry("2103.00003", "Third", "Body three",
                           "2021-03-07T23:59:59Z"),
            ],
            total=3,
        )
        client, _, _ = _client(lambda url, params: FakeResponse(text=feed))
        records = client.fetch_page("q", 0, 10)
        assert records == [
            PaperRecord("2101.00001", "First title", "First abstract", date(2021, 1, 5)),
            PaperRecord("2102.00002v2", "Second", "Body two", date(2021, 2, 6)),
            PaperRecord("2103.00003", "Third", "Body three", date(2021, 3, 7)),
        ]
        assert client.last_total_results == 3

    def test_request_params(self):
        feed = atom_feed([], total=0)
        client, session, _ = _client(lambda url, params: FakeResponse(text=feed))
        client.fetch_page("some query", 40, 20)
        _, url, params = session.calls[0]
        assert url == "http://feed.test/api/query"
        assert params == {"search_query": "some query", "start": 40, "max_results": 20}

    def test_normalize_dates_rewrites_outgoing_query_only(self):
        feed = atom_feed([], total=0)
        client, session, _ = _client(
            lambda url, params: FakeResponse(text=feed), normalize_dates=True
        )
        client.fetch_page(EXPECTED_DEFAULT_QUERY, 0, 10)
        sent = session.calls[0][2]["search_query"]
        assert sent.endswith("submittedDate:[201901010000 TO 202412312359]")

    def test_empty_feed(self):
        client, _, _ = _client(lambda url, params: FakeResponse(text=atom_feed([], total=0)))
        assert client.fetch_page("q", 0, 10) == []
        assert client.last_total_results == 0

    def test_entry_missing_id_names_position(self):
        bad = atom_feed([
            atom_entry("2101.00001"),
            "<entry><title>no id</title><published>2021-01-01T00:00:00Z</published></entry>",
        ])
        client, _, _ = _client(lambda url, params: FakeResponse(text=bad))
        with pytest.raises(FeedParseError, match="entry 1"):
            client.fetch_page("q", 0, 10)

    def test_bad_published_date_names_position(self):
        bad = atom_feed([
            "<entry><id>http://arxiv.org/abs/x</id><published>not-a-date</published></entry>",
        ])
        client, _, _ = _client(lambda url, params: FakeResponse(text=bad))
        with pytest.raises(FeedParseError, match="entry 0"):
            client.fetch_page("q", 0, 10)

    def test_non_xml_body(self):
        client, _, _ = _client(lambda url, params: FakeResponse(text="<html>boom"))
        with pytest.raises(FeedParseError):
            client.fetch_page("q", 0, 10)

    def test_invalid_paging_arguments(self):
        client, _, _ = _client(lambda url, params: FakeResponse(text=atom_feed([])))
        with pytest.raises(SearchSpecError):
            client.fetch_page("q", -1, 10)
        with pytest.raises(SearchSpecError):
            client.fetch_page("q", 0, 0)

    def test_http_error_carries_status(self):
        client, _, _ = _client(lambda url, params: FakeResponse(status_code=500, text="x"))
        with pytest.raises(ArxivRequestError) as excinfo:
            client.fetch_page("q", 0, 10)
        assert excinfo.value.status == 500
        assert excinfo.value.retryable


class TestIteratePapers:
    def _paged_handler(self, n_papers, page_size_expected=None, fail_first=0):
        entries = [atom_entry(f"id{i:04d}", f"t{i}", f"a{i}") for i in range(n_papers)]
        state = {"fails": fail_first}

        def handler(url, params):
            if state["fails"] > 0:
                state["fails"] -= 1
                return FakeResponse(status_code=503, text="busy")
            start = params["start"]
            count = params["max_results"]
            if page_size_expected is not None:
                assert count == page_size_expected
            return FakeResponse(text=atom_feed(entries[start:start + count],
                                               total=n_papers))

        return handler

    def test_three_pages_for_thirteen_papers(self):
        client, session, _ = _client(self._paged_handler(13))
        spec = SearchSpec(terms=("x",), max_results=100, page_size=5)
        records = list(client.iterate_papers(spec))
        assert len(records) == 13
        assert [p[2]["start"] for p in session.calls] == [0, 5, 10]
        assert client.last_total_results == 13

    def test_stops_at_max_results_without_extra_request(self):
        client, session, _ = _client(self._paged_handler(50))
        spec = SearchSpec(terms=("x",), max_results=6, page_size=3)
        records = list(client.iterate_papers(spec))
        assert len(records) == 6
        assert len(session.calls) == 2

    def test_exact_page_boundary_stops_on_short_page(self):
        client, session, _ = _client(self._paged_handler(10))
        spec = SearchSpec(terms=("x",), max_results=100, page_size=5)
        assert len(list(client.iterate_papers(spec))) == 10
        # third request returns the empty short page and ends iteration
        assert len(session.calls) == 3

    def test_duplicate_ids_across_pages_are_skipped(self):
        first = [atom_entry("dup", "t", "a"), atom_entry("u1", "t", "a")]
        second = [atom_entry("dup", "t", "a")]

        def handler(url, params):
            page = first if params["start"] == 0 else second
            return FakeResponse(text=atom_feed(page, total=3))

        client, _, _ = _client(handler)
        spec = SearchSpec(terms=("x",), max_results=10, page_size=2)
        ids = [r.arxiv_id for r in client.iterate_papers(spec)]
        assert ids == ["dup", "u1"]

    def test_politeness_delay_between_page_requests(self):
        clock = FakeClock()
        client, session, clock = _client(self._paged_handler(9), clock=clock, delay=3.0)
        spec = SearchSpec(terms=("x",), max_results=100, page_size=3)
        list(client.iterate_papers(spec))
        times = session.times
        assert len(times) >= 3
        for earlier, later in zip(times, times[1:]):
            assert later - earlier >= 3.0

    def test_retries_server_errors_then_succeeds(self):
        client, session, _ = _client(self._paged_handler(2, fail_first=2))
        spec = SearchSpec(terms=("x",), max_results=10, page_size=5)
        records = list(client.iterate_papers(spec))
        assert len(records) == 2
        assert len(session.calls) == 3  # two 503s then the good page

    def test_retry_budget_exhausted_raises(self):
        client, session, _ = _client(self._paged_handler(2, fail_first=5))
        spec = SearchSpec(terms=("x",), max_results=10, page_size=5)
        with pytest.raises(ArxivRequestError):
            list(client.iterate_papers(spec))
        assert len(session.calls) == 3  # first attempt + 2 retries

    def test_client_error_is_not_retried(self):
        calls = []

        def handler(url, params):
            calls.append(url)
            return FakeResponse(status_code=400, text="bad request")

        client, _, _ = _client(handler)
        spec = SearchSpec(terms=("x",), max_results=10, page_size=5)
        with pytest.raises(ArxivRequestError):
            list(client.iterate_papers(spec))
        assert len(calls) == 1

    def test_retry_after_hint_is_honored(self):
        state = {"first": True}
        entries = [atom_entry("a", "t", "b")]

        def handler(url, params):
            if state["first"]:
                state["first"] = False
                return FakeResponse(status_code=503, text="busy",
                                    headers={"Retry-After": "25"})
            return FakeResponse(text=atom_feed(entries, total=1))

        clock = FakeClock()
        client, session, clock = _client(handler, clock=clock, delay=0.0)
        list(client.iterate_papers(SearchSpec(terms=("x",), max_results=5, page_size=5)))
        times = session.times
        assert times[1] - times[0] >= 25.0


class TestPaperRecordSerialization:
    @given(
        arxiv_id=st.from_regex(r"[0-9]{4}\.[0-9]{5}(v[0-9])?", fullmatch=True),
        title=st.text(max_size=80),
        abstract=st.text(max_size=200),
        submitted=st.dates(min_value=date(1991, 1, 1), max_value=date(2030, 12, 31)),
    )
    def test_round_trip(self, arxiv_id, title, abstract, submitted):
        record = PaperRecord(arxiv_id, title, abstract, submitted)
        assert PaperRecord.from_dict(record.to_dict()) == record
