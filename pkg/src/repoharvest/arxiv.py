"""arXiv metadata retrieval.

Builds the search query, pages through the Atom feed endpoint, and parses
entries into PaperRecord values. A politeness delay separates consecutive
requests; transport and 5xx failures are retried with doubling backoff.
"""
from __future__ import annotations

import re
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import date
from typing import Callable, Iterator, Optional, Sequence

import requests

from .throttle import RequestGate

DEFAULT_BASE_URL = "http://export.arxiv.org/api/query"

DEFAULT_TERMS = (
    "clinical informatics",
    "healthcare data analytics",
    "electronic health records",
    "medical software development",
)
DEFAULT_DATE_FROM = 2019
DEFAULT_DATE_TO = 2024
DEFAULT_MAX_RESULTS = 1000
DEFAULT_PAGE_SIZE = 100
DEFAULT_DELAY = 3.0

_ATOM = "{http://www.w3.org/2005/Atom}"
_OPENSEARCH = "{http://a9.com/-/spec/opensearch/1.1/}"

_DATE_RANGE = re.compile(r"submittedDate:\[(\d{4}) TO (\d{4})\]")


class SearchSpecError(ValueError):
    """A search parameter violates its invariant."""


class ArxivRequestError(Exception):
    """A feed request failed; carries the HTTP status when there was one."""

    def __init__(
        self,
        detail: str,
        status: Optional[int] = None,
        retryable: bool = False,
        retry_after: Optional[float] = None,
    ) -> None:
        super().__init__(detail)
        self.status = status
        self.retryable = retryable
        self.retry_after = retry_after


class FeedParseError(Exception):
    """The Atom response could not be parsed."""


@dataclass(frozen=True)
class SearchSpec:
    """Search phrases, submission-year range, and paging bounds."""

    terms: tuple[str, ...]
    date_from: int = DEFAULT_DATE_FROM
    date_to: int = DEFAULT_DATE_TO
    max_results: int = DEFAULT_MAX_RESULTS
    page_size: int = DEFAULT_PAGE_SIZE

    def __post_init__(self) -> None:
        trimmed = tuple(str(t).strip() for t in self.terms)
        object.__setattr__(self, "terms", trimmed)
        if not trimmed:
            raise SearchSpecError("terms must be non-empty")
        if any(not t for t in trimmed):
            raise SearchSpecError("each term must be non-empty after trimming whitespace")
        if self.date_from > self.date_to:
            raise SearchSpecError("date_from must not exceed date_to")
        if self.max_results < 1:
            raise SearchSpecError("max_results must be >= 1")
        if not 1 <= self.page_size <= self.max_results:
            raise SearchSpecError("page_size must be between 1 and max_results")


def default_spec(
    max_results: int = DEFAULT_MAX_RESULTS, page_size: int = DEFAULT_PAGE_SIZE
) -> SearchSpec:
    """The stock search: four subject phrases over 2019-2024."""
    return SearchSpec(
        terms=DEFAULT_TERMS, max_results=max_results, page_size=page_size
    )


@dataclass(frozen=True)
class PaperRecord:
    """One paper's metadata as parsed from the feed."""

    arxiv_id: str
    title: str
    abstract: str
    submitted: date

    def to_dict(self) -> dict:
        return {
            "arxiv_id": self.arxiv_id,
            "title": self.title,
            "abstract": self.abstract,
            "submitted": self.submitted.isoformat(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PaperRecord":
        return cls(
            arxiv_id=data["arxiv_id"],
            title=data["title"],
            abstract=data["abstract"],
            submitted=date.fromisoformat(data["submitted"]),
        )


def build_query(spec: SearchSpec) -> str:
    """Expand the spec into the feed query string.

    Each phrase becomes a ti:/abs: clause pair, OR-joined, followed by the
    submittedDate range. Identical specs produce identical strings.
    """
    clauses = " OR ".join(f"ti:{t} OR abs:{t}" for t in spec.terms)
    return f"{clauses} AND submittedDate:[{spec.date_from} TO {spec.date_to}]"


def normalize_date_range(query: str) -> str:
    """Rewrite a bare-year submittedDate range into the timestamp form the
    live endpoint accepts (YYYYMMDDHHMM bounds covering the whole years)."""
    return _DATE_RANGE.sub(
        lambda m: f"submittedDate:[{m.group(1)}01010000 TO {m.group(2)}12312359]",
        query,
    )


class ArxivClient:
    """Feed client with paging, politeness delay, and retry budget.

    ``max_retries`` counts retries after the first attempt (the default of
    2 allows three attempts in total). ``session``, ``clock``, and
    ``sleep`` are injectable for tests.
    """

    def __init__(
        self,
        base_url: str = DEFAULT_BASE_URL,
        delay: float = DEFAULT_DELAY,
        max_retries: int = 2,
        backoff_base: float = 1.0,
        normalize_dates: bool = False,
        session=None,
        timeout: float = 30.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.base_url = base_url
        self.normalize_dates = normalize_dates
        self.max_retries = max_retries
        self._backoff_base = backoff_base
        self._session = session if session is not None else requests.Session()
        self._timeout = timeout
        self._gate = RequestGate(delay, clock=clock, sleep=sleep)
        #: Total result count reported by the most recent page, if any.
        self.last_total_results: Optional[int] = None

    def fetch_page(self, query: str, start: int, page_size: int) -> list[PaperRecord]:
        """Issue one feed request and parse its entries, in feed order."""
        if start < 0:
            raise SearchSpecError("start must be >= 0")
        if page_size < 1:
            raise SearchSpecError("page_size must be >= 1")
        send_query = normalize_date_range(query) if self.normalize_dates else query
        params = {"search_query": send_query, "start": start, "max_results": page_size}
        self._gate.wait()
        try:
            response = self._session.get(self.base_url, params=params, timeout=self._timeout)
        except requests.RequestException as exc:
            raise ArxivRequestError(
                f"transport failure: {exc}", retryable=True
            ) from exc
        if response.status_code != 200:
            retry_after = None
            header = response.headers.get("Retry-After")
            if header is not None:
                try:
                    retry_after = max(0.0, float(header))
                except ValueError:
                    retry_after = None
            raise ArxivRequestError(
                f"HTTP {response.status_code} from feed endpoint",
                status=response.status_code,
                retryable=response.status_code >= 500,
                retry_after=retry_after,
            )
        return self._parse_feed(response.text)

    def _parse_feed(self, text: str) -> list[PaperRecord]:
        try:
            root = ET.fromstring(text)
        except ET.ParseError as exc:
            raise FeedParseError(f"feed is not well-formed XML: {exc}") from exc
        total = root.findtext(f"{_OPENSEARCH}totalResults")
        if total is not None and total.strip().isdigit():
            self.last_total_results = int(total.strip())
        records = []
        for index, entry in enumerate(root.findall(f"{_ATOM}entry")):
            raw_id = (entry.findtext(f"{_ATOM}id") or "").strip()
            if not raw_id:
                raise FeedParseError(f"entry {index}: missing <id>")
            arxiv_id = raw_id.rsplit("/abs/", 1)[-1]
            published = (entry.findtext(f"{_ATOM}published") or "").strip()
            try:
                submitted = date.fromisoformat(published[:10])
            except ValueError:
                raise FeedParseError(
                    f"entry {index}: bad <published> date {published!r}"
                ) from None
            records.append(
                PaperRecord(
                    arxiv_id=arxiv_id,
                    title=(entry.findtext(f"{_ATOM}title") or "").strip(),
                    abstract=(entry.findtext(f"{_ATOM}summary") or "").strip(),
                    submitted=submitted,
                )
            )
        return records

    def _fetch_with_retry(self, query: str, start: int, page_size: int) -> list[PaperRecord]:
        backoff = self._backoff_base
        attempt = 0
        while True:
            try:
                return self.fetch_page(query, start, page_size)
            except ArxivRequestError as exc:
                if not exc.retryable or attempt >= self.max_retries:
                    raise
                delay = backoff if exc.retry_after is None else max(backoff, exc.retry_after)
                self._gate.defer(delay)
                backoff *= 2
                attempt += 1

    def iterate_papers(self, spec: SearchSpec) -> Iterator[PaperRecord]:
        """Stream records page by page until the cap or a short page.

        Yields at most ``spec.max_results`` records and never issues another
        request once the cap is reached. Repeated ids (a shifting feed) are
        skipped so ids are unique within one run.
        """
        query = build_query(spec)
        seen: set[str] = set()
        yielded = 0
        start = 0
        while yielded < spec.max_results:
            records = self._fetch_with_retry(query, start, spec.page_size)
            for record in records:
                if record.arxiv_id in seen:
                    continue
                seen.add(record.arxiv_id)
                yield record
                yielded += 1
                if yielded >= spec.max_results:
                    return
            if len(records) < spec.page_size:
                return
            start += spec.page_size
