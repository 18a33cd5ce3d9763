"""Request pacing shared by the HTTP clients.

A RequestGate serializes outbound requests and keeps a minimum interval
between consecutive ones. Server-supplied delays (retry-after hints, quota
resets) are folded in through defer().
"""
from __future__ import annotations

import threading
import time
from typing import Callable


class RequestGate:
    """Single gate all outbound requests of one client pass through.

    wait() blocks until the next request slot opens, then reserves the
    following slot ``min_interval`` later. Calls serialize under a lock, so
    requests form a total order. The clock and sleep functions are
    injectable so tests can drive a fake clock.
    """

    def __init__(
        self,
        min_interval: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if min_interval < 0:
            raise ValueError("min_interval must be >= 0")
        self.min_interval = min_interval
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._not_before = 0.0

    def wait(self) -> None:
        """Block until a request may go out, then reserve the next slot."""
        with self._lock:
            now = self._clock()
            if now < self._not_before:
                self._sleep(self._not_before - now)
            self._not_before = self._clock() + self.min_interval

    def defer(self, delay: float) -> None:
        """Push the next allowed request to at least ``delay`` from now."""
        if delay <= 0:
            return
        with self._lock:
            self._not_before = max(self._not_before, self._clock() + delay)
