"""Deterministic seeded discrete-event core.

A simulated millisecond clock, a (fire_at, seq)-ordered event queue, and a run
loop that dispatches events to registered handlers. Ties at the same
fire_at are broken by insertion sequence number, which makes the full event
trace a deterministic function of (configuration, seed).

Randomness is never drawn from a global generator: every (node, purpose) pair
owns an independent named stream, so adding or removing one node cannot
perturb the draws of any other node.
"""

from __future__ import annotations

import heapq
import zlib
from itertools import count
from typing import Any, Callable, Optional

import numpy as np

SimTime = int  # milliseconds of simulated time
EventId = int

# Reserved pseudo-node id for orchestrator-level control events
# (proposal ticks, injections, elections). Real node ids are >= 1.
COORDINATOR = 0


class RngStreams:
    """Independent, reproducible RNG streams keyed by (node id, purpose tag)."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be a non-negative integer")
        self.seed = seed
        self._streams: dict[tuple[int, str], np.random.Generator] = {}

    def stream(self, node_id: int, purpose: str) -> np.random.Generator:
        key = (node_id, purpose)
        gen = self._streams.get(key)
        if gen is None:
            # crc32 gives a platform-stable integer for the purpose tag
            # (python's hash() is salted per process and would break replay).
            tag = zlib.crc32(purpose.encode("utf-8"))
            gen = np.random.default_rng(np.random.SeedSequence([self.seed, node_id, tag]))
            self._streams[key] = gen
        return gen


class EventEngine:
    """Single-threaded event loop with integer-millisecond time."""

    def __init__(self):
        self.now: SimTime = 0
        self._heap: list[tuple[int, int, int, Any]] = []
        self._seq = count()
        self._handlers: dict[int, Callable[[Any], None]] = {}
        self._stop_requested = False
        self.scheduled_count = 0
        self.dispatched_count = 0
        self.discarded_count = 0

    def register(self, target: int, handler: Callable[[Any], None]) -> None:
        self._handlers[target] = handler

    def schedule(self, delay: int, target: int, payload: Any) -> EventId:
        """Enqueue `payload` for `target` at now() + delay. Rejects negative delay."""
        if delay < 0:
            raise ValueError(f"cannot schedule into the past (delay={delay})")
        seq = next(self._seq)
        heapq.heappush(self._heap, (self.now + int(delay), seq, target, payload))
        self.scheduled_count += 1
        return seq

    def pending(self) -> int:
        return len(self._heap)

    def request_stop(self) -> None:
        """Ask the run loop to exit after the current event; pending events are discarded."""
        self._stop_requested = True

    def run_until_idle(
        self,
        deadline: Optional[SimTime] = None,
        stop_condition: Optional[Callable[[], bool]] = None,
    ) -> SimTime:
        """Dispatch events in (fire_at, seq) order until the queue empties.

        Exits early, discarding whatever remains queued, when `request_stop`
        was called, when `stop_condition()` returns true after an event, or
        when the next event would fire past `deadline`.
        Returns the final clock value.
        """
        self._stop_requested = False
        while self._heap:
            fire_at = self._heap[0][0]
            if deadline is not None and fire_at > deadline:
                self._discard_pending()
                break
            fire_at, _seq, target, payload = heapq.heappop(self._heap)
            assert fire_at >= self.now, "clock monotonicity violated"
            self.now = fire_at
            self.dispatched_count += 1
            handler = self._handlers.get(target)
            if handler is None:
                raise KeyError(f"no handler registered for event target {target}")
            handler(payload)
            if self._stop_requested or (stop_condition is not None and stop_condition()):
                self._discard_pending()
                break
        return self.now

    def advance_to(self, t: SimTime) -> SimTime:
        """Fast-forward the clock to t without dispatching anything."""
        if t < self.now:
            raise ValueError(f"cannot advance to t={t} before now={self.now}")
        if self._heap and self._heap[0][0] < t:
            raise ValueError(
                f"cannot skip over pending event at t={self._heap[0][0]} when advancing to {t}"
            )
        self.now = t
        return self.now

    def _discard_pending(self) -> None:
        self.discarded_count += len(self._heap)
        self._heap.clear()
