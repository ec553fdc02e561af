"""Per-node, per-day transaction loads and periodic injection.

Schedule file schema (JSON):

    {"days": [{"day": 1, "loads": {"1": 5, "2": 14}}, ...]}

Day indices start at 1 and every node key must exist in the node table.
A day's count for a node is divided evenly across the policy's injection
ticks, remainder front-loaded; the first tick fires one broadcast interval
after the day starts, so no transaction is broadcast before block production
begins.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ScheduleError
from .ledger import Transaction


@dataclass(frozen=True)
class LoadSchedule:
    """counts[day][node_id] -> number of transactions to create."""

    counts: dict[int, dict[int, int]]

    @property
    def days(self) -> list[int]:
        return sorted(self.counts)

    def loads_for(self, day: int) -> dict[int, int]:
        if day not in self.counts:
            raise ScheduleError("day out of schedule range", day=day)
        return self.counts[day]

    def total(self) -> int:
        return sum(sum(v.values()) for v in self.counts.values())


@dataclass(frozen=True)
class BroadcastPolicy:
    interval_ms: int
    spread_ticks: int = 10

    def __post_init__(self):
        if self.interval_ms <= 0:
            raise ScheduleError(f"broadcast interval must be > 0, got {self.interval_ms}")
        if self.spread_ticks < 1:
            raise ScheduleError(f"spread_ticks must be >= 1, got {self.spread_ticks}")

    def batches(self, count: int) -> list[int]:
        """Split a day's count across ticks, remainder front-loaded."""
        if count <= 0:
            return []
        ticks = min(self.spread_ticks, count)
        base, extra = divmod(count, ticks)
        return [base + (1 if i < extra else 0) for i in range(ticks)]


def parse_schedule(data: dict, known_nodes: set[int] | None = None) -> LoadSchedule:
    if not isinstance(data, dict) or "days" not in data:
        raise ScheduleError("schedule must be an object with a 'days' list")
    counts: dict[int, dict[int, int]] = {}
    for entry in data["days"]:
        day = entry.get("day")
        if not isinstance(day, int) or day < 1:
            raise ScheduleError(f"bad day index {day!r}", day=day)
        if day in counts:
            raise ScheduleError("duplicate day entry", day=day)
        loads: dict[int, int] = {}
        for node_key, n in entry.get("loads", {}).items():
            try:
                node = int(node_key)
            except (TypeError, ValueError):
                raise ScheduleError("node key is not an integer", day=day, node=node_key)
            if known_nodes is not None and node not in known_nodes:
                raise ScheduleError("unknown node in schedule", day=day, node=node)
            if not isinstance(n, int) or n < 0:
                raise ScheduleError(f"count must be a non-negative integer, got {n!r}",
                                    day=day, node=node)
            loads[node] = n
        counts[day] = loads
    return LoadSchedule(counts)


def load_schedule(path: str | Path, known_nodes: set[int] | None = None) -> LoadSchedule:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScheduleError(f"schedule file {path} is not valid JSON: {exc}")
    return parse_schedule(data, known_nodes)


class TransactionPool:
    """Pending transactions at one node, drained FIFO by (created_at, tx_id)."""

    def __init__(self):
        self._txs: dict[int, Transaction] = {}

    def __len__(self) -> int:
        return len(self._txs)

    def __contains__(self, tx_id: int) -> bool:
        return tx_id in self._txs

    def add(self, tx: Transaction) -> None:
        self._txs.setdefault(tx.tx_id, tx)

    def discard(self, tx_ids) -> None:
        for tx_id in tx_ids:
            self._txs.pop(tx_id, None)

    def take_batch(self, capacity: int) -> tuple[Transaction, ...]:
        """Remove and return up to `capacity` transactions in creation order."""
        if capacity <= 0:
            raise ValueError("block capacity must be positive")
        batch = sorted(self._txs.values(), key=lambda t: (t.created_at, t.tx_id))[:capacity]
        for tx in batch:
            del self._txs[tx.tx_id]
        return tuple(batch)
