"""Run instrumentation and machine-readable outputs.

The recorder collects propagation-delay records (optionally downsampled; the
per-pair aggregates stay exact), message counters by kind, per-node commit and
view-change timelines, and per-day tallies. At the end of a run it is frozen
into a schema-versioned JSON report plus an optional plot-ready CSV of
(sim_time_ms, node_id, chain_height, current_view) rows.

Outputs are byte-stable for a fixed (configuration, seed): keys are sorted,
row order is dispatch order, and no wall-clock data is embedded.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConsistencyError
from .ledger import digest_hex

SCHEMA_VERSION = 1

TIMESERIES_COLUMNS = ("sim_time_ms", "node_id", "chain_height", "current_view")


@dataclass
class PropagationRecord:
    kind: str
    src: int
    dst: int
    sent_at: int
    delivered_at: int

    @property
    def delay(self) -> int:
        return self.delivered_at - self.sent_at


@dataclass
class DayResult:
    day: int
    txs_scheduled: int
    txs_committed: int
    blocks_appended: dict[int, int]
    day_start_sim_time: int
    day_end_sim_time: int
    view_changes: int
    messages_by_kind: dict[str, int]
    ended_by: str  # "empty-blocks" or "guard"

    def to_dict(self) -> dict:
        return {
            "day": self.day,
            "txs_scheduled": self.txs_scheduled,
            "txs_committed": self.txs_committed,
            "blocks_appended": {str(k): v for k, v in sorted(self.blocks_appended.items())},
            "day_start_sim_time": self.day_start_sim_time,
            "day_end_sim_time": self.day_end_sim_time,
            "view_changes": self.view_changes,
            "messages_by_kind": dict(sorted(self.messages_by_kind.items())),
            "ended_by": self.ended_by,
        }


@dataclass
class RunRecorder:
    reference_node: int = 0
    record_sampling: int = 1

    message_counts: Counter = field(default_factory=Counter)
    drop_counts: Counter = field(default_factory=Counter)
    records: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)  # (src, dst) -> [count, sum, max]
    timeline: list = field(default_factory=list)    # csv rows, dispatch order
    view_change_log: list = field(default_factory=list)  # (t, node, old, new)
    commit_log: list = field(default_factory=list)       # (t, node, height, view, n_txs)
    txs_created: int = 0
    ref_committed_txids: set = field(default_factory=set)
    append_listener: object = None
    engine: object = None

    _delivery_counter: int = 0

    # -- network hooks -----------------------------------------------------

    def message_sent(self, kind: str, src: int, dst: int) -> None:
        self.message_counts[kind] += 1

    def message_dropped(self, kind: str, src: int) -> None:
        self.drop_counts[kind] += 1

    def record_delivery(self, rec: PropagationRecord) -> None:
        key = (rec.src, rec.dst)
        agg = self.aggregates.get(key)
        if agg is None:
            self.aggregates[key] = [1, rec.delay, rec.delay]
        else:
            agg[0] += 1
            agg[1] += rec.delay
            agg[2] = max(agg[2], rec.delay)
        self._delivery_counter += 1
        if (self._delivery_counter - 1) % self.record_sampling == 0:
            self.records.append(rec)

    # -- node hooks ----------------------------------------------------------

    def tx_created(self, tx) -> None:
        self.txs_created += 1

    def on_append(self, node: int, block, view: int) -> None:
        t = self.engine.now if self.engine is not None else 0
        self.commit_log.append((t, node, block.height, view, len(block.txs)))
        self.timeline.append((t, node, block.height, view))
        if node == self.reference_node:
            self.ref_committed_txids.update(tx.tx_id for tx in block.txs)
        if self.append_listener is not None:
            self.append_listener(node, block)

    def on_view_adopted(self, node: int, old: int, new: int, height: int) -> None:
        t = self.engine.now if self.engine is not None else 0
        self.view_change_log.append((t, node, old, new))
        self.timeline.append((t, node, height, new))

    # -- aggregate views ------------------------------------------------------

    def aggregate_table(self) -> dict:
        out = {}
        for (src, dst), (count, total, peak) in sorted(self.aggregates.items()):
            out[f"{src}->{dst}"] = {
                "count": count,
                "mean_ms": round(total / count, 3),
                "max_ms": peak,
            }
        return out

    def view_changes_of(self, node: int) -> list:
        return [(t, old, new) for (t, n, old, new) in self.view_change_log if n == node]


def node_chain_summary(node_id: int, chain, per_day_counts: dict[int, int]) -> dict:
    digests = [digest_hex(d) for d in chain.digests_beyond_genesis()]
    return {
        "node": node_id,
        "block_count": len(digests),
        "block_digests": digests,
        "per_day_blocks": {str(d): c for d, c in sorted(per_day_counts.items())},
    }


def check_benign_consistency(summaries: list[dict], benign: set[int]) -> None:
    """All benign digest lists must agree on every shared height."""
    lists = [(s["node"], s["block_digests"]) for s in summaries if s["node"] in benign]
    if not lists:
        return
    longest = max(lists, key=lambda kv: len(kv[1]))
    for node, digests in lists:
        if digests != longest[1][: len(digests)]:
            raise ConsistencyError(
                f"benign nodes {node} and {longest[0]} disagree on a committed block"
            )


def build_report(config_echo: dict, seed: int, days: list[DayResult],
                 summaries: list[dict], recorder: RunRecorder,
                 benign: set[int]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "config": config_echo,
        "benign_nodes": sorted(benign),
        "reference_node": recorder.reference_node,
        "days": [d.to_dict() for d in days],
        "nodes": summaries,
        "messages_by_kind": dict(sorted(recorder.message_counts.items())),
        "drops_by_kind": dict(sorted(recorder.drop_counts.items())),
        "propagation": {
            "aggregates": recorder.aggregate_table(),
            "sampling": recorder.record_sampling,
            "records": [
                {"kind": r.kind, "src": r.src, "dst": r.dst,
                 "sent_at": r.sent_at, "delivered_at": r.delivered_at}
                for r in recorder.records
            ],
        },
        "view_changes": [
            {"at": t, "node": n, "from": old, "to": new}
            for (t, n, old, new) in recorder.view_change_log
        ],
        "totals": {
            "txs_created": recorder.txs_created,
            "txs_committed": len(recorder.ref_committed_txids),
            "txs_scheduled": sum(d.txs_scheduled for d in days),
        },
    }


def emit_json(report: dict, path: str | Path, benign: set[int] | None = None) -> None:
    """Serialize the report; refuses to write if benign chains disagree."""
    benign = set(report["benign_nodes"]) if benign is None else benign
    check_benign_consistency(report["nodes"], benign)
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def emit_timeseries_csv(recorder: RunRecorder, path: str | Path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TIMESERIES_COLUMNS)
            for row in recorder.timeline:
                writer.writerow(row)
    except OSError as exc:
        raise OSError(f"cannot write timeseries to {path}: {exc}") from exc
