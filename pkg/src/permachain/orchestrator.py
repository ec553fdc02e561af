"""Multi-day simulation driver.

Builds the world (engine, network, nodes), runs each scheduled day, detects
day completion via consecutive empty blocks observed on the reference benign
authority, snapshots per-node chains, fast-forwards the clock to the next
day boundary, and assembles the final report.

A day ends one of two ways:
  * the empty-block rule fires: block production and injection stop and the
    event queue is allowed to drain so in-flight deliveries settle;
  * the simulated-time guard (one day length) is hit: whatever is still
    queued is discarded and the day is reported as stalled, not failed.
"""

from __future__ import annotations

import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from . import messages as m
from .config import RunConfig
from .engine import COORDINATOR, EventEngine, RngStreams
from .errors import PermachainError
from .faults import ByzantineType
from .ledger import BLOCK, TRANSACTION, Chain, Transaction
from .network import MessageEnvelope, Network
from .nodetable import NodeTable
from .pbft import PbftFollower, PbftReplica, quorum_params
from .poa import PoaNode, poet_elect
from .reporting import (DayResult, PropagationRecord, RunRecorder, build_report,
                        node_chain_summary)
from .workload import BroadcastPolicy, LoadSchedule


class World:
    """Everything one run owns: engine, network, nodes, and day state."""

    def __init__(self, config: RunConfig, table: NodeTable):
        self.config = config
        self.table = table
        self.engine = EventEngine()
        self.streams = RngStreams(config.seed)
        self.authorities = table.authorities
        self.followers = table.followers
        self.all_ids = table.ids
        self.quorum_rule = quorum_params(len(self.authorities))
        self.benign = table.benign()
        benign_authorities = [a for a in self.authorities if a in self.benign]
        self.reference = benign_authorities[0] if benign_authorities else self.authorities[0]

        self.recorder = RunRecorder(reference_node=self.reference,
                                    record_sampling=config.record_sampling)
        self.recorder.engine = self.engine
        self.recorder.append_listener = self._on_block_appended

        self.network = Network(self.engine, self.streams, config.latency,
                               config.processing_delay, config.fault_config(),
                               recorder=self.recorder)
        if config.protocol in ("poa", "poet"):
            flagged = [r.id for r in table.rows if r.byzantine is not ByzantineType.HONEST]
            if flagged:
                warnings.warn(
                    f"protocol {config.protocol!r} assumes no faulty nodes; "
                    f"Byzantine types on nodes {flagged} are ignored")

        self.nodes: dict[int, object] = {}
        for row in table.rows:
            byz = row.byzantine if config.protocol == "pbft" else ByzantineType.HONEST
            self.network.register_node(row.id, row.location, byz)
            if config.protocol == "pbft":
                if row.authority:
                    node = PbftReplica(row.id, byz, self)
                else:
                    node = PbftFollower(row.id, self)
            else:
                node = PoaNode(row.id, row.authority, self)
            self.nodes[row.id] = node
            self.engine.register(row.id, self._node_handler(node))
        self.engine.register(COORDINATOR, self._on_control)

        self.day_active = False
        self.current_day = 0
        self.empty_streak = 0
        self.day_ended_by = "guard"
        self.per_day_blocks: dict[int, Counter] = defaultdict(Counter)
        self._tx_counter = 0
        self._authority_set = set(self.authorities)
        self._poet_appends: Counter = Counter()

    # -- wiring ------------------------------------------------------------

    def new_chain(self, node_id: int) -> Chain:
        return Chain(node_id)

    def other_nodes(self, me: int) -> list[int]:
        return [n for n in self.all_ids if n != me]

    def other_authorities(self, me: int) -> list[int]:
        return [a for a in self.authorities if a != me]

    @property
    def block_interval_ms(self) -> int:
        return self.config.block_interval_ms

    @property
    def block_capacity(self) -> int:
        return self.config.block_capacity

    @property
    def pbft_timeout_ms(self) -> int:
        return self.config.effective_pbft_timeout_ms

    def _node_handler(self, node):
        def handle(payload):
            if isinstance(payload, m.TimerFire):
                node.on_timer(payload)
                return
            env: MessageEnvelope = payload
            kind = m.delay_kind_of(env.body)
            if kind in (TRANSACTION, BLOCK):
                self.recorder.record_delivery(PropagationRecord(
                    kind, env.sender, env.recipient, env.sent_at, env.delivered_at))
            node.receive(env)
        return handle

    # -- control events ------------------------------------------------------

    def _on_control(self, payload) -> None:
        if isinstance(payload, m.ProposalTick):
            if not self.day_active:
                return
            for a in self.authorities:
                self.nodes[a].maybe_propose()
            self.engine.schedule(self.block_interval_ms, COORDINATOR,
                                 m.ProposalTick(payload.day))
        elif isinstance(payload, m.InjectTxBatch):
            self._inject(payload)
        elif isinstance(payload, m.ElectionStart):
            if not self.day_active:
                return
            leader, wait = poet_elect(self.authorities, self.config.poet_rate, self.streams)
            self.engine.schedule(wait, COORDINATOR, m.ProposeNow(leader, payload.day))
        elif isinstance(payload, m.ProposeNow):
            if not self.day_active:
                return
            self.nodes[payload.node].propose_lottery()
        else:
            raise PermachainError(f"unknown control event {payload!r}")

    def _inject(self, cmd: m.InjectTxBatch) -> None:
        origin = self.nodes[cmd.origin]
        recipients = [a for a in self.authorities if a != cmd.origin]
        for _ in range(cmd.count):
            self._tx_counter += 1
            tx = Transaction(self._tx_counter, cmd.origin, f"tx-{self._tx_counter}",
                             self.engine.now, cmd.day)
            self.recorder.tx_created(tx)
            origin.pool.add(tx)
            self.network.broadcast(cmd.origin, m.TxGossip(tx), recipients)

    # -- day termination ------------------------------------------------------

    def _on_block_appended(self, node_id: int, block) -> None:
        self.per_day_blocks[node_id][self.current_day] += 1
        if not self.day_active:
            return
        if node_id == self.reference:
            if block.is_empty:
                self.empty_streak += 1
            else:
                self.empty_streak = 0
            if self.stop_condition():
                self.day_active = False
                self.day_ended_by = "empty-blocks"
        if self.config.protocol == "poet" and self.day_active and node_id in self._authority_set:
            # the next lottery round opens once every authority holds this block
            self._poet_appends[block.height] += 1
            if self._poet_appends[block.height] == len(self.authorities):
                self.engine.schedule(0, COORDINATOR, m.ElectionStart(self.current_day))

    def stop_condition(self) -> bool:
        return self.empty_streak >= self.config.empty_block_threshold


def emit_day(world: World, day: int, loads: dict[int, int],
             policy: BroadcastPolicy) -> int:
    """Schedule a day's transaction-creation events; returns the total count.

    The first injection happens one block interval after the day starts
    (never before block production begins); later batches follow at the
    broadcast interval.
    """
    total = 0
    head = world.config.block_interval_ms
    for node_id in sorted(loads):
        if node_id not in world.nodes:
            raise PermachainError(f"schedule references unknown node {node_id}")
        for tick, batch in enumerate(policy.batches(loads[node_id])):
            world.engine.schedule(head + tick * policy.interval_ms, COORDINATOR,
                                  m.InjectTxBatch(node_id, day, batch))
            total += batch
    return total


def run_day(world: World, day: int, loads: dict[int, int]) -> DayResult:
    config = world.config
    engine = world.engine
    day_start = engine.now
    world.current_day = day
    world.day_active = True
    world.empty_streak = 0
    world.day_ended_by = "guard"

    committed_before = len(world.recorder.ref_committed_txids)
    vc_before = len(world.recorder.view_changes_of(world.reference))
    messages_before = Counter(world.recorder.message_counts)
    heights_before = {n: world.nodes[n].chain.height for n in world.all_ids}

    policy = BroadcastPolicy(interval_ms=config.effective_tx_interval_ms,
                             spread_ticks=config.tx_spread_ticks)
    scheduled = emit_day(world, day, loads, policy)

    if config.protocol == "pbft":
        for a in world.authorities:
            world.nodes[a].start_day()
        engine.schedule(config.block_interval_ms, COORDINATOR, m.ProposalTick(day))
    elif config.protocol == "poa":
        engine.schedule(config.block_interval_ms, COORDINATOR, m.ProposalTick(day))
    else:  # poet: the first lottery opens after the same injection headroom
        engine.schedule(config.block_interval_ms, COORDINATOR, m.ElectionStart(day))

    end = engine.run_until_idle(deadline=day_start + config.day_length_ms)
    world.day_active = False

    messages_delta = Counter(world.recorder.message_counts)
    messages_delta.subtract(messages_before)
    return DayResult(
        day=day,
        txs_scheduled=scheduled,
        txs_committed=len(world.recorder.ref_committed_txids) - committed_before,
        blocks_appended={n: world.nodes[n].chain.height - heights_before[n]
                         for n in world.all_ids},
        day_start_sim_time=day_start,
        day_end_sim_time=end,
        view_changes=len(world.recorder.view_changes_of(world.reference)) - vc_before,
        messages_by_kind={k: v for k, v in sorted(messages_delta.items()) if v},
        ended_by=world.day_ended_by,
    )


@dataclass
class SimulationResult:
    config: RunConfig
    days: list[DayResult]
    report: dict
    world: World = field(repr=False)

    def summary_line(self) -> str:
        committed = sum(d.txs_committed for d in self.days)
        scheduled = sum(d.txs_scheduled for d in self.days)
        heights = {n: self.world.nodes[n].chain.height for n in self.world.all_ids}
        vcs = sum(d.view_changes for d in self.days)
        return (f"days={len(self.days)} txs={committed}/{scheduled} "
                f"final_heights={heights} view_changes={vcs}")


def run_all(config: RunConfig, table: NodeTable, schedule: LoadSchedule) -> SimulationResult:
    """Run every scheduled day and assemble the report."""
    world = World(config, table)
    days: list[DayResult] = []
    for day in schedule.days:
        target = (day - 1) * config.day_length_ms
        if world.engine.now > target:
            # a prior day overran its boundary; land on the next multiple
            target = -(-world.engine.now // config.day_length_ms) * config.day_length_ms
        world.engine.advance_to(target)
        try:
            days.append(run_day(world, day, schedule.loads_for(day)))
        except PermachainError as exc:
            raise PermachainError(f"day {day}: {exc}") from exc
    summaries = [node_chain_summary(n, world.nodes[n].chain, dict(world.per_day_blocks[n]))
                 for n in world.all_ids]
    report = build_report(config.to_echo_dict(), config.seed, days, summaries,
                          world.recorder, world.benign)
    return SimulationResult(config=config, days=days, report=report, world=world)
