"""Round-robin authority consensus and its lottery-elected variant.

Authorities take turns broadcasting new blocks; every other node accepts a
valid, in-order block without any further communication, so consensus costs
exactly one message per recipient per block. Fault behaviors are ignored
under these protocols (the model assumes no faulty nodes), which keeps every
chain in the network digest-identical.

The lottery variant differs only in leader selection: each round, every
authority draws an exponential waiting time from its own stream and the
lowest draw proposes the next block after that wait.
"""

from __future__ import annotations

from .distributions import round_half_up_ms
from . import messages as m
from .ledger import Block, compute_digest, make_block
from .network import MessageEnvelope
from .workload import TransactionPool


def leader_for_height(height: int, authorities: list[int]) -> int:
    """Round-robin leader for a block height (heights start at 1)."""
    if height < 1:
        raise ValueError("genesis has no leader; heights start at 1")
    if not authorities:
        raise ValueError("empty authority list")
    return authorities[(height - 1) % len(authorities)]


def poet_elect(authorities: list[int], rate_per_ms: float, streams):
    """One lottery round: lowest exponential draw wins, ties to lowest id.

    Returns (leader, wait_ms) where wait_ms is the winning draw (>= 1 ms).
    """
    if not authorities:
        raise ValueError("empty authority list")
    if rate_per_ms <= 0:
        raise ValueError("lottery rate must be positive")
    best_node = None
    best_wait = None
    for node in authorities:
        rng = streams.stream(node, "poet-draw")
        wait = max(1, round_half_up_ms(rng.exponential(1.0 / rate_per_ms)))
        if best_wait is None or wait < best_wait or (wait == best_wait and node < best_node):
            best_node, best_wait = node, wait
    return best_node, best_wait


class PoaNode:
    """A node under round-robin or lottery consensus (any authority flag)."""

    def __init__(self, node_id: int, is_authority: bool, world):
        self.id = node_id
        self.is_authority = is_authority
        self.world = world
        self.view = 0  # single-leader protocols have no views
        self.chain = world.new_chain(node_id)
        self.pool = TransactionPool()
        self.committed_txids: set[int] = set()
        self._buffer: dict[int, Block] = {}
        self.stats: dict[str, int] = {}

    @property
    def next_height(self) -> int:
        return self.chain.height + 1

    def maybe_propose(self) -> None:
        """Block-interval tick: propose iff the rotation points at me."""
        if not self.world.day_active or not self.is_authority:
            return
        height = self.next_height
        if leader_for_height(height, self.world.authorities) != self.id:
            return
        self._propose(height)

    def propose_lottery(self) -> None:
        """Lottery winner's proposal; rotation order does not apply."""
        if not self.world.day_active:
            return
        self._propose(self.next_height)

    def _propose(self, height: int) -> None:
        txs = self.pool.take_batch(self.world.block_capacity)
        block = make_block(height, 0, self.id, self.chain.tip.digest, txs,
                           self.world.engine.now)
        self._append(block)
        self.world.network.broadcast(self.id, m.BlockMsg(block),
                                     self.world.other_nodes(self.id))

    def receive(self, env: MessageEnvelope) -> None:
        body = env.body
        if isinstance(body, m.TxGossip):
            if body.tx.tx_id not in self.committed_txids:
                self.pool.add(body.tx)
        elif isinstance(body, m.BlockMsg):
            self.on_block(body.block)
        else:
            self.stats[m.kind_of(body)] = self.stats.get(m.kind_of(body), 0) + 1

    def on_block(self, block: Block) -> None:
        if compute_digest(block) != block.digest:
            self.stats["block_invalid_digest"] = self.stats.get("block_invalid_digest", 0) + 1
            return
        if block.height <= self.chain.height:
            return
        # latency can reorder broadcasts; buffer until the parent arrives
        self._buffer[block.height] = block
        while self.next_height in self._buffer:
            self._append(self._buffer.pop(self.next_height))

    def _append(self, block: Block) -> None:
        self.chain.append(block)
        ids = [tx.tx_id for tx in block.txs]
        self.committed_txids.update(ids)
        self.pool.discard(ids)
        self.world.recorder.on_append(self.id, block, self.view)

    def start_day(self) -> None:
        pass

    def on_timer(self, fire) -> None:
        pass
