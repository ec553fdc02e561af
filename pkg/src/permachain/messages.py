"""Protocol message bodies and orchestrator control events.

Network messages travel inside a MessageEnvelope (see network.py); control
events are scheduled directly on the engine without latency.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ledger import BLOCK, CONSENSUS_MESSAGE, TRANSACTION, Block, Transaction


# --- network message bodies -------------------------------------------------

@dataclass(frozen=True)
class TxGossip:
    tx: Transaction


@dataclass(frozen=True)
class BlockMsg:
    """Single-round block broadcast (round-robin / lottery protocols)."""
    block: Block


@dataclass(frozen=True)
class PrePrepare:
    view: int
    height: int
    block: Block


@dataclass(frozen=True)
class Prepare:
    view: int
    height: int
    digest: int


@dataclass(frozen=True)
class Commit:
    view: int
    height: int
    digest: int


@dataclass(frozen=True)
class ViewChange:
    proposed_view: int
    next_height: int  # sender's chain tip + 1, used by the new primary
    # prepared certificate for next_height, if the sender holds one
    cert_digest: int | None = None
    cert_view: int | None = None
    cert_block: Block | None = None


@dataclass(frozen=True)
class NewView:
    view: int


@dataclass(frozen=True)
class BlockAnnounce:
    height: int
    digest: int
    block: Block


def kind_of(body) -> str:
    """Message kind name used in counters and reports."""
    return type(body).__name__


def delay_kind_of(body) -> str:
    """Which processing-delay distribution applies to a received body."""
    if isinstance(body, TxGossip):
        return TRANSACTION
    if isinstance(body, (BlockMsg, BlockAnnounce)):
        return BLOCK
    return CONSENSUS_MESSAGE


def is_digest_bearing(body) -> bool:
    if isinstance(body, ViewChange):
        return body.cert_digest is not None
    return isinstance(body, (PrePrepare, Prepare, Commit, BlockAnnounce, BlockMsg))


# --- control events (engine-scheduled, no network hop) ----------------------

@dataclass(frozen=True)
class ProposalTick:
    day: int


@dataclass(frozen=True)
class InjectTxBatch:
    origin: int
    day: int
    count: int


@dataclass(frozen=True)
class TimerFire:
    node: int
    token: int


@dataclass(frozen=True)
class ElectionStart:
    day: int


@dataclass(frozen=True)
class ProposeNow:
    node: int
    day: int
