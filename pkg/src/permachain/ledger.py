"""Transactions, blocks, digests, and per-node chains.

Cryptography is replaced by a deterministic 64-bit digest over a canonical
serialization, plus statistical validation delays. Only *detectability* of
tampering matters here, not forgery resistance, so the digest is the first
8 bytes of an unkeyed BLAKE2b, read little-endian.

Canonical serialization (bit-exact, documented in the README):
  u64le(x)    8 bytes, little-endian, unsigned
  str(s)      u32le(len(utf8)) + utf8 bytes
  tx          u64(tx_id) u64(origin) str(payload) u64(created_at) u64(day)
  block       u64(height) u64(view) u64(proposer) u64(parent_digest)
              u64(proposed_at) u32le(len(txs)) + each tx
  digest      u64le read of blake2b(block bytes, digest_size=8)
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from .distributions import Distribution, constant
from .errors import ConfigError, DigestInvalid, HeightGap, ParentMismatch

DIGEST_MASK = 0xFFFFFFFFFFFFFFFF
GENESIS_PARENT = 0


def hash64(data: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


def _u64(x: int) -> bytes:
    return struct.pack("<Q", x & DIGEST_MASK)


def _s(text: str) -> bytes:
    raw = text.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


@dataclass(frozen=True)
class Transaction:
    tx_id: int
    origin: int
    payload: str
    created_at: int
    day: int

    def serialize(self) -> bytes:
        # immutable value: cache the bytes on first use (hot path)
        cached = getattr(self, "_ser", None)
        if cached is None:
            cached = (
                _u64(self.tx_id)
                + _u64(self.origin)
                + _s(self.payload)
                + _u64(self.created_at)
                + _u64(self.day)
            )
            object.__setattr__(self, "_ser", cached)
        return cached


@dataclass(frozen=True)
class Block:
    height: int
    view: int
    proposer: int
    parent_digest: int
    txs: tuple[Transaction, ...]
    proposed_at: int
    digest: int = 0

    def serialize_for_digest(self) -> bytes:
        cached = getattr(self, "_ser", None)
        if cached is None:
            parts = [
                _u64(self.height),
                _u64(self.view),
                _u64(self.proposer),
                _u64(self.parent_digest),
                _u64(self.proposed_at),
                struct.pack("<I", len(self.txs)),
            ]
            parts.extend(tx.serialize() for tx in self.txs)
            cached = b"".join(parts)
            object.__setattr__(self, "_ser", cached)
        return cached

    @property
    def is_empty(self) -> bool:
        return not self.txs


def compute_digest(block: Block) -> int:
    """Deterministic digest over every block field except the digest itself."""
    return hash64(block.serialize_for_digest())


def make_block(height: int, view: int, proposer: int, parent_digest: int,
               txs: tuple[Transaction, ...], proposed_at: int) -> Block:
    blk = Block(height, view, proposer, parent_digest, txs, proposed_at)
    return Block(height, view, proposer, parent_digest, txs, proposed_at,
                 digest=compute_digest(blk))


def genesis_block() -> Block:
    return make_block(0, 0, 0, GENESIS_PARENT, (), 0)


def digest_hex(d: int) -> str:
    return f"{d:016x}"


class Chain:
    """Digest-linked, height-consecutive block list starting at genesis."""

    def __init__(self, owner: int):
        self.owner = owner
        self.blocks: list[Block] = [genesis_block()]

    @property
    def tip(self) -> Block:
        return self.blocks[-1]

    @property
    def height(self) -> int:
        return self.tip.height

    def __len__(self) -> int:
        return len(self.blocks)

    def append(self, block: Block) -> None:
        """Extend by one block; raises a distinguishable error per violated rule."""
        tip = self.tip
        if block.height != tip.height + 1:
            raise HeightGap(
                f"node {self.owner}: got height {block.height}, tip is {tip.height}"
            )
        if block.parent_digest != tip.digest:
            raise ParentMismatch(
                f"node {self.owner}: parent digest {digest_hex(block.parent_digest)} "
                f"!= tip digest {digest_hex(tip.digest)}"
            )
        if block.digest != compute_digest(block):
            raise DigestInvalid(
                f"node {self.owner}: block at height {block.height} carries a tampered digest"
            )
        self.blocks.append(block)

    def digests_beyond_genesis(self) -> list[int]:
        return [b.digest for b in self.blocks[1:]]


# Delay kinds, per message category.
TRANSACTION = "transaction"
BLOCK = "block"
CONSENSUS_MESSAGE = "consensus-message"

# Processing-delay preset named for the Hyperledger-Fabric-derived statistics
# it is meant to hold. The values below are placeholders; calibrated studies
# must override them with measured data.
HYPERLEDGER_FABRIC_PRESET = {
    TRANSACTION: {"kind": "normal", "mean": 2.0, "std": 0.5},
    BLOCK: {"kind": "normal", "mean": 5.0, "std": 1.0},
    CONSENSUS_MESSAGE: {"kind": "normal", "mean": 1.0, "std": 0.25},
    "default": {"kind": "constant", "ms": 1},
}

DELAY_PRESETS = {"hyperledger-fabric": HYPERLEDGER_FABRIC_PRESET}


@dataclass
class ValidationDelays:
    """Per-kind processing delay distributions with a global default."""

    per_kind: dict = field(default_factory=dict)
    default: Distribution | None = None

    @classmethod
    def from_config(cls, spec: dict | None) -> "ValidationDelays":
        if spec is None:
            return cls(per_kind={}, default=constant(1))
        if "preset" in spec:
            name = spec["preset"]
            if name not in DELAY_PRESETS:
                raise ConfigError(f"unknown processing-delay preset {name!r}")
            spec = DELAY_PRESETS[name]
        per_kind = {}
        default = None
        for key, sub in spec.items():
            dist = Distribution.from_dict(sub)
            if key == "default":
                default = dist
            elif key in (TRANSACTION, BLOCK, CONSENSUS_MESSAGE):
                per_kind[key] = dist
            else:
                raise ConfigError(f"unknown processing-delay kind {key!r}")
        return cls(per_kind=per_kind, default=default)

    def validation_delay(self, kind: str, rng: np.random.Generator) -> int:
        dist = self.per_kind.get(kind, self.default)
        if dist is None:
            raise ConfigError(f"no processing-delay distribution for kind {kind!r} and no default")
        return dist.sample_ms(rng)

    def to_dict(self) -> dict:
        out = {k: d.to_dict() for k, d in sorted(self.per_kind.items())}
        if self.default is not None:
            out["default"] = self.default.to_dict()
        return out
