"""Byzantine node behaviors: honest (0), active tamperer (1), passive dropper (2).

Active nodes deterministically corrupt the digest carried by every
digest-bearing message they send (bitwise NOT, an involution), so every
honest verifier rejects it. Passive nodes drop each outbound message
independently with a fixed probability and otherwise behave byte-identically
to honest nodes. Honest nodes are untouched by this module.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from . import messages as m
from .errors import ConfigError
from .ledger import DIGEST_MASK, Block


class ByzantineType(IntEnum):
    HONEST = 0
    ACTIVE = 1
    PASSIVE = 2


@dataclass(frozen=True)
class FaultConfig:
    drop_prob: float = 0.4
    # Per-node drop-probability overrides; the single global value matches
    # the common one-knob configuration.
    drop_prob_overrides: dict | None = None

    def __post_init__(self):
        if not (0.0 <= self.drop_prob <= 1.0):
            raise ConfigError(f"drop_prob must be in [0, 1], got {self.drop_prob}")
        for node, p in (self.drop_prob_overrides or {}).items():
            if not (0.0 <= p <= 1.0):
                raise ConfigError(f"drop_prob override for node {node} must be in [0, 1]")

    def drop_prob_for(self, node: int) -> float:
        if self.drop_prob_overrides and node in self.drop_prob_overrides:
            return self.drop_prob_overrides[node]
        return self.drop_prob


def _flip(digest: int) -> int:
    return ~digest & DIGEST_MASK


def _flip_block(block: Block) -> Block:
    return replace(block, digest=_flip(block.digest))


def corrupt(body):
    """Return a copy of a protocol message with its carried digest perturbed.

    Applying corrupt twice restores the original digest (bitwise NOT is an
    involution); messages without digests pass through unchanged.
    """
    if isinstance(body, m.PrePrepare):
        return replace(body, block=_flip_block(body.block))
    if isinstance(body, (m.Prepare, m.Commit)):
        return replace(body, digest=_flip(body.digest))
    if isinstance(body, m.BlockAnnounce):
        return replace(body, digest=_flip(body.digest))
    if isinstance(body, m.BlockMsg):
        return replace(body, block=_flip_block(body.block))
    if isinstance(body, m.ViewChange) and body.cert_digest is not None:
        # the vote itself stays legible; only the carried certificate is junked
        return replace(body, cert_digest=_flip(body.cert_digest))
    return body


def should_drop(byz: ByzantineType, node: int, config: FaultConfig,
                rng: np.random.Generator) -> bool:
    """Outbound drop decision; true only for passive nodes, per message."""
    if byz is not ByzantineType.PASSIVE:
        return False
    p = config.drop_prob_for(node)
    if p <= 0.0:
        return False
    return bool(rng.random() < p)
