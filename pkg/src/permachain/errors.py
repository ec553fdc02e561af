"""Exception hierarchy shared across the simulator."""


class PermachainError(Exception):
    """Base class for all simulator errors."""


class ConfigError(PermachainError):
    """Invalid or missing configuration values."""


class NodeTableError(ConfigError):
    """Malformed node table (duplicate ids, bad Byzantine codes, ...)."""


class ScheduleError(ConfigError):
    """Malformed transaction-load schedule. Carries the offending cell."""

    def __init__(self, message: str, day: int | None = None, node: int | str | None = None):
        if day is not None or node is not None:
            message = f"{message} (day={day}, node={node})"
        super().__init__(message)
        self.day = day
        self.node = node


class UnknownNodeError(PermachainError):
    """A message was addressed to a node id that is not registered."""


class ChainError(PermachainError):
    """Base class for block-append failures."""


class ParentMismatch(ChainError):
    """Block's parent digest does not match the chain tip."""


class HeightGap(ChainError):
    """Block height is not exactly tip height + 1."""


class DigestInvalid(ChainError):
    """Block digest does not verify against its contents (tampering)."""


class ConsistencyError(PermachainError):
    """Benign nodes disagree on a committed block; report emission refuses."""
