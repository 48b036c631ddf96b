"""Exception types shared across the lab.

Each one subclasses the builtin the caller would otherwise expect, so plain
``except ValueError`` handlers keep working.
"""


class ConfigError(ValueError):
    """Invalid configuration value or combination."""


class ContractError(ValueError):
    """Caller broke an input contract (length, shape, index, emptiness)."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class EpisodeFinishedError(RuntimeError):
    """Economy stepped past its horizon."""


class CheckpointError(IOError):
    """Checkpoint file missing, corrupt or incompatible with the requested nets."""


class RunInterrupted(RuntimeError):
    """Run stopped by a signal before completion."""
