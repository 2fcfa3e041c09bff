"""
Exception hierarchy.

Every library error derives from ``BanditError`` and carries a ``returncode``,
so a command can turn any of them into a clean process exit.
"""

from typing import Any


class BanditError(Exception):
    """Root of all library errors; ``returncode`` is the exit status a CLI run should use."""

    default_returncode: int = 1

    def __init__(self, *args: Any, returncode: int | None = None, **kwargs: Any) -> None:
        self.returncode = self.default_returncode if returncode is None else returncode
        super().__init__(*args, **kwargs)


class InvalidArgumentError(BanditError, ValueError):
    """Non-finite input, out-of-range index, non-unit context or invalid setting."""


class ShapeMismatchError(InvalidArgumentError):
    """Array shapes do not conform."""


class ConfigError(InvalidArgumentError):
    """Unknown names or keys in an experiment configuration."""


class DegenerateContextError(InvalidArgumentError):
    """A context vector could not be built (NaN or infinite factors)."""


class EmptyGroupError(BanditError):
    """A statistic was requested for an arm group with no observed contexts."""

    def __init__(self, group: int, *args: Any, **kwargs: Any) -> None:
        self.group = group
        super().__init__(f"Arm group {group} has no observed contexts.", *args, **kwargs)


class DivergenceError(BanditError):
    """Gradient descent produced a non-finite or exploding loss."""

    default_returncode = 2

    def __init__(self, step: int, loss: float, *args: Any, **kwargs: Any) -> None:
        self.step = step
        self.loss = loss
        super().__init__(f"Training diverged at step {step} (loss={loss!r}).", *args, **kwargs)


class CommandError(BanditError):
    """
    A run of ``agg-bandit`` cannot go on: bad flags, unreadable input or an unknown command.

    ``run_from_argv`` logs it and exits with ``returncode`` (1 unless given; a
    diverged seed exits with 2 through ``DivergenceError`` instead).
    ``call_command`` lets it propagate.
    """
