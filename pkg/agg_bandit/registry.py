"""
Named registries.

``Registry`` maps names to factories (policies, environments, activations) and
``CommandRegistry`` adds a ``run()`` entry point that dispatches CLI subcommands.

Usage::

    from agg_bandit.registry import Registry

    POLICIES = Registry("policy")

    @POLICIES.register("lin_ucb")
    class LinUcbAgent(Agent):
        ...

    POLICIES.require("lin_ucb")
"""

import os
import sys
from collections.abc import Callable
from typing import TYPE_CHECKING, Generic, TypeVar

from custom_python_logger import get_logger

from agg_bandit.const import CURRENT_DATE_TIME_STR
from agg_bandit.errors import ConfigError

if TYPE_CHECKING:
    from agg_bandit.base import BaseCommand as BaseCommandType

T = TypeVar("T")


class Registry(Generic[T]):
    """A name -> object mapping with decorator registration and helpful lookup errors."""

    def __init__(self, kind: str) -> None:
        self.kind = kind
        self._entries: dict[str, T] = {}

    def register(self, name: str) -> Callable[[T], T]:
        """
        Decorator that registers the decorated object under *name*.

        Usage::

            @registry.register("synthetic")
            def build_synthetic(...): ...
        """

        def decorator(obj: T) -> T:
            self._entries[name] = obj
            return obj

        return decorator

    def add(self, name: str, obj: T) -> None:
        """Programmatically register *obj* under *name*."""
        self._entries[name] = obj

    def get(self, name: str) -> T | None:
        """Return the object registered under *name*, or ``None``."""
        return self._entries.get(name)

    def require(self, name: str) -> T:
        """Return the object registered under *name* or raise ``ConfigError`` listing the choices."""
        if (obj := self._entries.get(name)) is None:
            available = ", ".join(self.names()) or "(none registered)"
            raise ConfigError(f"Unknown {self.kind}: '{name}'. Available: {available}.")
        return obj

    def names(self) -> list[str]:
        """Return a sorted list of registered names."""
        return sorted(self._entries)

    def __contains__(self, name: object) -> bool:
        return name in self._entries


class CommandRegistry(Registry[type["BaseCommandType"]]):
    """
    A registry that maps command names to ``BaseCommand`` subclasses and
    exposes a single ``run()`` entry point.
    """

    def __init__(self) -> None:
        super().__init__("command")
        self.logger = get_logger(
            name=os.getenv("AGG_BANDIT_PROJECT_NAME", f"{self.__class__.__name__}__{CURRENT_DATE_TIME_STR}")
        )

    def run(self, argv: list[str] | None = None) -> None:
        """
        Parse *argv* (defaults to ``sys.argv``), find the requested command,
        and run it.

        The expected argv format is ``[prog, subcommand, ...args...]``,
        e.g. ``["agg-bandit", "run", "--algo", "agg_ucb", "--T", "100"]``.
        """
        argv = argv or sys.argv[:]
        prog = argv[0] if argv else "agg-bandit"

        if len(argv) < 2 or argv[1] in {"-h", "--help"}:
            self._print_help(prog)
            sys.exit(0)

        subcommand = argv[1]
        if (command_class := self.get(subcommand)) is None:
            available = ", ".join(self.names()) or "(none registered)"
            self.logger.error(
                f"Unknown command: '{subcommand}'. "
                f"Available commands: {available}. "
                f"Type '{prog} --help' for usage."
            )
            sys.exit(1)
        command_class().run_from_argv([prog] + argv[2:])

    def _print_help(self, prog: str) -> None:
        print(f"Usage: {prog} <command> [options]\n")
        print("Available commands:")
        for name in self.names():
            desc = self._entries[name].help or "(no description)"
            print(f"  {name:<20} {desc}")
        print(f"\nRun '{prog} <command> --help' for command-specific help.")
