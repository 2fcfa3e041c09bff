"""
Command plumbing for the ``agg-bandit`` CLI.

``BaseCommand`` parses argv, runs ``handle()`` and turns library errors into
logged exits; ``ExperimentCommand`` adds the experiment flags and builds an
``ExperimentConfig`` from a JSON file plus flag overrides.
"""

import os
import sys
from argparse import Action, ArgumentParser, BooleanOptionalAction, HelpFormatter
from collections.abc import Sequence
from importlib.metadata import PackageNotFoundError, version
from typing import Any

from custom_python_logger import CustomLoggerAdapter, build_logger, get_logger

from agg_bandit.config import ExperimentConfig, build_config
from agg_bandit.const import CURRENT_DATE_TIME_STR, LOG_FILE, LOG_FILE_PATH, LOG_FORMAT
from agg_bandit.errors import BanditError, CommandError

DISTRIBUTION_NAME = "python-agg-bandit"


class CommandParser(ArgumentParser):
    """
    ArgumentParser that raises CommandError instead of calling sys.exit()
    when the command is invoked programmatically.
    """

    def __init__(self, *, called_from_command_line: bool | None = None, **kwargs: Any) -> None:
        self.called_from_command_line = called_from_command_line
        super().__init__(**kwargs)

    def error(self, message: str) -> None:
        if self.called_from_command_line:
            super().error(message)
        else:
            raise CommandError(f"Error: {message}")


class CommandHelpFormatter(HelpFormatter):
    """Pushes the common base arguments to the bottom of --help output."""

    show_last: set[str] = {"--version", "--verbosity", "--traceback"}

    def _reordered_actions(self, actions: list[Action]) -> list[Action]:
        return sorted(actions, key=lambda a: bool(set(a.option_strings) & self.show_last))

    def add_usage(self, usage: str | None, actions: list[Action], *args: Any, **kwargs: Any) -> None:
        super().add_usage(usage, self._reordered_actions(actions), *args, **kwargs)

    def add_arguments(self, actions: list[Action]) -> None:
        super().add_arguments(self._reordered_actions(actions))


def _package_version() -> str:
    try:
        return version(DISTRIBUTION_NAME)
    except PackageNotFoundError:
        return "unknown"


class BaseCommand:
    """
    The base class from which all commands derive.

    Execution flow
    --------------
    1. run_from_argv() parses argv and calls execute().
    2. execute() applies the verbosity and calls handle() with the parsed options.
    3. Any BanditError (CommandError included) raised in handle() is caught,
       logged, and the process exits with the error's returncode.
    """

    help: str = ""
    version: str = _package_version()

    _called_from_command_line: bool = False

    def __init__(self) -> None:
        self.logger: CustomLoggerAdapter = get_logger(name=self.__class__.__module__.split(".", maxsplit=1)[0])

        build_logger(
            project_name=os.getenv("AGG_BANDIT_PROJECT_NAME", f"{self.__class__.__name__}__{CURRENT_DATE_TIME_STR}"),
            log_format=LOG_FORMAT,
            log_file=LOG_FILE,
            log_file_path=LOG_FILE_PATH,
        )

    def create_parser(self, prog_name: str, subcommand: str, **kwargs: Any) -> CommandParser:
        kwargs.setdefault("formatter_class", CommandHelpFormatter)
        parser = CommandParser(
            prog=f"{os.path.basename(prog_name)} {subcommand}".strip(),
            description=self.help or None,
            called_from_command_line=self._called_from_command_line,
            **kwargs,
        )
        parser.add_argument("--version", action="version", version=self.version, help="Show the version and exit.")
        parser.add_argument(
            "-v",
            "--verbosity",
            default=1,
            type=int,
            choices=[0, 1, 2, 3],
            help="Verbosity level; 0=minimal, 1=normal, 2=per-round detail, 3=very verbose.",
        )
        parser.add_argument("--traceback", action="store_true", help="Raise on errors instead of logging cleanly.")
        self.add_arguments(parser)
        return parser

    def add_arguments(self, parser: CommandParser) -> None:
        """Override to add command-specific arguments."""

    def run_from_argv(self, argv: Sequence[str]) -> None:
        """argv[0] = prog name, argv[1:] = arguments (no subcommand slot)."""
        self._called_from_command_line = True
        parser = self.create_parser(argv[0], "")
        options = vars(parser.parse_args(list(argv[1:])))

        try:
            self.execute(**options)
        except BanditError as e:
            if options["traceback"]:
                raise
            self.logger.error(f"{e.__class__.__name__}: {e}")
            sys.exit(e.returncode)
        except KeyboardInterrupt:
            self.logger.warning("Aborted.")
            sys.exit(1)

    def execute(self, **kwargs: Any) -> Any:
        verbosity = kwargs.get("verbosity", 1)
        self.logger.setLevel({0: "WARNING", 1: "INFO"}.get(verbosity, "DEBUG"))
        return self.handle(**kwargs)

    def handle(self, **kwargs: Any) -> Any:
        raise NotImplementedError("Subclasses of BaseCommand must implement a handle() method.")


class ExperimentCommand(BaseCommand):
    """A command configured by ``--config`` plus per-key flag overrides."""

    # flag dest -> flat config key
    option_keys: dict[str, str] = {
        "algo": "algo",
        "env": "env",
        "T": "T",
        "m": "m",
        "L": "L",
        "k_hop": "k_hop",
        "gamma": "gamma",
        "lam": "lambda",
        "eta": "eta",
        "J": "J",
        "sigma_s": "sigma_s",
        "seed": "seed",
        "mode": "mode",
        "out": "out",
        "workers": "workers",
        "warm_start": "warm_start",
        "ingest": "ingest",
    }

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument("--config", type=str, help="Flat JSON experiment config.")
        parser.add_argument("--algo", type=str, help="agg_ucb, neural_pool, neural_ind, lin_ucb or oracle.")
        parser.add_argument("--env", type=str, help="synthetic, classification or recommendation.")
        parser.add_argument("--T", type=int, help="Horizon (rounds per seed).")
        parser.add_argument("--m", type=int, help="Network width.")
        parser.add_argument("--L", type=int, help="Network depth.")
        parser.add_argument("--k-hop", dest="k_hop", type=int, help="Neighborhood size k.")
        parser.add_argument("--gamma", type=float, help="Exploration parameter.")
        parser.add_argument("--lambda", dest="lam", type=float, help="Regularization of the gradient matrix.")
        parser.add_argument("--eta", type=float, help="Learning rate.")
        parser.add_argument("--J", type=int, help="Gradient-descent steps per round.")
        parser.add_argument("--sigma-s", dest="sigma_s", type=float, help="Edge-weight bandwidth.")
        parser.add_argument("--seed", type=str, help="Seed or comma-separated seeds, e.g. 0,1,2.")
        parser.add_argument("--mode", choices=["exact", "diagonal", "auto"], help="Confidence matrix mode.")
        parser.add_argument("--out", type=str, help="Output directory for CSV files.")
        parser.add_argument("--workers", type=int, help="Seeds run in parallel processes.")
        parser.add_argument(
            "--warm-start",
            dest="warm_start",
            action=BooleanOptionalAction,
            help="Continue training from the previous round's parameters.",
        )
        parser.add_argument("--ingest", choices=["all", "chosen"], help="Contexts the arm-group graph learns from.")

    def build_experiment(self, **kwargs: Any) -> ExperimentConfig:
        overrides = {key: kwargs.get(dest) for dest, key in self.option_keys.items()}
        return build_config(kwargs.get("config"), overrides)


def call_command(command: "type[BaseCommand] | BaseCommand", **options: Any) -> Any:
    """
    Call a command programmatically.

    Errors propagate to the caller; ``verbosity`` and ``traceback`` default to 1 and False.
    """
    if isinstance(command, type):
        if not issubclass(command, BaseCommand):
            raise TypeError(f"command must be a BaseCommand subclass, got {type(command)}")
        command = command()

    options.setdefault("verbosity", 1)
    options.setdefault("traceback", False)
    return command.execute(**options)
