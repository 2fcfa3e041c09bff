"""
Tests for the command layer.

Run with: python -m pytest tests/ -v
"""

import json
from pathlib import Path
from typing import Any

import pytest

from agg_bandit.base import BaseCommand, CommandParser, ExperimentCommand, call_command
from agg_bandit.commands import GridSearchCommand, RunCommand, registry
from agg_bandit.errors import CommandError, ConfigError, DivergenceError
from agg_bandit.registry import CommandRegistry

# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def make_command(handle_fn: Any = None, add_args_fn: Any = None, **class_attrs: Any) -> type[BaseCommand]:
    """Dynamically create a BaseCommand subclass for testing."""

    def _handle(self: BaseCommand, **options: Any) -> Any:
        if handle_fn:
            return handle_fn(self, **options)
        return None

    attrs: dict[str, Any] = {"handle": _handle, **class_attrs}
    if add_args_fn:
        attrs["add_arguments"] = add_args_fn
    return type("TestCommand", (BaseCommand,), attrs)


def small_run_options(out: Path, **extra: Any) -> dict[str, Any]:
    return {"algo": "lin_ucb", "T": 5, "seed": "0,1", "out": str(out), **extra}


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class TestCommandError:
    def test_default_returncode(self) -> None:
        assert CommandError("oops").returncode == 1

    def test_custom_returncode(self) -> None:
        assert CommandError("oops", returncode=42).returncode == 42

    def test_divergence_returncode(self) -> None:
        assert DivergenceError(step=3, loss=1e9).returncode == 2


# ---------------------------------------------------------------------------
# BaseCommand
# ---------------------------------------------------------------------------


class TestBaseCommandParser:
    @pytest.mark.parametrize("flag", ["--version", "--verbosity", "--traceback"])
    def test_base_flags(self, flag: str) -> None:
        assert flag in make_command()().create_parser("prog", "test").format_help()

    def test_custom_argument(self) -> None:
        def add_args(self: BaseCommand, parser: CommandParser) -> None:
            parser.add_argument("name")

        parser = make_command(add_args_fn=add_args)().create_parser("prog", "test")
        assert parser.parse_args(["Alice"]).name == "Alice"

    def test_programmatic_parse_error_raises(self) -> None:
        parser = ExperimentCommand().create_parser("prog", "run")
        with pytest.raises(CommandError, match="invalid int value"):
            parser.parse_args(["--T", "many"])

    def test_experiment_flags(self) -> None:
        args = ExperimentCommand().create_parser("prog", "run").parse_args(
            ["--lambda", "0.5", "--k-hop", "2", "--sigma-s", "0.3", "--seed", "1,2", "--mode", "diagonal"]
        )
        assert (args.lam, args.k_hop, args.sigma_s, args.seed, args.mode) == (0.5, 2, 0.3, "1,2", "diagonal")
        assert args.warm_start is None
        assert ExperimentCommand().create_parser("prog", "run").parse_args(["--no-warm-start"]).warm_start is False


class TestBaseCommandExecute:
    def test_handle_called_with_verbosity(self) -> None:
        received = []
        call_command(make_command(handle_fn=lambda self, **options: received.append(options["verbosity"])), verbosity=3)
        assert received == [3]

    def test_handle_not_implemented(self) -> None:
        with pytest.raises(NotImplementedError):
            call_command(BaseCommand)

    def test_errors_propagate_in_call_command(self) -> None:
        def handle(self: BaseCommand, **options: Any) -> None:
            raise CommandError("boom")

        with pytest.raises(CommandError, match="boom"):
            call_command(make_command(handle_fn=handle))

    def test_call_command_rejects_other_types(self) -> None:
        with pytest.raises(TypeError):
            call_command(dict)


class TestRunFromArgv:
    def test_exits_with_error_returncode(self) -> None:
        def handle(self: BaseCommand, **options: Any) -> None:
            raise ConfigError("bad key", returncode=3)

        with pytest.raises(SystemExit) as exc_info:
            make_command(handle_fn=handle)().run_from_argv(["prog"])
        assert exc_info.value.code == 3

    def test_traceback_reraises(self) -> None:
        def handle(self: BaseCommand, **options: Any) -> None:
            raise CommandError("reraise me")

        with pytest.raises(CommandError):
            make_command(handle_fn=handle)().run_from_argv(["prog", "--traceback"])

    def test_keyboard_interrupt_exits_1(self) -> None:
        def handle(self: BaseCommand, **options: Any) -> None:
            raise KeyboardInterrupt

        with pytest.raises(SystemExit) as exc_info:
            make_command(handle_fn=handle)().run_from_argv(["prog"])
        assert exc_info.value.code == 1


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


class TestCommandRegistry:
    def test_registered_commands(self) -> None:
        assert registry.names() == ["grid-search", "run"]
        assert registry.get("run") is RunCommand

    def test_register_and_get(self) -> None:
        reg = CommandRegistry()

        @reg.register("hello")
        class HelloCmd(BaseCommand):
            def handle(self, **options: Any) -> None:
                pass

        assert reg.get("hello") is HelloCmd
        assert "hello" in reg

    def test_unknown_command_exits(self) -> None:
        with pytest.raises(SystemExit) as exc_info:
            registry.run(["agg-bandit", "nonexistent"])
        assert exc_info.value.code == 1

    def test_help_exits_0(self, capsys: pytest.CaptureFixture[str]) -> None:
        with pytest.raises(SystemExit) as exc_info:
            registry.run(["agg-bandit", "--help"])
        assert exc_info.value.code == 0
        assert "grid-search" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# run / grid-search
# ---------------------------------------------------------------------------


class TestRunCommand:
    def test_returns_mean_regret(self, tmp_path: Path) -> None:
        regret = call_command(RunCommand, **small_run_options(tmp_path))
        assert regret >= 0.0
        assert (tmp_path / "lin_ucb__default__seed1.csv").is_file()

    def test_config_file_with_overrides(self, tmp_path: Path) -> None:
        config = tmp_path / "experiment.json"
        config.write_text(json.dumps({"algo": "oracle", "T": 4, "n_groups": 3, "d_x": 4}))
        assert call_command(RunCommand, config=str(config), out=str(tmp_path), seed="2") == 0.0
        assert (tmp_path / "oracle__default__seed2.csv").is_file()

    def test_unknown_environment_key(self, tmp_path: Path) -> None:
        config = tmp_path / "experiment.json"
        config.write_text(json.dumps({"algo": "oracle", "colour": "blue"}))
        with pytest.raises(ConfigError):
            call_command(RunCommand, config=str(config), out=str(tmp_path))

    def test_divergence_exits_2(self, tmp_path: Path) -> None:
        argv = ["agg-bandit", "--algo", "agg_ucb", "--T", "3", "--m", "8", "--eta", "1e12", "--J", "5"]
        with pytest.raises(SystemExit) as exc_info:
            RunCommand().run_from_argv([*argv, "--out", str(tmp_path)])
        assert exc_info.value.code == 2
        assert (tmp_path / "summary.csv").is_file()

    def test_cold_restart_unless_requested(self, tmp_path: Path) -> None:
        command = RunCommand()
        assert not command.build_experiment(**small_run_options(tmp_path)).agent.train.warm_start
        assert command.build_experiment(**small_run_options(tmp_path), warm_start=True).agent.train.warm_start

    def test_via_registry(self, tmp_path: Path) -> None:
        registry.run(["agg-bandit", "run", "--algo", "lin_ucb", "--T", "3", "--out", str(tmp_path)])
        assert (tmp_path / "lin_ucb__default__seed0.csv").is_file()


class TestGridSearchCommand:
    def test_grid_flags(self, tmp_path: Path) -> None:
        best = call_command(GridSearchCommand, **small_run_options(tmp_path), grid_gamma="0.1,0.01")
        assert set(best) == {"gamma"}
        assert best["gamma"] in (0.1, 0.01)
        assert (tmp_path / "grid.csv").is_file()
