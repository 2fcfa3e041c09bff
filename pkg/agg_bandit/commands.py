"""
``agg-bandit`` subcommands.

    agg-bandit run --algo agg_ucb --env synthetic --T 500 --m 32 --seed 0,1,2
    agg-bandit grid-search --config experiment.json
"""

import sys
from dataclasses import replace
from typing import Any

from agg_bandit.base import CommandParser, ExperimentCommand
from agg_bandit.errors import CommandError
from agg_bandit.registry import CommandRegistry
from agg_bandit.runner import grid_search, run_experiment

registry = CommandRegistry()

DIVERGED_RETURNCODE = 2


@registry.register("run")
class RunCommand(ExperimentCommand):
    help = "Run one configuration over every seed and write per-seed CSVs plus a summary."

    def handle(self, **kwargs: Any) -> float:
        config = self.build_experiment(**kwargs)
        result = run_experiment(config)
        self.logger.info(f"Mean final cumulative regret: {result.mean_final_cum_regret:.4f}")
        if result.diverged:
            raise CommandError("At least one seed diverged.", returncode=DIVERGED_RETURNCODE)
        return result.mean_final_cum_regret


@registry.register("grid-search")
class GridSearchCommand(ExperimentCommand):
    help = "Evaluate a parameter grid and report the point with the lowest mean final regret."

    def add_arguments(self, parser: CommandParser) -> None:
        super().add_arguments(parser)
        parser.add_argument("--grid-gamma", dest="grid_gamma", type=str, help="Comma-separated gamma values.")
        parser.add_argument("--grid-eta", dest="grid_eta", type=str, help="Comma-separated learning rates.")

    def handle(self, **kwargs: Any) -> dict[str, Any]:
        config = self.build_experiment(**kwargs)
        grid = dict(config.grid or {})
        for key in ("gamma", "eta"):
            if values := kwargs.get(f"grid_{key}"):
                grid[key] = [float(v) for v in values.split(",")]
        if grid:
            config = replace(config, grid=grid)

        search = grid_search(config)
        for row in search.rows:
            self.logger.info(f"{row.label}: mean final cumulative regret {row.mean_final_cum_regret:.4f}")
        self.logger.info(f"Best: {search.best}")
        if search.diverged:
            raise CommandError("At least one run diverged.", returncode=DIVERGED_RETURNCODE)
        return search.best


def main() -> None:
    registry.run(sys.argv[:])


if __name__ == "__main__":
    main()
