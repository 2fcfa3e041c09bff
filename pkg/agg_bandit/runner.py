"""
Experiment driver.

``run_experiment`` plays ``T`` rounds per seed and streams one CSV per
(algorithm, grid point, seed); ``grid_search`` repeats that over the Cartesian
product of a parameter grid and picks the point with the lowest mean final
cumulative regret.
"""

import csv
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from custom_python_logger import get_logger

from agg_bandit.config import ExperimentConfig
from agg_bandit.const import CSV_HEADER, DEFAULT_GRID, SUMMARY_HEADER
from agg_bandit.environments import build_environment
from agg_bandit.errors import DivergenceError
from agg_bandit.policy import build_agent

logger = get_logger(name=__name__)

DEFAULT_LABEL = "default"


def _fmt(value: float) -> str:
    return repr(float(value))


@dataclass(frozen=True)
class RoundLog:
    t: int
    arm_id: Any
    group: int
    point: float
    width: float
    reward: float
    regret: float
    cum_regret: float
    loss: float

    def as_row(self) -> list[str]:
        return [
            str(self.t),
            str(self.arm_id),
            str(self.group),
            _fmt(self.point),
            _fmt(self.width),
            _fmt(self.reward),
            _fmt(self.regret),
            _fmt(self.cum_regret),
            _fmt(self.loss),
        ]


@dataclass
class SeedRun:
    seed: int
    logs: list[RoundLog] = field(default_factory=list)
    status: str = "ok"
    csv_path: Path | None = None

    @property
    def final_cum_regret(self) -> float:
        return self.logs[-1].cum_regret if self.logs else 0.0

    @property
    def diverged(self) -> bool:
        return self.status != "ok"


@dataclass
class ExperimentResult:
    label: str
    runs: list[SeedRun]

    @property
    def diverged(self) -> bool:
        return any(run.diverged for run in self.runs)

    @property
    def mean_final_cum_regret(self) -> float:
        """Mean over seeds; a diverged seed counts as infinite regret."""
        return float(np.mean([np.inf if run.diverged else run.final_cum_regret for run in self.runs]))


@dataclass(frozen=True)
class GridRow:
    point: tuple[Any, ...]
    label: str
    mean_final_cum_regret: float


@dataclass
class GridSearchResult:
    keys: tuple[str, ...]
    rows: list[GridRow]
    results: list[ExperimentResult]

    @property
    def best(self) -> dict[str, Any]:
        # lowest mean regret, ties to the lexicographically smallest point
        row = min(self.rows, key=lambda r: (r.mean_final_cum_regret, r.point))
        return dict(zip(self.keys, row.point))

    @property
    def diverged(self) -> bool:
        return any(result.diverged for result in self.results)


def _seeds_for(seed: int) -> tuple[int, int]:
    env_state, agent_state = (s.generate_state(1)[0] for s in np.random.SeedSequence(seed).spawn(2))
    return int(env_state), int(agent_state)


def run_seed(config: ExperimentConfig, seed: int, csv_path: Path | None = None) -> SeedRun:
    """One fresh environment and agent, ``T`` rounds of step / observe / update."""
    env_seed, agent_seed = _seeds_for(seed)
    env = build_environment(config.env, env_seed, dict(config.env_params))
    agent = build_agent(config.algo, env, config.agent, agent_seed)
    run = SeedRun(seed=seed, csv_path=csv_path)
    cum_regret = 0.0

    fh = None
    if csv_path is not None:
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        fh = csv_path.open("w", newline="")
    try:
        writer = csv.writer(fh, lineterminator="\n") if fh else None
        if writer:
            writer.writerow(CSV_HEADER)
        for t in range(1, config.T + 1):
            current = env.next_round()
            decision = agent.step(current.candidates)
            reward = env.observe(decision.index)
            regret = env.regret(decision.index)
            try:
                agent.update(decision, reward)
            except DivergenceError as exc:
                logger.error(f"{config.algo} seed {seed}: {exc} in round {t}; keeping {len(run.logs)} rounds")
                run.status = "diverged"
                break
            cum_regret += regret
            log = RoundLog(
                t=t,
                arm_id=decision.chosen.arm_id,
                group=decision.chosen.group,
                point=decision.point,
                width=decision.width,
                reward=reward,
                regret=regret,
                cum_regret=cum_regret,
                loss=agent.last_loss,
            )
            run.logs.append(log)
            if writer:
                writer.writerow(log.as_row())
                fh.flush()
            logger.debug(f"t={t} arm={log.arm_id} group={log.group} reward={reward:.4f} cum_regret={cum_regret:.4f}")
    finally:
        if fh:
            fh.close()

    logger.info(f"{config.algo} seed {seed}: final cumulative regret {run.final_cum_regret:.4f} ({run.status})")
    return run


def _csv_path(config: ExperimentConfig, label: str, seed: int) -> Path:
    return config.out / f"{config.algo}__{label}__seed{seed}.csv"


def run_experiment(config: ExperimentConfig, label: str = DEFAULT_LABEL, write_summary: bool = True) -> ExperimentResult:
    logger.step(f"Running {config.algo} on {config.env}: T={config.T}, seeds={list(config.seeds)} [{label}]")
    paths = [_csv_path(config, label, seed) for seed in config.seeds]
    if config.workers > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(config.workers, len(config.seeds))) as pool:
            runs = list(pool.map(run_seed, itertools.repeat(config), config.seeds, paths))
    else:
        runs = [run_seed(config, seed, path) for seed, path in zip(config.seeds, paths)]

    result = ExperimentResult(label=label, runs=runs)
    if write_summary:
        write_summary_csv(config.out / "summary.csv", [result])
    return result


def write_summary_csv(path: Path, results: list[ExperimentResult]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for result in results:
            for run in result.runs:
                writer.writerow([result.label, run.seed, _fmt(run.final_cum_regret), run.status])
    logger.step(f"Summary written to {path}")
    return path


def grid_label(keys: tuple[str, ...], point: tuple[Any, ...]) -> str:
    return "_".join(f"{k}-{v}" for k, v in zip(keys, point))


def grid_search(config: ExperimentConfig) -> GridSearchResult:
    """Evaluate every grid point over all seeds; write the grid table and a combined summary."""
    grid = config.grid or DEFAULT_GRID
    keys = tuple(sorted(grid))
    rows, results = [], []
    for point in itertools.product(*(grid[k] for k in keys)):
        label = grid_label(keys, point)
        result = run_experiment(config.with_agent(**dict(zip(keys, point))), label=label, write_summary=False)
        results.append(result)
        rows.append(GridRow(point=tuple(point), label=label, mean_final_cum_regret=result.mean_final_cum_regret))

    search = GridSearchResult(keys=keys, rows=rows, results=results)
    write_summary_csv(config.out / "summary.csv", results)
    table = config.out / "grid.csv"
    with table.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*keys, "mean_final_cum_regret"])
        writer.writerows([*row.point, _fmt(row.mean_final_cum_regret)] for row in rows)
    logger.info(f"Best grid point: {search.best}")
    return search
