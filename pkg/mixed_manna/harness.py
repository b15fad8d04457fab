""" Random instance generation and batch benchmarking of the pivoting
solver. """

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import repeat
from typing import Dict, List, Optional, TextIO, Tuple, Union
from warnings import warn

import numpy as np
import pandas as pd
from tqdm.auto import tqdm

from mixed_manna import logging
from mixed_manna.instance import Instance, make_instance
from mixed_manna.lemke import DegeneracyError, PathInvariantError, TerminationKind
from mixed_manna.solution import solve_instance
from mixed_manna.verify import verify_equilibrium

# Random values are k / DYADIC_DENOMINATOR with k in 1..DYADIC_DENOMINATOR
DYADIC_DENOMINATOR = 2**16

CSV_COLUMNS = ["n", "m", "segs", "trial", "iters", "status"]


class BenchMode(Enum):
    ALL_BADS = "all_bads"
    # First half of the items are goods
    MIXED = "mixed"


class TrialStatus(Enum):
    SOLVED = "solved"
    SOLVED_AFTER_RERUN = "solved_after_rerun"
    UNVERIFIED = "unverified"
    SECONDARY_RAY = "secondary_ray"
    ITERATION_LIMIT = "iteration_limit"
    DEGENERACY = "degeneracy"
    INVARIANT_VIOLATION = "invariant_violation"
    # Solver or verifier raised
    ERROR = "error"

    @property
    def is_solved(self) -> bool:
        return self in (TrialStatus.SOLVED, TrialStatus.SOLVED_AFTER_RERUN)


_STATUS_OF_TERMINATION = {
    TerminationKind.SECONDARY_RAY: TrialStatus.SECONDARY_RAY,
    TerminationKind.ITERATION_LIMIT: TrialStatus.ITERATION_LIMIT,
    TerminationKind.DEGENERACY: TrialStatus.DEGENERACY,
}


@dataclass(frozen=True)
class BenchConfig:
    """One benchmark cell: `trials` random instances with `n` agents,
    `m` items and `segments` segments per utility function."""

    n: int
    m: int
    segments: int
    trials: int
    seed: int = 0
    mode: BenchMode = BenchMode.ALL_BADS
    max_iters: Optional[int] = None
    workers: int = 1

    def __post_init__(self):
        if min(self.n, self.m, self.segments) < 1:
            raise ValueError("n, m and segments must be positive")
        if self.trials < 0:
            raise ValueError("trials must be non-negative")
        if self.workers < 1:
            raise ValueError("workers must be positive")

    @property
    def total_segments(self) -> int:
        return self.n * self.m * self.segments


@dataclass(frozen=True)
class TrialResult:
    trial: int
    iterations: int
    status: TrialStatus


@dataclass(frozen=True)
class BenchStats:
    """Summary of a benchmark cell.  Iteration statistics cover solved
    trials only and are None when nothing was solved."""

    config: BenchConfig
    trials: int
    solved: int
    min_iters: Optional[int]
    mean_iters: Optional[float]
    max_iters: Optional[int]
    failures: Dict[str, int] = field(default_factory=dict)


def _dyadic(values: np.ndarray, scale: int = 1) -> List[Fraction]:
    return [Fraction(int(k), DYADIC_DENOMINATOR * scale) for k in values]


def gen_random_instance(config: BenchConfig, trial: int) -> Instance:
    """Draw instance `trial` of a benchmark cell.

    Slopes have magnitudes k / 2^16 drawn without repetition within a
    function and are arranged so slopes decrease along the segments;
    every segment but the last has length in (0, 1/segments]; endowments
    are drawn in (0, 1] and normalized so each item has unit supply.  The
    stream is seeded with (config.seed, trial)."""
    rng = np.random.default_rng([config.seed, trial])
    goods = config.m // 2 if config.mode is BenchMode.MIXED else 0
    utilities = []
    for _ in range(config.n):
        row = []
        for item in range(config.m):
            draws = rng.choice(
                DYADIC_DENOMINATOR, size=config.segments, replace=False
            )
            magnitudes = sorted(_dyadic(draws + 1))
            if item < goods:
                slopes = magnitudes[::-1]
            else:
                slopes = [-magnitude for magnitude in magnitudes]
            lengths = _dyadic(
                rng.integers(1, DYADIC_DENOMINATOR + 1, size=config.segments - 1),
                scale=config.segments,
            )
            row.append(list(zip(slopes, lengths + [None])))
        utilities.append(row)
    raw = rng.integers(1, DYADIC_DENOMINATOR + 1, size=(config.n, config.m))
    totals = raw.sum(axis=0)
    endowments = [
        [
            Fraction(int(raw[agent, item]), int(totals[item]))
            for item in range(config.m)
        ]
        for agent in range(config.n)
    ]
    return make_instance(utilities, endowments)


def run_trial(config: BenchConfig, trial: int) -> TrialResult:
    """Solve and verify one random instance; failures become statuses and
    never propagate."""
    instance = gen_random_instance(config, trial)
    try:
        result = solve_instance(
            instance, seed=config.seed + trial, max_iters=config.max_iters
        )
    except PathInvariantError as error:
        warn(f"Trial {trial}: path invariant violated: {error}")
        return TrialResult(trial, 0, TrialStatus.INVARIANT_VIOLATION)
    except (ValueError, ArithmeticError, DegeneracyError) as error:
        warn(f"Trial {trial}: solver failed: {error}")
        return TrialResult(trial, 0, TrialStatus.ERROR)
    if result.status is not TerminationKind.SOLUTION:
        return TrialResult(
            trial, result.iterations, _STATUS_OF_TERMINATION[result.status]
        )
    assert result.equilibrium is not None
    try:
        verified = verify_equilibrium(instance, result.equilibrium).overall
    except ValueError as error:
        warn(f"Trial {trial}: verifier failed: {error}")
        return TrialResult(trial, result.iterations, TrialStatus.ERROR)
    if not verified:
        status = TrialStatus.UNVERIFIED
    elif result.reruns:
        status = TrialStatus.SOLVED_AFTER_RERUN
    else:
        status = TrialStatus.SOLVED
    return TrialResult(trial, result.iterations, status)


def summarize(config: BenchConfig, results: List[TrialResult]) -> BenchStats:
    solved = [r.iterations for r in results if r.status.is_solved]
    failures: Dict[str, int] = {}
    for result in results:
        if not result.status.is_solved:
            key = result.status.value
            failures[key] = failures.get(key, 0) + 1
    return BenchStats(
        config=config,
        trials=len(results),
        solved=len(solved),
        min_iters=min(solved) if solved else None,
        mean_iters=float(np.mean(solved)) if solved else None,
        max_iters=max(solved) if solved else None,
        failures=failures,
    )


def results_frame(
    config: BenchConfig, results: List[TrialResult]
) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "n": config.n,
                "m": config.m,
                "segs": config.segments,
                "trial": result.trial,
                "iters": result.iterations,
                "status": result.status.value,
            }
            for result in results
        ],
        columns=CSV_COLUMNS,
    )


@logging.loggable
def run_benchmark(
    config: BenchConfig,
    progress: bool = True,
    log: Union[bool, Dict] = False,  # pylint: disable=unused-argument
) -> Tuple[BenchStats, pd.DataFrame]:
    """Generate, solve and verify every trial of a benchmark cell.

    args:
        config: the cell to run.

        progress: show a progress bar over trials.

        log: To enable logging of this call to wandb, pass either True,
        or a dict containing any of ('tags', 'group', 'notes').

    returns:
        The cell's `BenchStats` and a DataFrame with one row per trial,
        in trial order, with columns n, m, segs, trial, iters, status.
    """
    trials = range(config.trials)
    if config.workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            # map keeps trial order whatever the completion order
            results = list(
                tqdm(
                    pool.map(run_trial, repeat(config), trials),
                    total=config.trials,
                    disable=not progress,
                )
            )
    else:
        results = [
            run_trial(config, trial) for trial in tqdm(trials, disable=not progress)
        ]
    return summarize(config, results), results_frame(config, results)


def summary_row(stats: BenchStats) -> Dict:
    config = stats.config
    return {
        "n": config.n,
        "m": config.m,
        "segs": config.segments,
        "trial": "summary",
        "iters": stats.mean_iters,
        "status": (
            f"solved={stats.solved}/{stats.trials};"
            f"min={stats.min_iters};max={stats.max_iters}"
        ),
    }


def write_csv(stats: BenchStats, frame: pd.DataFrame, out: TextIO):
    """Write the per-trial rows and a summary row, preceded by a comment
    line naming the generation mode."""
    out.write(f"# mode={stats.config.mode.value}\n")
    table = pd.concat(
        [
            frame.astype(object),
            pd.DataFrame([summary_row(stats)], columns=CSV_COLUMNS),
        ],
        ignore_index=True,
    )
    table.to_csv(out, index=False)


def plot_data(frame: pd.DataFrame) -> pd.DataFrame:
    """(total segments, max iterations of solved trials) per benchmark
    cell found in a per-trial frame, for plotting iterations against
    instance size."""
    solved = frame[
        frame["status"].isin(
            [TrialStatus.SOLVED.value, TrialStatus.SOLVED_AFTER_RERUN.value]
        )
    ].copy()
    solved["total_segments"] = solved["n"] * solved["m"] * solved["segs"]
    return (
        solved.groupby("total_segments")["iters"]
        .max()
        .rename("max_iters")
        .reset_index()
        .astype({"total_segments": int, "max_iters": int})
    )
