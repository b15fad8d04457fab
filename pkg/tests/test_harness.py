# %%
""" Test suite for harness.py """

import io
import os
from fractions import Fraction

import pandas as pd
import pytest

from mixed_manna import harness
from mixed_manna.harness import BenchConfig, BenchMode, TrialResult, TrialStatus

WORKERS = os.cpu_count() or 1


@pytest.fixture(name="tiny")
def fixture_tiny() -> BenchConfig:
    """A benchmark cell small enough to solve in a test."""
    return BenchConfig(n=2, m=2, segments=1, trials=3, seed=5)


def test_config_validation():
    with pytest.raises(ValueError):
        BenchConfig(n=0, m=2, segments=1, trials=1)
    with pytest.raises(ValueError):
        BenchConfig(n=2, m=2, segments=1, trials=-1)
    with pytest.raises(ValueError):
        BenchConfig(n=2, m=2, segments=1, trials=1, workers=0)
    assert BenchConfig(n=3, m=4, segments=2, trials=1).total_segments == 24


def test_generator_is_deterministic():
    config = BenchConfig(n=3, m=3, segments=2, trials=2, seed=7)
    assert harness.gen_random_instance(config, 0) == harness.gen_random_instance(
        config, 0
    )
    assert harness.gen_random_instance(config, 0) != harness.gen_random_instance(
        config, 1
    )


def test_generated_values_are_dyadic():
    """Slopes are multiples of 2^-16, lengths of 2^-16 / segments, and
    every item has unit supply."""
    config = BenchConfig(n=3, m=2, segments=3, trials=1, seed=1)
    inst = harness.gen_random_instance(config, 0)
    assert inst.is_normalized
    for functions in inst.utilities:
        for segments in functions:
            assert len(segments) == 3
            for segment in segments:
                assert harness.DYADIC_DENOMINATOR % segment.slope.denominator == 0
                assert segment.slope < 0
            for segment in segments[:-1]:
                assert (
                    3 * harness.DYADIC_DENOMINATOR
                ) % segment.length.denominator == 0
                assert 0 < segment.length <= Fraction(1, 3)
            slopes = [segment.slope for segment in segments]
            assert slopes == sorted(slopes, reverse=True)
            assert len(set(slopes)) == 3


def test_mixed_mode():
    """The first half of the items are goods with falling slopes."""
    config = BenchConfig(
        n=2, m=4, segments=2, trials=1, seed=3, mode=BenchMode.MIXED
    )
    inst = harness.gen_random_instance(config, 0)
    for functions in inst.utilities:
        for item, segments in enumerate(functions):
            slopes = [segment.slope for segment in segments]
            if item < 2:
                assert all(slope > 0 for slope in slopes)
            else:
                assert all(slope < 0 for slope in slopes)
            assert slopes == sorted(slopes, reverse=True)


def test_run_benchmark(tiny):
    stats, frame = harness.run_benchmark(tiny, progress=False)
    assert list(frame.columns) == harness.CSV_COLUMNS
    assert list(frame["trial"]) == [0, 1, 2]
    assert stats.trials == 3
    assert stats.solved == 3
    assert all(TrialStatus(status).is_solved for status in frame["status"])
    assert stats.min_iters is not None and stats.max_iters is not None
    assert stats.min_iters <= stats.mean_iters <= stats.max_iters
    assert stats.failures == {}


def test_run_trial_matches_benchmark(tiny):
    _, frame = harness.run_benchmark(tiny, progress=False)
    result = harness.run_trial(tiny, 1)
    assert result.iterations == frame["iters"][1]


def test_parallel_matches_serial(tiny):
    _, serial = harness.run_benchmark(tiny, progress=False)
    _, parallel = harness.run_benchmark(
        BenchConfig(n=2, m=2, segments=1, trials=3, seed=5, workers=2), progress=False
    )
    pd.testing.assert_frame_equal(serial, parallel)


def test_summarize():
    config = BenchConfig(n=2, m=2, segments=1, trials=4)
    results = [
        TrialResult(0, 4, TrialStatus.SOLVED),
        TrialResult(1, 8, TrialStatus.SOLVED_AFTER_RERUN),
        TrialResult(2, 100, TrialStatus.ITERATION_LIMIT),
        TrialResult(3, 0, TrialStatus.INVARIANT_VIOLATION),
    ]
    stats = harness.summarize(config, results)
    assert stats.solved == 2
    assert (stats.min_iters, stats.mean_iters, stats.max_iters) == (4, 6.0, 8)
    assert stats.failures == {"iteration_limit": 1, "invariant_violation": 1}
    empty = harness.summarize(config, [TrialResult(0, 9, TrialStatus.DEGENERACY)])
    assert empty.mean_iters is None and empty.min_iters is None


def test_solver_errors_become_statuses(tiny, monkeypatch):
    """A trial whose solve raises is recorded as an error and the rest of
    the cell still runs."""
    solve = harness.solve_instance

    def failing_solve(instance, seed=0, **kwargs):
        if seed == tiny.seed + 1:
            raise ValueError("singular basis")
        return solve(instance, seed=seed, **kwargs)

    monkeypatch.setattr(harness, "solve_instance", failing_solve)
    with pytest.warns(UserWarning, match="Trial 1"):
        stats, frame = harness.run_benchmark(tiny, progress=False)
    assert stats.trials == 3
    assert stats.solved == 2
    assert stats.failures == {"error": 1}
    assert frame["status"][1] == TrialStatus.ERROR.value


def test_verifier_errors_become_statuses(tiny, monkeypatch):
    def failing_verify(instance, equilibrium):
        raise ValueError("allocation has the wrong shape")

    monkeypatch.setattr(harness, "verify_equilibrium", failing_verify)
    with pytest.warns(UserWarning, match="verifier failed"):
        result = harness.run_trial(tiny, 0)
    assert result.status is TrialStatus.ERROR


def test_write_csv():
    config = BenchConfig(n=2, m=3, segments=1, trials=2, mode=BenchMode.MIXED)
    results = [
        TrialResult(0, 4, TrialStatus.SOLVED),
        TrialResult(1, 6, TrialStatus.SOLVED),
    ]
    out = io.StringIO()
    harness.write_csv(
        harness.summarize(config, results), harness.results_frame(config, results), out
    )
    lines = out.getvalue().splitlines()
    assert lines[0] == "# mode=mixed"
    assert lines[1] == "n,m,segs,trial,iters,status"
    assert lines[2] == "2,3,1,0,4,solved"
    assert lines[-1].startswith("2,3,1,summary,5.0,solved=2/2")
    assert len(lines) == 5


def test_plot_data():
    frame = pd.DataFrame(
        [
            [2, 2, 1, 0, 5, "solved"],
            [2, 2, 1, 1, 7, "solved_after_rerun"],
            [2, 2, 1, 2, 50, "secondary_ray"],
            [2, 2, 2, 0, 9, "solved"],
        ],
        columns=harness.CSV_COLUMNS,
    )
    points = harness.plot_data(frame)
    assert list(points["total_segments"]) == [4, 8]
    assert list(points["max_iters"]) == [7, 9]


@pytest.mark.slow
@pytest.mark.parametrize(
    "config",
    [
        BenchConfig(n=5, m=5, segments=3, trials=100, seed=1),
        BenchConfig(n=3, m=4, segments=2, trials=100, seed=1, mode=BenchMode.MIXED),
    ],
)
def test_random_instances_all_solve(config):
    """Every random instance solves to a verified equilibrium without a
    secondary ray or a broken path invariant."""
    stats, frame = harness.run_benchmark(config, progress=False)
    assert stats.solved == stats.trials
    assert TrialStatus.SECONDARY_RAY.value not in set(frame["status"])


@pytest.mark.slow
@pytest.mark.parametrize(
    "config, mean, worst",
    [
        (
            BenchConfig(n=5, m=5, segments=5, trials=100, seed=0, workers=WORKERS),
            137.3,
            297,
        ),
        (
            BenchConfig(n=10, m=10, segments=5, trials=50, seed=0, workers=WORKERS),
            369.1,
            None,
        ),
    ],
)
def test_reference_iteration_counts(config, mean, worst):
    """Iteration counts land within a factor of 2 of reference values."""
    stats, _ = harness.run_benchmark(config, progress=False)
    assert stats.solved == config.trials
    assert stats.mean_iters is not None and stats.max_iters is not None
    assert mean / 2 <= stats.mean_iters <= mean * 2
    if worst is not None:
        assert worst / 2 <= stats.max_iters <= worst * 2
