""" Command-line entry point: `mixed-manna <command> ...`. """

import argparse
from enum import IntEnum
from fractions import Fraction
import sys
from typing import Callable, List, Optional

import prettytable

from mixed_manna import formats, harness, oracle, reduction
from mixed_manna.instance import normalize, preprocess
from mixed_manna.lcp import build_mixed_lcp, choose_constants
from mixed_manna.lemke import PathInvariantError, TerminationKind
from mixed_manna.solution import solve_instance
from mixed_manna.verify import (
    MalformedAllocationError,
    check_fairness,
    verify_equilibrium,
)


class ExitCode(IntEnum):
    OK = 0
    FAILURE = 1
    SECONDARY_RAY = 2
    ITERATION_LIMIT = 3
    DEGENERACY = 4
    INVARIANT_VIOLATION = 5


_EXIT_OF_TERMINATION = {
    TerminationKind.SOLUTION: ExitCode.OK,
    TerminationKind.SECONDARY_RAY: ExitCode.SECONDARY_RAY,
    TerminationKind.ITERATION_LIMIT: ExitCode.ITERATION_LIMIT,
    TerminationKind.DEGENERACY: ExitCode.DEGENERACY,
}


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as file:
        return file.read()


def _write(text: str, path: Optional[str]):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as file:
            file.write(text)


def _error(message: str):
    print(f"error: {message}", file=sys.stderr)


def _yes_no(value: bool) -> str:
    return "yes" if value else "NO"


def solve_command(args: argparse.Namespace) -> ExitCode:
    instance = formats.parse_instance(_read(args.instance))
    try:
        result = solve_instance(
            instance,
            seed=args.seed,
            max_iters=args.max_iters,
            retries=args.retries,
        )
    except PathInvariantError as error:
        _error(f"path invariant violated: {error}")
        return ExitCode.INVARIANT_VIOLATION
    if args.trace:
        for entry in result.trace:
            print(entry)
    code = _EXIT_OF_TERMINATION[result.status]
    if code is not ExitCode.OK:
        detail = result.detail
        if result.status is TerminationKind.DEGENERACY and detail is not None:
            _error(f"degenerate pivot among {', '.join(detail.witness or ())}")
        else:
            _error(
                f"run ended with {result.status.value} after "
                f"{result.iterations} iterations"
            )
        return code
    assert result.equilibrium is not None
    _write(
        formats.format_equilibrium(result.equilibrium, args.decimal), args.output
    )
    print(f"iterations: {result.iterations}")
    return ExitCode.OK


def verify_command(args: argparse.Namespace) -> ExitCode:
    instance = formats.parse_instance(_read(args.instance))
    equilibrium = formats.parse_equilibrium(_read(args.equilibrium), instance)
    try:
        report = verify_equilibrium(instance, equilibrium, Fraction(args.epsilon))
    except MalformedAllocationError as error:
        _error(f"malformed allocation: {error}")
        return ExitCode.FAILURE
    agents = prettytable.PrettyTable()
    agents.field_names = ["agent", "budget", "optimal bundle"]
    for agent, (balanced, optimal) in enumerate(
        zip(report.budgets_balanced, report.optimal_bundles)
    ):
        agents.add_row([agent, _yes_no(balanced), _yes_no(optimal)])
    items = prettytable.PrettyTable()
    items.field_names = ["item", "price", "clears"]
    for item, clears in enumerate(report.clearing):
        items.add_row([item, str(equilibrium.prices[item]), _yes_no(clears)])
    print(agents)
    print(items)
    try:
        fairness = check_fairness(instance, equilibrium)
        print(f"envy-free: {_yes_no(fairness.envy_free)}")
        print(f"proportional: {_yes_no(fairness.proportional)}")
    except ValueError as error:
        print(f"fairness: not applicable ({error})")
    print(f"equilibrium: {_yes_no(report.overall)}")
    return ExitCode.OK if report.overall else ExitCode.FAILURE


def enumerate_command(args: argparse.Namespace) -> ExitCode:
    instance = formats.parse_instance(_read(args.instance))
    try:
        result = oracle.enumerate_equilibria(instance, cap=args.cap)
    except oracle.OracleCapExceeded as error:
        _error(str(error))
        return ExitCode.FAILURE
    for position, equilibrium in enumerate(result.equilibria):
        print(f"# equilibrium {position}")
        print(formats.format_equilibrium(equilibrium), end="")
    if result.degenerate_family:
        print("degenerate family detected")
    else:
        print(f"count: {result.count}")
    return ExitCode.OK


def _bench_config(args: argparse.Namespace, trials: int) -> harness.BenchConfig:
    return harness.BenchConfig(
        n=args.n,
        m=args.m,
        segments=args.segs,
        trials=trials,
        seed=args.seed,
        mode=harness.BenchMode.MIXED if args.mixed else harness.BenchMode.ALL_BADS,
        max_iters=getattr(args, "max_iters", None),
        workers=getattr(args, "workers", 1),
    )


def gen_command(args: argparse.Namespace) -> ExitCode:
    config = _bench_config(args, trials=args.trial + 1)
    instance = harness.gen_random_instance(config, args.trial)
    _write(formats.format_instance(instance), args.output)
    return ExitCode.OK


def bench_command(args: argparse.Namespace) -> ExitCode:
    config = _bench_config(args, trials=args.trials)
    stats, frame = harness.run_benchmark(config, progress=not args.no_progress)
    table = prettytable.PrettyTable()
    table.field_names = ["n", "m", "segs", "trials", "solved", "min", "mean", "max"]
    mean = "-" if stats.mean_iters is None else f"{stats.mean_iters:.1f}"
    table.add_row(
        [
            config.n,
            config.m,
            config.segments,
            stats.trials,
            stats.solved,
            stats.min_iters if stats.min_iters is not None else "-",
            mean,
            stats.max_iters if stats.max_iters is not None else "-",
        ]
    )
    print(table, file=sys.stderr if args.csv is None else sys.stdout)
    for kind, count in stats.failures.items():
        print(f"{kind}: {count}", file=sys.stderr)
    if args.csv is None:
        harness.write_csv(stats, frame, sys.stdout)
    else:
        with open(args.csv, "w", encoding="utf-8", newline="") as file:
            harness.write_csv(stats, frame, file)
    if args.plot_data is not None:
        harness.plot_data(frame).to_csv(args.plot_data, index=False)
    return ExitCode.OK


def reduce_command(args: argparse.Namespace) -> ExitCode:
    game = formats.parse_game(_read(args.game))
    instance = reduction.reduce_game_to_exchange(game)
    if args.fisher:
        instance = reduction.exchange_to_fisher(instance)
    _write(formats.format_instance(instance), args.output)
    return ExitCode.OK


def extract_command(args: argparse.Namespace) -> ExitCode:
    prices = formats.parse_prices(_read(args.prices))
    try:
        alpha, beta = reduction.extract_strategies(prices, args.n)
    except ValueError as error:
        _error(str(error))
        return ExitCode.FAILURE
    print(f"alpha : {' '.join(str(p) for p in alpha.probabilities)}")
    print(f"beta : {' '.join(str(p) for p in beta.probabilities)}")
    return ExitCode.OK


def dump_lcp_command(args: argparse.Namespace) -> ExitCode:
    instance = formats.parse_instance(_read(args.instance))
    reduced = preprocess(normalize(instance)[0]).reduced
    if reduced.num_items == 0:
        _error("every item is priced at zero; there is no LCP to build")
        return ExitCode.FAILURE
    P, R = choose_constants(reduced)
    lcp = build_mixed_lcp(reduced, P, R, seed=args.seed)
    _write(formats.format_lcp(lcp), args.output)
    return ExitCode.OK


def _add_size_args(parser: argparse.ArgumentParser):
    parser.add_argument("--n", type=int, required=True, help="number of agents")
    parser.add_argument("--m", type=int, required=True, help="number of items")
    parser.add_argument(
        "--segs", type=int, required=True, help="segments per utility function"
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--mixed", action="store_true", help="make the first half of the items goods"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixed-manna",
        description=(
            "Competitive equilibria of mixed manna markets with SPLC utilities"
        ),
    )
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="compute an equilibrium")
    solve.add_argument("--instance", required=True)
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--max-iters", type=int, default=None)
    solve.add_argument("--retries", type=int, default=3)
    solve.add_argument("--trace", action="store_true", help="print every pivot")
    solve.add_argument(
        "--decimal", action="store_true", help="write decimals instead of rationals"
    )
    solve.add_argument("-o", "--output", default=None)
    solve.set_defaults(handler=solve_command)

    verify = commands.add_parser("verify", help="check a proposed equilibrium")
    verify.add_argument("--instance", required=True)
    verify.add_argument("--equilibrium", required=True)
    verify.add_argument("--epsilon", type=Fraction, default=Fraction(0))
    verify.set_defaults(handler=verify_command)

    enumerate_ = commands.add_parser(
        "enumerate", help="list all equilibria of a tiny instance"
    )
    enumerate_.add_argument("--instance", required=True)
    enumerate_.add_argument("--cap", type=int, default=oracle.DEFAULT_SEGMENT_CAP)
    enumerate_.set_defaults(handler=enumerate_command)

    gen = commands.add_parser("gen", help="generate a random instance")
    _add_size_args(gen)
    gen.add_argument("--trial", type=int, default=0)
    gen.add_argument("-o", "--output", default=None)
    gen.set_defaults(handler=gen_command)

    bench = commands.add_parser("bench", help="benchmark on random instances")
    _add_size_args(bench)
    bench.add_argument("--trials", type=int, required=True)
    bench.add_argument("--max-iters", type=int, default=None)
    bench.add_argument("--workers", type=int, default=1)
    bench.add_argument("--csv", default=None)
    bench.add_argument("--plot-data", default=None)
    bench.add_argument("--no-progress", action="store_true")
    bench.set_defaults(handler=bench_command)

    reduce = commands.add_parser("reduce", help="reduce a 2-player game to a market")
    reduce.add_argument("--game", required=True)
    reduce.add_argument(
        "--fisher", action="store_true", help="emit the equal-budgets version"
    )
    reduce.add_argument("-o", "--output", default=None)
    reduce.set_defaults(handler=reduce_command)

    extract = commands.add_parser(
        "extract", help="read Nash strategies off reduced-market prices"
    )
    extract.add_argument("--prices", required=True)
    extract.add_argument("--n", type=int, required=True)
    extract.set_defaults(handler=extract_command)

    dump = commands.add_parser("dump-lcp", help="write the LCP of an instance")
    dump.add_argument("--instance", required=True)
    dump.add_argument("--seed", type=int, default=0)
    dump.add_argument("-o", "--output", default=None)
    dump.set_defaults(handler=dump_lcp_command)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler: Callable[[argparse.Namespace], ExitCode] = args.handler
    try:
        return int(handler(args))
    except formats.ParseError as error:
        _error(f"{args.command}: {error}")
    except (OSError, ValueError) as error:
        _error(str(error))
    return int(ExitCode.FAILURE)


if __name__ == "__main__":
    sys.exit(main())
