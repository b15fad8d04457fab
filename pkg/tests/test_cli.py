# %%
""" Test suite for cli.py """

import pytest

from mixed_manna import cli, formats
from mixed_manna.cli import ExitCode

GOOD_AND_BAD_TEXT = """\
agents 2
items 2
u 0 0 : 1
u 0 1 : -2
u 1 0 : 1
u 1 1 : -3
w 0 : 1/2 1/2
w 1 : 1/2 1/2
"""

GOOD_AND_BAD_EQUILIBRIUM = """\
agents 2
items 2
prices : 2 -4
x 0 : 1 3/4
x 1 : 0 1/4
"""


@pytest.fixture(name="instance_file")
def fixture_instance_file(tmp_path) -> str:
    path = tmp_path / "good_and_bad.txt"
    path.write_text(GOOD_AND_BAD_TEXT)
    return str(path)


def test_solve(instance_file, capsys):
    assert cli.main(["solve", "--instance", instance_file]) == ExitCode.OK
    out = capsys.readouterr().out
    assert "prices : 1/2 -1" in out
    assert "x 0 : 1 3/4" in out
    assert "iterations: " in out


def test_solve_to_file_with_trace(instance_file, tmp_path, capsys):
    output = tmp_path / "eq.txt"
    code = cli.main(
        ["solve", "--instance", instance_file, "--trace", "-o", str(output)]
    )
    assert code == ExitCode.OK
    out = capsys.readouterr().out
    # the first pivot brings z in
    assert out.splitlines()[0].startswith("1, z, ")
    assert "prices : 1/2 -1" in output.read_text()


def test_solve_iteration_limit(instance_file, capsys):
    code = cli.main(["solve", "--instance", instance_file, "--max-iters", "1"])
    assert code == ExitCode.ITERATION_LIMIT
    assert "iteration_limit" in capsys.readouterr().err


def test_verify(instance_file, tmp_path, capsys):
    good = tmp_path / "good.txt"
    good.write_text(GOOD_AND_BAD_EQUILIBRIUM)
    code = cli.main(
        ["verify", "--instance", instance_file, "--equilibrium", str(good)]
    )
    assert code == ExitCode.OK
    out = capsys.readouterr().out
    assert "equilibrium: yes" in out
    # exchange instances carry no weights
    assert "fairness: not applicable" in out
    assert "envy-free" not in out
    bad = tmp_path / "bad.txt"
    bad.write_text(
        GOOD_AND_BAD_EQUILIBRIUM.replace("x 0 : 1 3/4", "x 0 : 0 1/4").replace(
            "x 1 : 0 1/4", "x 1 : 1 3/4"
        )
    )
    code = cli.main(["verify", "--instance", instance_file, "--equilibrium", str(bad)])
    assert code == ExitCode.FAILURE
    assert "equilibrium: NO" in capsys.readouterr().out


def test_enumerate(instance_file, capsys):
    assert cli.main(["enumerate", "--instance", instance_file]) == ExitCode.OK
    out = capsys.readouterr().out
    assert "# equilibrium 0" in out
    assert "count: " in out


def test_gen_writes_a_parseable_instance(tmp_path):
    output = tmp_path / "gen.txt"
    code = cli.main(
        ["gen", "--n", "2", "--m", "3", "--segs", "2", "--seed", "4", "-o", str(output)]
    )
    assert code == ExitCode.OK
    inst = formats.parse_instance(output.read_text())
    assert (inst.num_agents, inst.num_items) == (2, 3)
    assert inst.total_segments == 12


def test_bench(tmp_path, capsys):
    csv = tmp_path / "bench.csv"
    plot = tmp_path / "plot.csv"
    code = cli.main(
        [
            "bench",
            "--n", "2",
            "--m", "2",
            "--segs", "1",
            "--trials", "2",
            "--no-progress",
            "--csv", str(csv),
            "--plot-data", str(plot),
        ]
    )
    assert code == ExitCode.OK
    lines = csv.read_text().splitlines()
    assert lines[0] == "# mode=all_bads"
    assert len(lines) == 5
    assert plot.read_text().splitlines()[0] == "total_segments,max_iters"
    assert "solved" in capsys.readouterr().out


def test_reduce_and_extract(tmp_path, capsys):
    game = tmp_path / "pennies.txt"
    game.write_text("2\n1 0\n0 1\n0 1\n1 0\n")
    market = tmp_path / "market.txt"
    assert cli.main(["reduce", "--game", str(game), "-o", str(market)]) == ExitCode.OK
    inst = formats.parse_instance(market.read_text())
    assert (inst.num_agents, inst.num_items) == (38, 6)
    prices = tmp_path / "prices.txt"
    prices.write_text("-3/2 -3/2 -3/2 -3/2 -1 -2\n")
    assert cli.main(["extract", "--prices", str(prices), "--n", "2"]) == ExitCode.OK
    out = capsys.readouterr().out
    assert "alpha : 1/2 1/2" in out
    assert "beta : 1/2 1/2" in out
    prices.write_text("-3 -1 -1 -1 -1 -1\n")
    assert cli.main(["extract", "--prices", str(prices), "--n", "2"]) == ExitCode.FAILURE


def test_dump_lcp(instance_file, capsys):
    assert cli.main(["dump-lcp", "--instance", instance_file]) == ExitCode.OK
    out = capsys.readouterr().out
    assert out.startswith("# lcp rows=12 P=1 R=3")


def test_errors(tmp_path, capsys):
    broken = tmp_path / "broken.txt"
    broken.write_text("agents 1\nitems 1\nu 0 0 : nope\nw 0 : 1\n")
    assert cli.main(["solve", "--instance", str(broken)]) == ExitCode.FAILURE
    assert "error: solve: line 3, column 9" in capsys.readouterr().err
    missing = str(tmp_path / "missing.txt")
    assert cli.main(["solve", "--instance", missing]) == ExitCode.FAILURE
    with pytest.raises(SystemExit) as info:
        cli.main(["solve"])
    assert info.value.code == 2
