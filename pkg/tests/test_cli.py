import io
import subprocess
import sys

import pytest

from stochreach.cli import run_cli
from stochreach.gallery import fig1_game, fig2_automaton, solvency_automaton, DEFAULT_SOLVENCY
from stochreach.game import format_game, parse_game
from stochreach.ocssg import parse_oc


def run(argv, stdin=None, monkeypatch=None):
    out, err = io.StringIO(), io.StringIO()
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = run_cli(argv, out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def fig1_file(tmp_path):
    p = tmp_path / "fig1.txt"
    p.write_text(format_game(fig1_game(10)))
    return str(p)


def test_examples_round_trip():
    code, text, _ = run(["examples", "emit", "fig1", "--depth", "4"])
    assert code == 0 and parse_game(text) == fig1_game(4)
    code, text, _ = run(["examples", "emit", "fig2"])
    assert code == 0 and parse_oc(text) == fig2_automaton()
    code, text, _ = run(["examples", "emit", "solvency"])
    assert parse_oc(text) == solvency_automaton(DEFAULT_SOLVENCY)


def test_oc_check_fig2_from_stdin(monkeypatch):
    _, text, _ = run(["examples", "emit", "fig2"])
    code, out, _ = run(["oc", "check", "-", "--cap", "64"], text, monkeypatch)
    assert code == 0
    assert out.splitlines()[-1] == "verdict\tfalse"
    rows = dict(line.split("\t")[:2] for line in out.splitlines()[:-1])
    assert abs(float(rows["s"]) - 0.5) < 1e-3


def test_solve_no_targets_all_zero(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("state a max\nstate b rand\nedge a b\nedge b a 1\n")
    code, out, _ = run(["solve", str(p)])
    assert code == 0
    assert out == "a\t0\t0\nb\t0\t0\n"


def test_solve_lines_format(fig1_file):
    code, out, _ = run(["solve", fig1_file, "--format", "lines"])
    assert code == 0
    blocks = out.strip().split("\n\n")
    assert blocks[0].splitlines()[0] == "state=r_0"
    assert all(len(b.splitlines()) == 3 for b in blocks)


def test_solve_not_converged_exits_1(fig1_file):
    code, out, err = run(["solve", fig1_file, "--max-iter", "2"])
    assert code == 1 and out and "not converged" in err


def test_threshold_fig1(fig1_file):
    code, out, _ = run(["threshold", fig1_file, "s_3", "0.875", "ge"])
    assert code == 0
    assert out == "winner=max value=7/8 nu=7/8 rel=ge\n"
    _, out, _ = run(["threshold", fig1_file, "s_3", "7/8", "gt", "--format", "lines"])
    assert out.splitlines() == ["winner=min", "value=7/8", "nu=7/8", "rel=gt"]


def test_qualitative_lists_safe_states(fig1_file):
    code, out, _ = run(["qualitative", fig1_file])
    assert code == 0 and out == "s_0\n"


def test_strategy_evaluate_simulate(tmp_path, fig1_file):
    code, sigma, _ = run(["strategy", "max", fig1_file])
    assert code == 0 and "choose r_1 r_2" in sigma
    code, pi, _ = run(["strategy", "min", fig1_file])
    assert code == 0 and pi == ""
    (tmp_path / "sigma").write_text(sigma)
    (tmp_path / "pi").write_text(pi)
    code, out, _ = run(["evaluate", fig1_file, str(tmp_path / "sigma"), str(tmp_path / "pi"), "r_0"])
    assert code == 0 and out == "r_0\t1023/1024\n"
    argv = ["simulate", fig1_file, str(tmp_path / "sigma"), str(tmp_path / "pi"), "s_3",
            "--replicas", "4000", "--seed", "5"]
    code, out, _ = run(argv)
    fields = out.strip().split("\t")
    assert code == 0 and len(fields) == 4 and fields[2] == "4000"
    assert abs(float(fields[0]) - 0.875) <= float(fields[1])
    assert run(argv)[1] == out


def test_oc_solve_and_limits(tmp_path):
    p = tmp_path / "a.txt"
    p.write_text(run(["examples", "emit", "fig2"])[1])
    code, out, _ = run(["oc", "solve", str(p), "--cap", "8"])
    lines = out.splitlines()
    assert code == 0 and len(lines) == 6 * 9
    assert lines[0].split("\t")[:2] == ["s", "0"]
    code, out, _ = run(["oc", "limits", str(p), "--cap", "32", "--workers", "2"])
    assert code == 0
    assert "z\t1\ttrue" in out.splitlines()


def test_usage_errors_exit_2(fig1_file):
    assert run([])[0] == 2
    assert run(["solve"])[0] == 2
    assert run(["threshold", fig1_file, "s_3", "1.5", "ge"])[0] == 2
    assert run(["threshold", fig1_file, "s_3", "0.5", "lt"])[0] == 2
    assert run(["oc", "solve", "x", "--cap", "0"])[0] == 2
    assert run(["examples", "emit", "fig9"])[0] == 2


def test_domain_errors_exit_1(tmp_path, fig1_file):
    assert run(["solve", str(tmp_path / "missing")])[0] == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("state a rand\nedge a a 1/2\n")
    code, _, err = run(["solve", str(bad)])
    assert code == 1 and "line 1" in err
    assert run(["threshold", fig1_file, "nowhere", "0.5", "ge"])[0] == 1


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "stochreach.cli", "examples", "emit", "fig1", "--depth", "2"],
        capture_output=True, text=True, check=True,
    )
    assert proc.stdout.startswith("state r_0 max")
