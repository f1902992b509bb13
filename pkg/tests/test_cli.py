import csv

import pytest

from nlqn.cli import build_parser, main


def test_optimize_zero_budget(tmp_path):
    assert main(["optimize", "--func", "levy", "--dim", "50", "--budget", "0", "--out", str(tmp_path)]) == 0
    rows = list(csv.reader(open(tmp_path / "optimize_levy_n50_seed0.csv")))
    assert len(rows) == 2 and rows[1][4] == "init"


def test_optimize_small_run(tmp_path, capsys):
    argv = ["optimize", "--func", "rcigar", "--dim", "5", "--budget", "2000", "--sigma0", "3", "--k", "10", "--out", str(tmp_path)]
    assert main(argv) == 0
    assert "best f" in capsys.readouterr().out
    rows = list(csv.reader(open(tmp_path / "optimize_rcigar_n5_seed0.csv")))
    assert int(rows[-1][6]) >= 2000


def test_optimize_siam_preset(tmp_path):
    assert main(["optimize", "--func", "siam", "--budget", "500", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "optimize_siam_n2_seed0.csv").exists()


def test_unknown_function_lists_registry(tmp_path, capsys):
    assert main(["optimize", "--func", "nope", "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "levy" in err and "siam" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["optimize", "--func", "levy", "--sigma0", "-1"],
        ["optimize", "--func", "levy", "--shrink", "2"],
        ["optimize", "--func", "levy", "--budget", "1.5"],
        ["exp3", "--runs", "0"],
        ["optimize", "--func", "levy", "--bogus", "1"],
        ["optimize", "--func", "siam", "--dim", "3"],
    ],
)
def test_bad_flags_exit_2(argv, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(argv + ["--out", str(tmp_path)])
    assert exc.value.code == 2


def test_out_env_default(monkeypatch, tmp_path):
    monkeypatch.setenv("NLQN_OUT", str(tmp_path / "env"))
    args = build_parser().parse_args(["exp3"])
    assert args.out == str(tmp_path / "env")
    assert args.seed == 0


def test_help_shows_reference_defaults():
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices
    text = sub["exp3"].format_help() + sub["optimize"].format_help() + sub["exp2"].format_help()
    for token in ("30000", "sigma0=1", "k=3", "10/11", "sigma0=10", "k=3n", "1/2", "100000"):
        assert token in text


def test_exp3_writes_summary(tmp_path, capsys):
    assert main(["exp3", "--runs", "2", "--budget", "300", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "exp3_traces.csv").exists() and (tmp_path / "exp3_summary.csv").exists()
    assert "success fraction" in capsys.readouterr().out


def test_exp1_and_exp2_small(tmp_path):
    assert main(["exp1", "--trials", "1", "--out", str(tmp_path)]) == 0
    assert main(["exp2", "--runs", "1", "--budget", "500", "--dim", "3", "--funcs", "levy", "--out", str(tmp_path)]) == 0
    assert main(["exp2", "--funcs", "siam", "--out", str(tmp_path)]) == 2


def test_checks_exit_zero(tmp_path):
    assert main(["check-bound", "--models", "2", "--samples", "20000", "--out", str(tmp_path)]) == 0
    assert main(["check-consistency", "--seeds", "3", "--out", str(tmp_path)]) == 0
    assert main(["check-gradients", "--trials", "10", "--dim", "4", "--out", str(tmp_path)]) == 0


def test_jobs_flag(tmp_path):
    assert main(["exp3", "--runs", "2", "--budget", "200", "--jobs", "2", "--out", str(tmp_path / "a")]) == 0
    assert main(["exp3", "--runs", "2", "--budget", "200", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "exp3_traces.csv").read_bytes() == (tmp_path / "b" / "exp3_traces.csv").read_bytes()
