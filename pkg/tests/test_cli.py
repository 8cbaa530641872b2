import numpy as np
import pytest

from yosidakit.cli import ConfigError, RunConfig, builtin_specs, read_spec, run


def test_builtin_specs():
    assert builtin_specs() == ["elliptic_n16", "elliptic_single", "parabolic_linear",
                               "parabolic_p3", "scalar"]


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig("annulus", tol=1e-3)
    with pytest.raises(ConfigError):
        RunConfig("annulus", t0=2.0)
    with pytest.raises(ConfigError):
        RunConfig("annulus", stages=1)


def test_read_spec_keeps_key_case(tmp_path):
    cp = read_spec("scalar")
    assert cp["annulus"]["G1_radius"] == "2"
    with pytest.raises(ConfigError):
        read_spec(str(tmp_path / "missing.ini"))


def test_annulus_command(tmp_path, capsys):
    assert run(["--output-dir", str(tmp_path), "annulus", "--spec", "scalar", "--require-certified"]) == 0
    out = capsys.readouterr().out
    assert "outcome: solution in G1\\G2 guaranteed" in out
    assert (tmp_path / "scalar_trace.csv").read_bytes().startswith(b"stage,t,eps,seed,x0,residual,iters\r\n")
    assert (tmp_path / "scalar_summary.txt").exists()


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("YOSIDAKIT_OUTPUT_DIR", str(tmp_path))
    assert run(["parabolic", "--spec", "parabolic_linear"]) == 0
    assert (tmp_path / "parabolic_linear_trajectory.csv").exists()


def test_custom_spec_file(tmp_path, capsys):
    spec = tmp_path / "shifted.ini"
    spec.write_text(
        "[problem]\nkind = annulus\nname = shifted\n"
        "[A]\ntype = power\ngamma = 2\n"
        "[C]\ntype = linear\ncoef = -4  ; roots at +-4\n"
        "[annulus]\nG1_radius = 6\nG2_radius = 1\nv0_star = none\n"
        "[schedule]\nt0 = 0.01\nstages = 13\n")
    assert run(["--output-dir", str(tmp_path), "annulus", "--spec", str(spec)]) == 0
    assert "[4] norm=4 interior" in capsys.readouterr().out


def test_elliptic_uncertified_exit_code(tmp_path):
    code = run(["--output-dir", str(tmp_path), "elliptic", "--spec", "elliptic_n16", "--require-certified"])
    assert code == 3


def test_degree_command(capsys):
    assert run(["degree", "--map", "absxx_minus_x", "--interval", "-2", "2"]) == 0
    assert capsys.readouterr().out.startswith("1\n")
    assert run(["degree", "--map", "square", "--ball", "1"]) == 0
    assert capsys.readouterr().out.startswith("2\n")
    assert run(["degree", "--map", "identity", "--ball", "1", "--dim", "3", "--require-certified"]) == 0
    assert run(["degree", "--map", "cubic", "--ball", "2", "--dim", "3", "--require-certified"]) == 3
    assert run(["degree", "--map", "absxx_minus_x", "--interval", "-1", "1"]) == 3


def test_resolvent_command(capsys):
    assert run(["resolvent", "--op", "abs", "--x", "3", "--lam", "1"]) == 0
    out = capsys.readouterr().out
    assert "x_lambda: 2\n" in out and "a_lambda: 1\n" in out


# at p = 4 the cube's resolvent gap decays like lam^(1/3), too slowly for the properties suite's 1e-4 at lam = 1e-6
@pytest.mark.parametrize("suite, p", [("properties", "2"), ("uniform-bound", "4"), ("quasibound", "4"),
                                      ("continuity", "4"), ("homogeneity", "4")])
def test_verify_suites(tmp_path, suite, p):
    code = run(["--output-dir", str(tmp_path), "verify", "--suite", suite, "--op", "cube", "--p", p,
                "--samples", "10"])
    assert code == 0
    assert (tmp_path / f"verify_{suite}_cube_n1_p{p}.txt").exists()


def test_verify_failure_exit_1(tmp_path):
    code = run(["--output-dir", str(tmp_path), "verify", "--suite", "properties", "--op", "cube", "--p", "4"])
    assert code == 1


@pytest.mark.parametrize("argv", [
    ["verify", "--suite", "properties", "--op", "nope"],
    ["annulus", "--spec", "no_such_problem"],
    ["--tol", "0.1", "annulus", "--spec", "scalar"],
    ["elliptic", "--spec", "scalar"],
    ["degree", "--map", "square", "--ball", "1", "--dim", "3"],
])
def test_config_errors_exit_1(tmp_path, argv):
    assert run(["--output-dir", str(tmp_path), *argv]) == 1


def test_short_schedule_is_rejected(tmp_path):
    # two stages from t0 = 0.1 end above 1e-4
    assert run(["--output-dir", str(tmp_path), "--stages", "2", "annulus", "--spec", "scalar"]) == 1


def test_solver_failure_exit_2():
    # a tolerance below rounding cannot be met
    assert run(["--tol", "1e-300", "resolvent", "--op", "linear", "--x", "1", "2", "--lam", "1",
                "--p", "3"]) == 2
