import os

import pytest

from typical_clt import cli


def run(argv):
    return cli.main(argv)


class TestVerifyCommand:
    def test_tail_suite_exit_zero(self, tmp_path, capsys):
        out = str(tmp_path / "verify.csv")
        code = run(["verify", "--suite", "tail", "--budget-scale", "0.05",
                    "--seed", "42", "--output", out])
        assert code == cli.EXIT_OK
        assert os.path.exists(out)
        assert "checks passed" in capsys.readouterr().out

    def test_unknown_suite_exit_two(self):
        assert run(["verify", "--suite", "bogus"]) == cli.EXIT_CONFIG_ERROR


class TestSweepCommand:
    def test_small_sweep(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.ini"
        out = tmp_path / "sweep.csv"
        cfg.write_text(f"""
[system]
name = trigonometric

[sweep]
n_list = 16, 32, 64
target = phi
seed = 5
output = {out}

[budgets]
theta = 6
per_theta = 3000
radial = 2000
""")
        code = run(["sweep", "--config", str(cfg)])
        assert code == cli.EXIT_OK
        assert out.exists()
        assert "rate fit" in capsys.readouterr().out

    def test_bad_config_exit_two(self, tmp_path):
        cfg = tmp_path / "bad.ini"
        cfg.write_text("[system]\nname = nonexistent_system\n\n[sweep]\nn_list = 16, 32\n")
        assert run(["sweep", "--config", str(cfg)]) == cli.EXIT_CONFIG_ERROR

    def test_unknown_key_exit_two(self, tmp_path):
        cfg = tmp_path / "bad2.ini"
        cfg.write_text("[system]\nname = uniform\ncolor = blue\n\n[sweep]\nn_list = 16, 32\n")
        assert run(["sweep", "--config", str(cfg)]) == cli.EXIT_CONFIG_ERROR

    def test_fit_unavailable_is_not_an_error(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.ini"
        out = tmp_path / "normal.csv"
        cfg.write_text(f"""
[system]
name = normal

[sweep]
n_list = 16, 32, 64
target = phi
seed = 5
output = {out}

[budgets]
theta = 6
per_theta = 3000
radial = 2000
""")
        code = run(["sweep", "--config", str(cfg)])
        assert code == cli.EXIT_OK
        assert "fit unavailable" in capsys.readouterr().out
        assert out.exists()


class TestOtherCommands:
    def test_functionals(self, tmp_path, capsys):
        out = str(tmp_path / "fn.csv")
        code = run(["functionals", "--spec", "uniform", "--n", "16",
                    "--p", "2", "--budget", "2000", "--seed", "3",
                    "--output", out])
        assert code == cli.EXIT_OK
        assert os.path.exists(out)
        assert "M_p" in capsys.readouterr().out

    def test_distance(self, tmp_path, capsys):
        out = str(tmp_path / "dist.csv")
        code = run(["distance", "--spec", "trigonometric", "--n", "16",
                    "--target", "phi", "--theta-budget", "4",
                    "--per-theta", "2000", "--radial", "1000",
                    "--seed", "3", "--output", out])
        assert code == cli.EXIT_OK
        assert "mean rho" in capsys.readouterr().out
        assert os.path.exists(out)

    def test_charfn(self, tmp_path):
        out = str(tmp_path / "cf.csv")
        code = run(["charfn", "--spec", "walsh", "--n", "15", "--tmax", "4.0",
                    "--points", "32", "--radial", "1000", "--seed", "3",
                    "--output", out])
        assert code == cli.EXIT_OK
        lines = open(out).read().splitlines()
        assert lines[0] == "# typical-clt v1"
        assert lines[1] == "t,re,im,se"
        assert len(lines) == 2 + 32

    def test_bad_arguments_exit_two(self):
        assert run(["distance", "--spec", "uniform", "--n", "16",
                    "--target", "Z"]) == cli.EXIT_CONFIG_ERROR

    def test_missing_command_exit_two(self):
        assert run([]) == cli.EXIT_CONFIG_ERROR
