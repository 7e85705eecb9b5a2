import math
import os

import numpy as np
import pytest

from typical_clt import experiments as ex
from typical_clt.errors import ConfigurationError, FitUnavailableError


def rows_from_curve(fn, ns, floor=1e-9):
    return [ex.SweepRow(n=n, mean_rho=fn(n), se=0.0, noise_floor=floor) for n in ns]


def ols_slope(ns, ys):
    """Independent least-squares oracle for the log-log slope."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(ys, dtype=float))
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


NS = (16, 32, 64, 128, 256)


class TestFitRate:
    def test_exact_sqrt_law(self):
        fit = ex.fit_rate(rows_from_curve(lambda n: n ** -0.5, NS))
        assert fit.slope == pytest.approx(-0.5, abs=1e-9)
        assert fit.residual <= 1e-12

    def test_log_over_sqrt_curve(self):
        # ln rho = ln ln n - 0.5 ln n; the local slope 1/ln(n) - 1/2 averages
        # to about -0.25 over this range (oracle: explicit OLS)
        curve = lambda n: math.log(n) / math.sqrt(n)
        fit = ex.fit_rate(rows_from_curve(curve, NS))
        oracle = ols_slope(NS, [curve(n) for n in NS])
        assert fit.slope == pytest.approx(oracle, abs=1e-12)
        assert fit.slope == pytest.approx(-0.2514, abs=0.001)

    def test_sqrt_log_over_n_curve(self):
        curve = lambda n: math.sqrt(math.log(n) / n)
        fit = ex.fit_rate(rows_from_curve(curve, NS))
        oracle = ols_slope(NS, [curve(n) for n in NS])
        assert fit.slope == pytest.approx(oracle, abs=1e-12)
        assert -0.42 <= fit.slope <= -0.30

    def test_constant_rows(self):
        fit = ex.fit_rate(rows_from_curve(lambda n: 0.25, NS))
        assert fit.slope == pytest.approx(0.0, abs=1e-12)

    def test_too_few_rows(self):
        with pytest.raises(FitUnavailableError):
            ex.fit_rate(rows_from_curve(lambda n: n ** -0.5, (16, 32)))

    def test_noise_floor_filtering(self):
        rows = [
            ex.SweepRow(n=16, mean_rho=0.10, se=0.0, noise_floor=0.01),
            ex.SweepRow(n=32, mean_rho=0.07, se=0.0, noise_floor=0.01),
            ex.SweepRow(n=64, mean_rho=0.05, se=0.0, noise_floor=0.01),
            ex.SweepRow(n=128, mean_rho=0.02, se=0.0, noise_floor=0.01),  # below 3x
        ]
        fit = ex.fit_rate(rows)
        assert fit.used == (True, True, True, False)
        oracle = ols_slope((16, 32, 64), (0.10, 0.07, 0.05))
        assert fit.slope == pytest.approx(oracle, abs=1e-12)


class TestSweepConfig:
    def test_valid(self):
        cfg = ex.SweepConfig(system="trigonometric", n_list=(16, 32), seed=1)
        assert cfg.n_list == (16, 32)

    def test_not_increasing(self):
        with pytest.raises(ConfigurationError):
            ex.SweepConfig(system="trigonometric", n_list=(32, 16))

    def test_minimum_dimension(self):
        with pytest.raises(ConfigurationError):
            ex.SweepConfig(system="trigonometric", n_list=(4, 16))

    def test_bad_target(self):
        with pytest.raises(ConfigurationError):
            ex.SweepConfig(system="trigonometric", n_list=(16,), target="H")

    def test_bad_budget(self):
        with pytest.raises(ConfigurationError):
            ex.SweepConfig(system="trigonometric", n_list=(16,), theta_budget=0)

    def test_unknown_system(self):
        with pytest.raises(ConfigurationError):
            ex.SweepConfig(system="lacunary", n_list=(16,))


class TestParseConfig:
    def write(self, tmp_path, text):
        path = tmp_path / "cfg.ini"
        path.write_text(text)
        return str(path)

    def test_round_trip(self, tmp_path):
        cfg = ex.parse_config(self.write(tmp_path, """
[system]
name = uniform

[sweep]
n_list = 16, 32, 64
target = G
seed = 7
output = out.csv

[budgets]
theta = 12
per_theta = 5000
radial = 4000
"""))
        assert cfg.system == "uniform" and cfg.target == "G"
        assert cfg.n_list == (16, 32, 64)
        assert cfg.theta_budget == 12 and cfg.per_theta_budget == 5000

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigurationError):
            ex.parse_config(self.write(tmp_path, """
[system]
name = uniform
flavor = crunchy

[sweep]
n_list = 16, 32
"""))

    def test_unknown_section(self, tmp_path):
        with pytest.raises(ConfigurationError):
            ex.parse_config(self.write(tmp_path, """
[system]
name = uniform

[sweep]
n_list = 16, 32

[plotting]
style = dark
"""))

    def test_missing_file(self):
        with pytest.raises(ConfigurationError):
            ex.parse_config("/nonexistent/config.ini")


class TestRunSweep:
    def small_config(self, tmp_path, **kw):
        defaults = dict(system="trigonometric", n_list=(16, 32, 64),
                        target="phi", theta_budget=6, per_theta_budget=10_000,
                        radial_budget=2000, seed=11,
                        output=str(tmp_path / "sweep.csv"))
        defaults.update(kw)
        return ex.SweepConfig(**defaults)

    def test_writes_csv_and_fits(self, tmp_path):
        cfg = self.small_config(tmp_path)
        fit = ex.run_sweep(cfg)
        assert os.path.exists(cfg.output)
        assert os.path.exists(str(tmp_path / "sweep_summary.csv"))
        assert fit.slope < 0.0
        lines = open(cfg.output).read().splitlines()
        assert lines[0] == "# typical-clt v1"
        assert len(lines) == 2 + 3 * 6  # comment + header + rows

    def test_reproducible_bytes(self, tmp_path):
        cfg = self.small_config(tmp_path)
        ex.run_sweep(cfg)
        first = open(cfg.output, "rb").read()
        ex.run_sweep(cfg)
        assert open(cfg.output, "rb").read() == first

    def test_gaussian_sweep_fit_unavailable(self, tmp_path):
        # the weighted sums of the normal system are exactly standard normal:
        # every row sits at the noise floor and the fit must refuse
        cfg = self.small_config(tmp_path, system="normal",
                                output=str(tmp_path / "normal.csv"))
        with pytest.raises(FitUnavailableError):
            ex.run_sweep(cfg)
        assert os.path.exists(cfg.output)  # CSV still written


class TestRunVerify:
    def test_unknown_suite(self):
        with pytest.raises(ConfigurationError):
            ex.run_verify(suite="astrology")

    def test_tail_suite_passes_and_writes(self, tmp_path):
        out = str(tmp_path / "tail.csv")
        rep = ex.run_verify(suite="tail", budget_scale=0.1, seed=42, output=out)
        assert rep.all_passed
        lines = open(out).read().splitlines()
        assert lines[0] == "# typical-clt v1"
        assert len(lines) == 2 + len(rep.checks)

    def test_sphere_suite_passes(self):
        rep = ex.run_verify(suite="sphere", seed=42)
        assert rep.all_passed

    def test_budget_monotonicity(self):
        # a suite passing at budget B keeps passing at 4B with the same seeds
        small = ex.run_verify(suite="tail", budget_scale=0.02, seed=9)
        if small.all_passed:
            big = ex.run_verify(suite="tail", budget_scale=0.08, seed=9)
            assert big.all_passed

    def test_seed_recorded_in_rows(self, tmp_path):
        rep = ex.run_verify(suite="tail", budget_scale=0.05, seed=77)
        assert all(c.seed == 77 for c in rep.checks)
