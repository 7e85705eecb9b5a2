import math

import numpy as np
import pytest

from typical_clt import systems as sy
from typical_clt.errors import ConfigurationError, DomainError, InsufficientDataError
from typical_clt.rng import make_rng
from typical_clt.sphere_law import Direction, sample_direction


def spec_iid(base, n=16):
    return sy.SystemSpec(kind="iid", n=n, base=base)


class TestSpecValidation:
    def test_trigonometric_needs_even_n(self):
        with pytest.raises(ConfigurationError):
            sy.SystemSpec(kind="trigonometric", n=7)

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            sy.SystemSpec(kind="levy_flight", n=8)

    def test_unknown_base(self):
        with pytest.raises(ConfigurationError):
            sy.SystemSpec(kind="iid", n=8, base="cauchy")

    def test_walsh_duplicate_characters(self):
        with pytest.raises(ConfigurationError):
            sy.SystemSpec(kind="walsh", n=3, characters=((1,), (2,), (1,)))

    def test_walsh_empty_character(self):
        with pytest.raises(ConfigurationError):
            sy.SystemSpec(kind="walsh", n=2, characters=((), (1,)))

    def test_eigenvalues_must_be_positive(self):
        with pytest.raises(ConfigurationError):
            sy.SystemSpec(kind="gaussian_anisotropic", n=3, eigenvalues=(1.0, -1.0, 2.0))

    def test_eigenvalue_count(self):
        with pytest.raises(ConfigurationError):
            sy.SystemSpec(kind="gaussian_anisotropic", n=3, eigenvalues=(1.0, 2.0))

    def test_default_walsh_characters_graded_lex(self):
        chars = sy.default_walsh_characters(9)
        assert chars == ((1,), (2,), (3,), (4,), (1, 2), (1, 3), (1, 4), (2, 3), (2, 4))

    def test_fixed_norm_flags(self):
        assert sy.SystemSpec(kind="trigonometric", n=8).is_fixed_norm
        assert sy.SystemSpec(kind="walsh", n=7).is_fixed_norm
        assert spec_iid("rademacher").is_fixed_norm
        assert not spec_iid("uniform").is_fixed_norm


class TestSampling:
    def test_trigonometric_rows_fixed_norm(self):
        batch = sy.sample_vector(sy.SystemSpec(kind="trigonometric", n=64), 500, 3)
        norms = np.square(batch.matrix).sum(axis=1)
        assert np.abs(norms - 64.0).max() <= 1e-9

    def test_fixed_norm_rademacher_rows(self):
        batch = sy.sample_vector(sy.SystemSpec(kind="fixed_norm_rademacher", n=32), 500, 3)
        assert np.all(np.square(batch.matrix).sum(axis=1) == 32.0)
        assert set(np.unique(batch.matrix)) == {-1.0, 1.0}

    def test_normal_mean_square(self):
        batch = sy.sample_vector(spec_iid("normal", 16), 100_000, 5)
        ratio = np.square(batch.matrix).sum(axis=1).mean() / 16.0
        assert 0.98 <= ratio <= 1.02

    def test_uniform_base_bounds_and_variance(self):
        batch = sy.sample_vector(spec_iid("uniform", 4), 50_000, 9)
        assert np.abs(batch.matrix).max() <= math.sqrt(3.0)
        assert batch.matrix.var() == pytest.approx(1.0, abs=0.02)

    def test_exponential_base_centered(self):
        batch = sy.sample_vector(spec_iid("exponential", 4), 50_000, 9)
        assert batch.matrix.min() >= -1.0
        assert batch.matrix.mean() == pytest.approx(0.0, abs=0.02)
        assert batch.matrix.var() == pytest.approx(1.0, abs=0.03)

    def test_deterministic_given_seed(self):
        spec = sy.SystemSpec(kind="walsh", n=15)
        a = sy.sample_vector(spec, 1000, 42)
        b = sy.sample_vector(spec, 1000, 42)
        assert np.array_equal(a.matrix, b.matrix)

    def test_sharded_batch_deterministic_and_order_free(self):
        spec = spec_iid("normal", 8)
        count = sy.SHARD_SIZE * 2 + 17
        batch = sy.sample_vector(spec, count, 7)
        assert np.array_equal(batch.matrix, sy.sample_vector(spec, count, 7).matrix)
        # assembling shards in reverse order gives the same matrix
        out = np.empty((count, 8))
        bounds = list(range(0, count, sy.SHARD_SIZE))
        for shard, lo in reversed(list(enumerate(bounds))):
            hi = min(lo + sy.SHARD_SIZE, count)
            out[lo:hi] = sy._sample_rows(spec, hi - lo, make_rng(7, "shard", shard))
        assert np.array_equal(batch.matrix, out)

    def test_count_validation(self):
        with pytest.raises(ConfigurationError):
            sy.sample_vector(spec_iid("normal"), 0, 1)

    def test_extension_point(self):
        sy.register_sampler("doubled_rademacher", lambda spec, count, gen:
                            (gen.integers(0, 2, size=(count, spec.n)) * 2.0 - 1.0) * 2.0)
        spec = sy.SystemSpec(kind="doubled_rademacher", n=4)
        batch = sy.sample_vector(spec, 100, 3)
        assert set(np.unique(batch.matrix)) == {-2.0, 2.0}


class TestWeightedSum:
    def test_coordinate_projection(self):
        spec = spec_iid("rademacher", 8)
        batch = sy.sample_vector(spec, 2000, 1)
        e1 = Direction(coords=np.eye(8)[0])
        s = sy.weighted_sum(batch, e1)
        assert set(np.unique(s)) <= {-1.0, 1.0}

    def test_diagonal_direction(self):
        spec = spec_iid("rademacher", 16)
        batch = sy.sample_vector(spec, 2000, 1)
        diag = Direction(coords=np.full(16, 0.25))
        s = sy.weighted_sum(batch, diag)
        expect = batch.matrix.sum(axis=1) / 4.0
        assert np.allclose(s, expect, atol=1e-12)

    def test_variance_bounded_by_M2(self):
        spec = sy.SystemSpec(kind="trigonometric", n=32)
        batch = sy.sample_vector(spec, 50_000, 2)
        theta = sample_direction(32, 4)
        s = sy.weighted_sum(batch, theta)
        se = np.square(s).std(ddof=1) / math.sqrt(s.size)
        assert s.var() <= 1.0 + 3.0 * se  # M_2^2 = 1 for isotropic systems

    def test_dimension_mismatch(self):
        batch = sy.sample_vector(spec_iid("normal", 8), 10, 0)
        with pytest.raises(DomainError):
            sy.weighted_sum(batch, Direction(coords=np.eye(4)[0]))


class TestCovarianceSummary:
    def test_anisotropic_exact(self):
        spec = sy.SystemSpec(kind="gaussian_anisotropic", n=4, eigenvalues=(2, 1, 1, 1))
        cs = sy.covariance_summary(spec, 10)
        assert cs.exact
        assert cs.max_eigenvalue == 2.0
        assert cs.trace == 5.0
        assert cs.mean_square_eigenvalue == pytest.approx((4 + 3) / 4)

    def test_trigonometric_isotropic(self):
        spec = sy.SystemSpec(kind="trigonometric", n=8)
        cs = sy.covariance_summary(spec, 50_000, 11)
        tol = 5.0 * math.sqrt(8 / 50_000)
        assert abs(cs.max_eigenvalue - 1.0) <= tol
        assert abs(cs.trace / 8.0 - 1.0) <= tol
        assert abs(cs.mean_square_eigenvalue - 1.0) <= tol

    def test_walsh_orthogonality(self):
        spec = sy.SystemSpec(kind="walsh", n=15)
        batch = sy.sample_vector(spec, 40_000, 3)
        cov = batch.matrix.T @ batch.matrix / 40_000
        off = cov - np.diag(np.diag(cov))
        assert np.abs(off).max() <= 4.0 / math.sqrt(40_000)

    def test_insufficient_budget(self):
        with pytest.raises(InsufficientDataError):
            sy.covariance_summary(spec_iid("normal", 32), 16)


class TestIsotropyProperty:
    @pytest.mark.parametrize("spec", [
        spec_iid("rademacher", 12), spec_iid("uniform", 12),
        sy.SystemSpec(kind="trigonometric", n=12),
        sy.SystemSpec(kind="walsh", n=12),
    ], ids=lambda s: s.spec_id)
    def test_quadratic_form_near_identity(self, spec):
        batch = sy.sample_vector(spec, 30_000, 17)
        rng = np.random.default_rng(99)
        for _ in range(20):
            a = rng.standard_normal(spec.n)
            a /= np.linalg.norm(a)
            proj_sq = np.square(batch.matrix @ a)
            se = proj_sq.std(ddof=1) / math.sqrt(proj_sq.size)
            assert abs(proj_sq.mean() - 1.0) <= 5.0 * se
