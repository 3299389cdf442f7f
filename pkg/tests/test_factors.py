import numpy as np
import pytest

from ifamlab.dgp import DgpConfig, generate_panel
from ifamlab.errors import DataError
from ifamlab.factors import (default_k_max, eigenvalue_ratio, factor_adjust,
                             sample_covariance)
from ifamlab.linalg import sym_eigen
from ifamlab.types import ReturnPanel

from conftest import random_spd


class TestSampleCovariance:
    def test_two_point_panel(self):
        cov = sample_covariance(np.array([[1.0, 0.0], [-1.0, 0.0]]))
        assert np.allclose(cov.values, [[1.0, 0.0], [0.0, 0.0]])

    def test_constant_column(self, rng):
        panel = rng.standard_normal((30, 3))
        panel[:, 1] = 2.5
        cov = sample_covariance(panel).values
        assert np.all(cov[1, :] == 0.0) and np.all(cov[:, 1] == 0.0)

    def test_against_two_pass_oracle(self, rng):
        x = rng.standard_normal((50, 4))
        cov = sample_covariance(x).values
        means = [x[:, j].mean() for j in range(4)]
        oracle = np.empty((4, 4))
        for i in range(4):
            for j in range(4):
                oracle[i, j] = sum((x[t, i] - means[i]) * (x[t, j] - means[j])
                                   for t in range(50)) / 50
        assert np.abs(cov - oracle).max() <= 1e-12

    def test_mean_shift_invariance(self, rng):
        x = rng.standard_normal((40, 3))
        shifted = x + np.array([5.0, -2.0, 100.0])
        assert np.abs(sample_covariance(x).values
                      - sample_covariance(shifted).values).max() <= 1e-10

    def test_requires_two_rows(self):
        with pytest.raises(DataError):
            sample_covariance(np.ones((1, 3)))

    def test_accepts_panel_type(self, rng):
        panel = ReturnPanel.from_values(rng.standard_normal((20, 3)))
        assert sample_covariance(panel).dim == 3


class TestEigenvalueRatio:
    def test_documented_example(self):
        assert eigenvalue_ratio(np.array([100.0, 50.0, 2.0, 1.9, 1.8]), 4) == 2

    def test_short_example(self):
        assert eigenvalue_ratio(np.array([10.0, 1.0, 0.9]), 2) == 1

    def test_tie_prefers_smaller_k(self):
        assert eigenvalue_ratio(np.array([4.0, 2.0, 1.0, 0.5]), 3) == 1

    def test_needs_enough_eigenvalues(self):
        with pytest.raises(DataError):
            eigenvalue_ratio(np.array([3.0, 1.0]), 2)

    def test_rejects_nonpositive(self):
        with pytest.raises(DataError):
            eigenvalue_ratio(np.array([3.0, 1.0, 0.0]), 2)

    @pytest.mark.slow
    def test_recovers_global_factor_count(self):
        # five pervasive global factors at p=200, T=1000
        hits = 0
        for rep in range(100):
            cfg = DgpConfig(num_groups=10, group_size=20, T=1000, seed=606)
            panel, _ = generate_panel(cfg, replication=rep)
            eigs = sym_eigen(sample_covariance(panel)).values
            if eigenvalue_ratio(eigs, default_k_max(200, 1000)) == 5:
                hits += 1
        assert hits >= 90


class TestFactorAdjust:
    def test_zero_factors_identity(self, rng):
        cov = random_spd(rng, 5)
        adjusted, vals, vecs = factor_adjust(cov, 0)
        assert np.array_equal(adjusted.values, np.asarray(cov))
        assert vals.shape == (0,) and vecs.shape == (5, 0)

    def test_diagonal_spectrum(self):
        adjusted, vals, vecs = factor_adjust(np.diag([5.0, 1.0, 1.0]), 1)
        assert np.allclose(adjusted.values, np.diag([0.0, 1.0, 1.0]))
        assert vals[0] == pytest.approx(5.0)

    def test_reassembly(self, rng):
        cov = random_spd(rng, 6)
        adjusted, vals, vecs = factor_adjust(cov, 2)
        rebuilt = adjusted.values + (vecs * vals) @ vecs.T
        assert np.abs(rebuilt - cov).max() <= 1e-10

    def test_remaining_top_eigenvalue(self, rng):
        cov = random_spd(rng, 8)
        eigs_in = sym_eigen(cov).values
        adjusted, _, _ = factor_adjust(cov, 3)
        assert sym_eigen(adjusted).values[0] <= eigs_in[3] + 1e-10

    def test_r_must_be_below_p(self, rng):
        with pytest.raises(DataError):
            factor_adjust(random_spd(rng, 4), 4)
