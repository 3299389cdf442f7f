import numpy as np
import pytest

from ifamlab.dgp import (DgpConfig, GLOBAL_FACTOR_COV, LOCAL_FACTOR_COV,
                         contiguous_labels, generate_panel,
                         purpose_stream, sample_idiosyncratic_covariance,
                         sample_loadings)
from ifamlab.errors import ConfigError
from ifamlab.linalg import cholesky_lower, spd_inverse, sym_eigen


def cfg(**kw):
    base = dict(num_groups=4, group_size=5, T=50, seed=11)
    base.update(kw)
    return DgpConfig(**base)


class TestLoadings:
    def test_first_column_supports(self):
        b_c, b_g = sample_loadings(cfg(), purpose_stream(11, 0, "loadings"))
        assert b_c[:, 0].min() >= 0.2 and b_c[:, 0].max() <= 1.8
        assert b_g[:, 0].min() >= 0.5 and b_g[:, 0].max() <= 1.5

    def test_increment_bounds(self):
        b_c, b_g = sample_loadings(cfg(), purpose_stream(11, 0, "loadings"))
        assert np.abs(b_c[:, 1:] - b_c[:, :1]).max() <= 0.16
        assert np.abs(b_g[:, 1:] - b_g[:, :1]).max() <= 0.3

    def test_deterministic(self):
        a = sample_loadings(cfg(), purpose_stream(11, 0, "loadings"))
        b = sample_loadings(cfg(), purpose_stream(11, 0, "loadings"))
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


class TestIdiosyncraticCovariance:
    def test_bernoulli_rate_value(self):
        # coupling probability per unordered group pair at ten groups
        assert 1.0 / (10 * np.sqrt(np.log(10))) == pytest.approx(0.0659, abs=5e-4)

    def test_empirical_coupling_rate(self):
        # J=10 gives 45 pairs at rate ~0.0659 -> about 2.97 couplings per draw;
        # each accepted pair puts exactly one off-diagonal pair into the
        # inverse (group pairs are distinct), so count support there
        c = cfg(num_groups=10, group_size=2)
        labels = contiguous_labels(c)
        counts = []
        for rep in range(200):
            s = sample_idiosyncratic_covariance(
                c, labels, purpose_stream(3, rep, "idio"))
            prec = 0.03 ** 2 * spd_inverse(s).values
            np.fill_diagonal(prec, 0.0)
            counts.append(np.count_nonzero(np.abs(prec) > 1e-8) // 2)
        expected = 45 / (10 * np.sqrt(np.log(10)))
        assert np.mean(counts) == pytest.approx(expected, abs=0.5)

    def test_no_couplings_gives_scaled_diagonal(self):
        c = cfg(num_groups=2, group_size=2)
        labels = contiguous_labels(c)
        for rep in range(50):
            s = sample_idiosyncratic_covariance(
                c, labels, purpose_stream(5, rep, "idio"))
            off = s.values.copy()
            np.fill_diagonal(off, 0.0)
            if np.all(off == 0.0):
                # diagonal = 0.03^2 / s_i with s_i ~ Gamma(50, 50), tightly near 1
                ratios = 0.03 ** 2 / np.diag(s.values)
                assert np.all((ratios > 0.4) & (ratios < 2.2))
                return
        pytest.fail("no coupling-free draw found in 50 tries")

    def test_always_spd(self):
        c = cfg(num_groups=3, group_size=4)
        labels = contiguous_labels(c)
        for rep in range(20):
            s = sample_idiosyncratic_covariance(
                c, labels, purpose_stream(7, rep, "idio"))
            cholesky_lower(s)

    def test_requires_two_groups(self):
        single = DgpConfig(num_groups=1, group_size=5, T=50, seed=0)
        with pytest.raises(ConfigError):
            sample_idiosyncratic_covariance(
                single, contiguous_labels(single), purpose_stream(0, 0, "idio"))


class TestGeneratePanel:
    def test_population_factor_covariances(self):
        assert GLOBAL_FACTOR_COV[0, 0] == 4.01
        assert GLOBAL_FACTOR_COV[0, 1] == -1.0
        assert np.allclose(GLOBAL_FACTOR_COV[1:, 1:], np.eye(4))
        assert np.allclose(LOCAL_FACTOR_COV,
                           np.array([[0.26, -0.25], [-0.25, 0.25]]))

    def test_sigma_true_assembly(self):
        panel, truth = generate_panel(cfg())
        sigma = truth.loadings_global @ GLOBAL_FACTOR_COV @ truth.loadings_global.T
        for g in range(1, 5):
            members = truth.labels.members(g)
            bg = truth.loadings_local[members]
            sigma[np.ix_(members, members)] += (
                truth.sigma_g_scales[g - 1] * bg @ LOCAL_FACTOR_COV @ bg.T)
        sigma += truth.sigma_u.values
        assert np.abs(sigma - truth.sigma_true.values).max() <= 1e-10

    def test_labels_partition_contiguously(self):
        _, truth = generate_panel(cfg())
        assert np.array_equal(truth.labels.assignments, np.repeat([1, 2, 3, 4], 5))

    def test_factor_part_low_rank(self):
        _, truth = generate_panel(cfg())
        factor_part = truth.sigma_true.values - truth.sigma_u.values
        eigs = sym_eigen(factor_part).values
        r = 5 + 4 * 2
        assert eigs[r] <= 1e-8 * eigs[0]

    def test_deterministic_and_stream_independent(self):
        p1, _ = generate_panel(cfg())
        p2, _ = generate_panel(cfg())
        assert p1.values.tobytes() == p2.values.tobytes()
        p3, _ = generate_panel(cfg(), replication=1)
        assert not np.array_equal(p1.values, p3.values)

    def test_law_of_large_numbers(self):
        panel, truth = generate_panel(
            DgpConfig(num_groups=2, group_size=5, T=100_000, seed=99))
        centered = panel.values - panel.values.mean(axis=0)
        emp = centered.T @ centered / panel.T
        dev = np.abs(emp - truth.sigma_true.values).max()
        assert dev <= 0.05 * np.abs(truth.sigma_true.values).max()

    def test_unknown_purpose_rejected(self):
        with pytest.raises(ConfigError):
            purpose_stream(1, 0, "nonsense")
