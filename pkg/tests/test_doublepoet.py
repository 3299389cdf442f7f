import numpy as np
import pytest

from ifamlab.dgp import DgpConfig, generate_panel
from ifamlab.doublepoet import (double_poet_components, double_poet_estimate,
                                hard_threshold_min_pd, sector_threshold)
from ifamlab.errors import DataError
from ifamlab.factors import sample_covariance
from ifamlab.linalg import cholesky_lower, matrix_norms
from ifamlab.types import GroupLabels, ReturnPanel

from conftest import random_spd


def small_panel(rng, T=60, p=8):
    return ReturnPanel.from_values(rng.standard_normal((T, p)))


class TestDoublePoetEstimate:
    def test_single_group_no_locals_reassembles_sample_covariance(self, rng):
        panel = small_panel(rng)
        labels = GroupLabels(np.ones(8, dtype=int), 1)
        fit = double_poet_estimate(panel, labels, r_c=2, r_local=0,
                                   threshold="none")
        cov = sample_covariance(panel)
        assert np.abs(fit.values - cov.values).max() <= 1e-12

    def test_components_sum_exactly(self, rng):
        panel = small_panel(rng, T=80, p=10)
        labels = GroupLabels(np.repeat([1, 2], 5), 2)
        g, l, r, info = double_poet_components(panel, labels, r_c=2, r_local=1)
        cov = sample_covariance(panel)
        assert np.abs(g + l + r - cov.values).max() <= 1e-12
        assert info["r_c"] == 2

    def test_local_component_block_diagonal(self, rng):
        panel = small_panel(rng, T=100, p=12)
        labels = GroupLabels(np.repeat([1, 2, 3], 4), 3)
        _, local, _, _ = double_poet_components(panel, labels, r_c=1, r_local=1)
        across = labels.assignments[:, None] != labels.assignments[None, :]
        assert np.all(local[across] == 0.0)

    def test_min_pd_output_passes_cholesky(self, rng):
        panel = small_panel(rng, T=40, p=10)
        labels = GroupLabels(np.repeat([1, 2], 5), 2)
        fit = double_poet_estimate(panel, labels, r_c=1, r_local=1)
        cholesky_lower(fit)

    def test_sector_mode_masks_cross_sector_residual(self, rng):
        panel = small_panel(rng, T=50, p=4)
        labels = GroupLabels(np.array([1, 1, 2, 2]), 2)
        sectors = ("a", "a", "b", "b")
        fit = double_poet_estimate(panel, labels, r_c=0, r_local=0,
                                   threshold="sector", sector_labels=sectors)
        cov = sample_covariance(panel).values
        expected = cov.copy()
        expected[:2, 2:] = 0.0
        expected[2:, :2] = 0.0
        assert np.abs(fit.values - expected).max() <= 1e-12

    def test_group_too_small_for_factor_count(self, rng):
        panel = small_panel(rng, T=30, p=4)
        labels = GroupLabels(np.array([1, 1, 2, 2]), 2)
        with pytest.raises(DataError):
            double_poet_estimate(panel, labels, r_c=0, r_local=2)

    def test_sector_mode_requires_labels(self, rng):
        panel = small_panel(rng)
        labels = GroupLabels(np.ones(8, dtype=int), 1)
        with pytest.raises(DataError):
            double_poet_estimate(panel, labels, threshold="sector")

    def test_true_labels_beat_permuted_labels(self):
        # label-quality ablation on the simulated model, mean over 20 draws
        deltas = []
        for rep in range(20):
            cfg = DgpConfig(num_groups=5, group_size=20, T=1000, seed=99)
            panel, truth = generate_panel(cfg, replication=rep)
            rng = np.random.default_rng(rep)
            permuted = GroupLabels(rng.permutation(truth.labels.assignments), 5)
            good = double_poet_estimate(panel, truth.labels)
            bad = double_poet_estimate(panel, permuted)
            deltas.append(
                matrix_norms(bad, truth.sigma_true)["relative_frobenius"]
                - matrix_norms(good, truth.sigma_true)["relative_frobenius"])
        assert np.mean(deltas) > 0


class TestHardThresholdMinPd:
    def test_pd_input_returned_unchanged(self, rng):
        m = random_spd(rng, 6)
        out = hard_threshold_min_pd(m)
        assert np.array_equal(out.values, np.asarray(m))

    def test_non_pd_input_becomes_pd(self):
        # strongly coupled trio with an indefinite leading block
        m = np.array([
            [1.0, 0.999, -0.95],
            [0.999, 1.0, 0.9],
            [-0.95, 0.9, 1.0],
        ])
        assert np.linalg.eigvalsh(m)[0] < 0
        out = hard_threshold_min_pd(m)
        assert np.linalg.eigvalsh(out.values)[0] > 0
        assert np.array_equal(np.diag(out.values), np.diag(m))

    def test_property_sweep_always_pd(self, rng):
        for _ in range(100):
            base = random_spd(rng, 5, cond_floor=0.0)
            noise = rng.standard_normal((5, 5)) * 0.3
            m = base + (noise + noise.T) / 2
            np.fill_diagonal(m, np.abs(np.diag(m)) + 0.1)
            out = hard_threshold_min_pd(m)
            assert np.linalg.eigvalsh(out.values)[0] > 0

    def test_requires_positive_diagonal(self):
        with pytest.raises(DataError):
            hard_threshold_min_pd(np.diag([1.0, -2.0]))


class TestSectorThreshold:
    def test_single_sector_identity(self, rng):
        m = random_spd(rng, 4)
        out = sector_threshold(m, ["x"] * 4)
        assert np.array_equal(out.values, np.asarray(m))

    def test_all_distinct_gives_diagonal(self, rng):
        m = random_spd(rng, 4)
        out = sector_threshold(m, ["a", "b", "c", "d"])
        assert np.array_equal(out.values, np.diag(np.diag(np.asarray(m))))

    def test_two_sector_mask(self, rng):
        m = np.asarray(random_spd(rng, 4))
        out = sector_threshold(m, ["a", "a", "b", "b"]).values
        assert np.all(out[:2, 2:] == 0.0) and np.all(out[2:, :2] == 0.0)
        assert np.array_equal(out[:2, :2], m[:2, :2])
        assert np.array_equal(out[2:, 2:], m[2:, 2:])

    def test_label_count_mismatch(self, rng):
        with pytest.raises(DataError):
            sector_threshold(random_spd(rng, 4), ["a", "b"])
