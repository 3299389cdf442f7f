import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ifamlab.adjacency import build_ifam, normalize_adjacency
from ifamlab.clustering import (adjusted_rand_index, rsc_cluster,
                                select_num_clusters)
from ifamlab.dgp import DgpConfig, generate_panel
from ifamlab.errors import DataError
from ifamlab.linalg import spd_inverse
from ifamlab.types import GroupLabels, ReturnPanel, WeightedAdjacency


def block_adjacency(sizes, weight=1.0):
    p = sum(sizes)
    a = np.zeros((p, p))
    start = 0
    for n in sizes:
        a[start:start + n, start:start + n] = weight
        start += n
    np.fill_diagonal(a, 0.0)
    return WeightedAdjacency(a)


class TestRscCluster:
    def test_separates_two_blocks(self):
        labels = rsc_cluster(block_adjacency([3, 3]), 2, seed=1)
        truth = GroupLabels(np.array([1, 1, 1, 2, 2, 2]), 2)
        assert adjusted_rand_index(labels, truth) == 1.0

    def test_permutation_equivariance(self, rng):
        # distinct block sizes keep the spectrum simple, so permuting
        # assets permutes the eigenvectors exactly
        a = block_adjacency([3, 4, 5]).values
        perm = rng.permutation(12)
        labels = rsc_cluster(WeightedAdjacency(a), 3, seed=5)
        permuted = rsc_cluster(WeightedAdjacency(a[np.ix_(perm, perm)]), 3, seed=5)
        direct = GroupLabels(labels.assignments[perm], 3)
        assert adjusted_rand_index(permuted, direct) == 1.0

    def test_signed_adjacency_accepted(self):
        # a purely negative graph has zero signed degrees; absolute
        # degrees keep the scaling well defined
        a = np.array([[0.0, -1.0], [-1.0, 0.0]])
        labels = rsc_cluster(WeightedAdjacency(a, source="glasso_signed",
                                               signed=True), 2, seed=2)
        assert sorted(labels.assignments.tolist()) == [1, 2]

    def test_signed_blocks_with_repulsion(self):
        a = block_adjacency([3, 3]).values.copy()
        a[0, 3] = a[3, 0] = -0.8
        labels = rsc_cluster(WeightedAdjacency(a, source="glasso_signed",
                                               signed=True), 2, seed=2)
        assert labels.num_groups == 2 and labels.p == 6

    def test_deterministic(self):
        a = block_adjacency([5, 4])
        one = rsc_cluster(a, 2, seed=9)
        two = rsc_cluster(a, 2, seed=9)
        assert np.array_equal(one.assignments, two.assignments)

    def test_zero_adjacency_rejected(self):
        with pytest.raises(DataError):
            rsc_cluster(WeightedAdjacency(np.zeros((4, 4))), 2)

    def test_k_bounds(self):
        a = block_adjacency([2, 2])
        with pytest.raises(DataError):
            rsc_cluster(a, 1)
        with pytest.raises(DataError):
            rsc_cluster(a, 5)


class TestAdjustedRandIndex:
    def test_identical(self):
        a = GroupLabels(np.array([1, 1, 2, 2]), 2)
        assert adjusted_rand_index(a, a) == 1.0

    def test_relabeled_partitions_agree(self):
        a = GroupLabels(np.array([1, 1, 2, 2]), 2)
        b = GroupLabels(np.array([2, 2, 1, 1]), 2)
        assert adjusted_rand_index(a, b) == 1.0

    def test_crossed_partition(self):
        a = GroupLabels(np.array([1, 1, 2, 2]), 2)
        b = GroupLabels(np.array([1, 2, 1, 2]), 2)
        assert adjusted_rand_index(a, b) == pytest.approx(-0.5)

    def test_symmetric(self, rng):
        a = GroupLabels.from_assignments(rng.integers(1, 4, 20))
        b = GroupLabels.from_assignments(rng.integers(1, 3, 20))
        assert adjusted_rand_index(a, b) == adjusted_rand_index(b, a)

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            adjusted_rand_index(GroupLabels(np.array([1]), 1),
                                GroupLabels(np.array([1, 1]), 1))

    @given(st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_relabeling_invariance(self, seed):
        rng = np.random.default_rng(seed)
        raw = rng.integers(1, 5, 15)
        raw[:4] = [1, 2, 3, 4]
        a = GroupLabels.from_assignments(raw)
        b = GroupLabels.from_assignments(rng.integers(1, 3, 15))
        bijection = rng.permutation(4) + 1
        relabeled = GroupLabels.from_assignments(bijection[a.assignments - 1])
        assert adjusted_rand_index(a, b) == pytest.approx(
            adjusted_rand_index(relabeled, b))


class TestSelectNumClusters:
    def test_single_candidate_returned(self, rng):
        panel = ReturnPanel.from_values(rng.standard_normal((40, 6)))
        labels = GroupLabels(np.array([1, 1, 1, 2, 2, 2]), 2)
        k, chosen = select_num_clusters(panel, {2: labels})
        assert k == 2 and chosen is labels

    def test_requires_two_folds(self, rng):
        panel = ReturnPanel.from_values(rng.standard_normal((40, 4)))
        labels = GroupLabels(np.array([1, 1, 2, 2]), 2)
        with pytest.raises(DataError):
            select_num_clusters(panel, {2: labels}, folds=1)

    def test_short_panel_rejected(self, rng):
        panel = ReturnPanel.from_values(rng.standard_normal((3, 4)))
        labels = GroupLabels(np.array([1, 1, 2, 2]), 2)
        with pytest.raises(DataError):
            select_num_clusters(panel, {2: labels}, folds=2)

    @pytest.mark.slow
    def test_recovers_true_count(self):
        # candidates built from the population adjacency; the CV loss
        # should land on the true ten groups most of the time
        hits = 0
        for rep in range(20):
            cfg = DgpConfig(num_groups=10, group_size=20, T=1000, seed=505)
            panel, truth = generate_panel(cfg, replication=rep)
            omega = spd_inverse(truth.sigma_true)
            adjacency = normalize_adjacency(build_ifam(omega),
                                            np.diag(omega.values))
            candidates = {k: rsc_cluster(adjacency, k, seed=rep)
                          for k in range(5, 16)}
            k_hat, _ = select_num_clusters(panel, candidates)
            hits += k_hat == 10
        assert hits >= 14


@pytest.mark.slow
def test_population_ifam_clustering_accuracy():
    # spectral clustering on the true-precision adjacency at the true
    # count recovers memberships nearly perfectly
    aris = []
    for rep in range(20):
        cfg = DgpConfig(num_groups=10, group_size=20, T=10, seed=808)
        _, truth = generate_panel(cfg, replication=rep)
        omega = spd_inverse(truth.sigma_true)
        adjacency = normalize_adjacency(build_ifam(omega), np.diag(omega.values))
        labels = rsc_cluster(adjacency, 10, seed=rep)
        aris.append(adjusted_rand_index(labels, truth.labels))
    assert np.mean(aris) >= 0.95
