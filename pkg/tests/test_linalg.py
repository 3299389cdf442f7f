import numpy as np
import pytest

from ifamlab.errors import DataError, NotPositiveDefiniteError
from ifamlab.linalg import matrix_norms, spd_inverse, sym_eigen
from ifamlab.types import SymMatrix

from conftest import random_spd


class TestSymEigen:
    def test_diagonal(self):
        eig = sym_eigen(np.diag([3.0, 1.0]))
        assert np.allclose(eig.values, [3.0, 1.0])
        assert np.allclose(eig.vectors, np.eye(2))

    def test_closed_form_2x2(self):
        eig = sym_eigen(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert np.allclose(eig.values, [3.0, 1.0])
        s = 1.0 / np.sqrt(2.0)
        assert np.allclose(np.abs(eig.vectors), [[s, s], [s, s]])
        assert np.allclose(eig.vectors[:, 0], [s, s])

    def test_reconstruction_residual(self, rng):
        m = random_spd(rng, 8)
        eig = sym_eigen(m)
        rebuilt = (eig.vectors * eig.values) @ eig.vectors.T
        assert np.abs(rebuilt - m).max() <= 1e-8 * max(1.0, np.abs(m).max())

    def test_orthonormal(self, rng):
        eig = sym_eigen(random_spd(rng, 12))
        gram = eig.vectors.T @ eig.vectors
        assert np.abs(gram - np.eye(12)).max() <= 1e-10

    def test_sign_convention(self, rng):
        eig = sym_eigen(random_spd(rng, 9))
        for col in eig.vectors.T:
            assert col[np.argmax(np.abs(col))] > 0

    def test_deterministic(self, rng):
        m = random_spd(rng, 7)
        a = sym_eigen(m)
        b = sym_eigen(m.copy())
        assert a.values.tobytes() == b.values.tobytes()
        assert a.vectors.tobytes() == b.vectors.tobytes()

    def test_spd_eigenvalues_positive(self, rng):
        assert sym_eigen(random_spd(rng, 10)).values.min() > 0

    def test_rejects_asymmetric(self):
        with pytest.raises(DataError):
            sym_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestSpdInverse:
    def test_identity(self):
        assert np.allclose(spd_inverse(np.eye(3)).values, np.eye(3))

    def test_diagonal(self):
        inv = spd_inverse(np.diag([4.0, 1.0]))
        assert np.allclose(inv.values, np.diag([0.25, 1.0]))

    def test_closed_form_2x2(self):
        inv = spd_inverse(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert np.allclose(inv.values, np.array([[2.0, -1.0], [-1.0, 2.0]]) / 3.0)

    def test_residual(self, rng):
        m = random_spd(rng, 15)
        inv = spd_inverse(m)
        assert np.abs(m @ inv.values - np.eye(15)).max() <= 1e-8

    def test_involution(self, rng):
        m = random_spd(rng, 10)
        twice = spd_inverse(spd_inverse(m))
        assert np.abs(twice.values - m).max() <= 1e-6

    def test_non_spd_reports_pivot(self):
        bad = np.diag([1.0, 1.0, -1.0])
        with pytest.raises(NotPositiveDefiniteError) as exc:
            spd_inverse(bad)
        assert exc.value.pivot == 3


class TestMatrixNorms:
    def test_identical(self, rng):
        m = random_spd(rng, 5)
        norms = matrix_norms(m, m)
        assert norms == {"max": 0.0, "frobenius": 0.0, "relative_frobenius": 0.0}

    def test_analytic_shift(self):
        truth = np.eye(2)
        est = truth + 0.1 * np.eye(2)
        norms = matrix_norms(est, truth)
        assert norms["max"] == pytest.approx(0.1)
        assert norms["frobenius"] == pytest.approx(0.1 * np.sqrt(2.0))
        assert norms["relative_frobenius"] == pytest.approx(0.1)

    def test_against_dense_recomputation(self, rng):
        est = random_spd(rng, 6)
        truth = random_spd(rng, 6)
        norms = matrix_norms(est, truth)
        diff = est - truth
        assert norms["max"] == pytest.approx(max(abs(diff[i, j])
                                                 for i in range(6) for j in range(6)))
        assert norms["frobenius"] == pytest.approx(np.sqrt((diff ** 2).sum()))
        vals, vecs = np.linalg.eigh(truth)
        root_inv = vecs @ np.diag(vals ** -0.5) @ vecs.T
        direct = np.linalg.norm(root_inv @ est @ root_inv - np.eye(6), "fro") / np.sqrt(6)
        assert norms["relative_frobenius"] == pytest.approx(direct, rel=1e-10)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(DataError):
            matrix_norms(random_spd(rng, 3), random_spd(rng, 4))

    def test_truth_not_spd(self):
        with pytest.raises(NotPositiveDefiniteError):
            matrix_norms(np.eye(2), np.diag([1.0, -1.0]))


class TestSymMatrix:
    def test_mirrors_lower_triangle(self):
        m = SymMatrix(np.array([[1.0, 5.0], [2.0, 3.0]]))
        assert m.values[0, 1] == m.values[1, 0] == 2.0

    def test_rejects_nonfinite(self):
        with pytest.raises(DataError):
            SymMatrix(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_ensure_rejects_asymmetric(self):
        with pytest.raises(DataError):
            SymMatrix.ensure(np.array([[1.0, 1.0], [0.0, 1.0]]))
