from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bellincompat import (
    DimensionMismatch,
    InvalidP,
    NotHermitian,
    commutator,
    eig_hermitian,
    kron,
    mvs_state,
    partial_trace,
    schatten_norm,
)
from bellincompat.cglmp import cglmp_operator, optimal_setting
from bellincompat.sampling import rng_stream

from .conftest import random_density, seeds


def rand_matrix(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def rand_herm(rng, n):
    A = rand_matrix(rng, n)
    return A + A.conj().T


class TestEig:
    def test_identity(self):
        np.testing.assert_allclose(eig_hermitian(np.eye(3)).eigenvalues, [1, 1, 1])

    def test_diagonal_sorted_descending(self):
        np.testing.assert_allclose(eig_hermitian(np.diag([2.0, -1.0, 0.0])).eigenvalues, [2, 0, -1])

    def test_cglmp_optimum_top_value(self):
        top = eig_hermitian(cglmp_operator(optimal_setting(3))).top_value
        assert abs(top - 2.9149) < 1e-4

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitian):
            eig_hermitian(np.array([[0, 1], [0, 0]]))

    def test_rejects_non_square(self):
        with pytest.raises(DimensionMismatch):
            eig_hermitian(np.zeros((2, 3)))

    def test_within_tolerance_is_symmetrised(self):
        H = np.diag([1.0, 2.0]).astype(complex)
        H[0, 1] = 1e-12
        eig = eig_hermitian(H)
        assert eig.eigenvalues[0] == pytest.approx(2.0)

    @given(seeds, st.integers(2, 9))
    def test_reconstruction_and_orthonormality(self, seed, n):
        H = rand_herm(rng_stream(seed, 0), n)
        eig = eig_hermitian(H)
        assert np.linalg.norm(eig.reconstruct() - H) <= 1e-10 * max(1, np.linalg.norm(H))
        V = eig.eigenvectors
        assert np.abs(V.conj().T @ V - np.eye(n)).max() <= 1e-10
        assert np.all(np.diff(eig.eigenvalues) <= 0)

    def test_variational_upper_bound(self):
        rng = rng_stream(7, 0)
        H = rand_herm(rng, 6)
        top = eig_hermitian(H).top_value
        v = rng.standard_normal((1000, 6)) + 1j * rng.standard_normal((1000, 6))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        vals = np.real(np.einsum("na,ab,nb->n", v.conj(), H, v))
        assert np.all(vals <= top + 1e-8)


class TestSchatten:
    def test_examples(self):
        assert schatten_norm(np.eye(3)) == pytest.approx(1.0)
        assert schatten_norm(np.eye(3), 1) == pytest.approx(3.0)
        assert schatten_norm(np.diag([1.0, -1.0]), 2) == pytest.approx(np.sqrt(2))

    def test_invalid_p(self):
        with pytest.raises(InvalidP):
            schatten_norm(np.eye(2), 0.5)

    def test_non_square(self):
        with pytest.raises(DimensionMismatch):
            schatten_norm(np.zeros((2, 3)))

    @given(seeds, st.floats(1.0, 10.0), st.complex_numbers(max_magnitude=100, allow_nan=False, allow_infinity=False))
    def test_homogeneous(self, seed, p, c):
        A = rand_matrix(rng_stream(seed, 0), 4)
        assert abs(schatten_norm(c * A, p) - abs(c) * schatten_norm(A, p)) <= 1e-10 * max(1, abs(c) * schatten_norm(A, p))

    @given(seeds, st.floats(1.0, 50.0))
    def test_monotone_in_p(self, seed, p):
        A = rand_matrix(rng_stream(seed, 0), 4)
        n_inf, n_p, n_1 = schatten_norm(A), schatten_norm(A, p), schatten_norm(A, 1)
        assert n_inf <= n_p * (1 + 1e-12) and n_p <= n_1 * (1 + 1e-12)


class TestKronCommutator:
    def test_kron_examples(self):
        np.testing.assert_allclose(kron(np.eye(2), np.eye(3)), np.eye(6))
        np.testing.assert_allclose(kron(np.diag([1, 0]), np.diag([0, 1])), np.diag([0, 1, 0, 0]))
        e0, e2 = np.zeros(3), np.zeros(3)
        e0[0], e2[2] = 1, 1
        P = kron(np.outer(e0, e0), np.outer(e2, e2))
        target = np.zeros(9)
        target[2] = 1
        np.testing.assert_allclose(P, np.outer(target, target))

    @given(seeds)
    def test_kron_spectrum_is_product(self, seed):
        rng = rng_stream(seed, 0)
        A, B = rand_herm(rng, 2), rand_herm(rng, 3)
        ev = np.sort(np.linalg.eigvalsh(kron(A, B)))
        prod = np.sort(np.outer(np.linalg.eigvalsh(A), np.linalg.eigvalsh(B)).ravel())
        np.testing.assert_allclose(ev, prod, atol=1e-8)

    def test_commutator_examples(self):
        assert np.abs(commutator(np.diag([1, 2]), np.diag([3, 4]))).max() == 0
        X = np.array([[0, 1], [1, 0]])
        Z = np.diag([1, -1])
        assert schatten_norm(commutator(X, Z)) == pytest.approx(2.0)
        P = np.diag([1.0, 0.0, 0.0])
        assert np.abs(commutator(P, P)).max() == 0

    def test_commutator_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            commutator(np.eye(2), np.eye(3))


class TestPartialTrace:
    def test_mvs0(self):
        psi = mvs_state(0.0)
        np.testing.assert_allclose(partial_trace(np.outer(psi, psi.conj()), (3, 3), "A"), np.diag([0.5, 0, 0.5]), atol=1e-15)

    def test_mvs1(self):
        psi = mvs_state(1.0)
        np.testing.assert_allclose(partial_trace(np.outer(psi, psi.conj()), (3, 3), "B"), np.eye(3) / 3, atol=1e-15)

    @given(seeds)
    def test_product_state_and_trace(self, seed):
        rng = rng_stream(seed, 0)
        rho, sigma = random_density(2, rng), random_density(3, rng)
        M = np.kron(rho, sigma)
        np.testing.assert_allclose(partial_trace(M, (2, 3), "A"), rho, atol=1e-12)
        np.testing.assert_allclose(partial_trace(M, (2, 3), "B"), sigma, atol=1e-12)
        X = rand_matrix(rng, 6)
        for keep in "AB":
            assert abs(np.trace(partial_trace(X, (2, 3), keep)) - np.trace(X)) <= 1e-10 * max(1, abs(np.trace(X)))

    def test_bad_dims(self):
        with pytest.raises(DimensionMismatch):
            partial_trace(np.eye(6), (2, 2))
