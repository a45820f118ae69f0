from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bellincompat import (
    DimensionMismatch,
    InvalidDimension,
    InvalidEta,
    InvalidPovm,
    NotUnitary,
    PhaseVector,
    Povm,
    Pvm,
    add_white_noise,
    computational_pvm,
    fourier_matrix,
    haar_unitary,
    interferometric_pvm,
    mub_pair,
    povm_from_json,
    pvm_from_unitary,
    robustness_upper_bound,
)
from bellincompat.cglmp import optimal_setting
from bellincompat.sampling import rng_stream

from .conftest import seeds


def test_identity_gives_computational_basis():
    m = pvm_from_unitary(np.eye(3))
    for j in range(3):
        e = np.zeros((3, 3))
        e[j, j] = 1
        np.testing.assert_allclose(m[j], e)


def test_fourier_effects_have_flat_diagonal():
    m = pvm_from_unitary(fourier_matrix(3))
    for e in m.effects:
        np.testing.assert_allclose(np.diag(e).real, [1 / 3] * 3, atol=1e-12)


def test_hadamard_gives_plus_minus():
    H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    m = pvm_from_unitary(H)
    np.testing.assert_allclose(m[0], 0.5 * np.ones((2, 2)), atol=1e-12)
    np.testing.assert_allclose(m[1], 0.5 * np.array([[1, -1], [-1, 1]]), atol=1e-12)


def test_not_unitary():
    with pytest.raises(NotUnitary):
        pvm_from_unitary(np.diag([1.0, 1.1]))


@pytest.mark.parametrize("d", [2, 3, 4])
def test_haar_pvm_complete(d):
    for i in range(100):
        m = pvm_from_unitary(haar_unitary(d, rng_stream(d, i)))
        assert np.linalg.norm(m.effects.sum(axis=0) - np.eye(d)) <= 1e-9


@pytest.mark.parametrize("d", [2, 3, 4, 5, 7])
def test_mub_overlaps_flat(d):
    a, b = mub_pair(d)
    x = np.abs(a.basis.conj().T @ b.basis)
    assert np.abs(x - 1 / np.sqrt(d)).max() <= 1e-10


def test_mub_pair_invalid():
    with pytest.raises(InvalidDimension):
        mub_pair(1)


def test_interferometric_zero_phases_is_fourier_basis():
    m = interferometric_pvm(np.zeros(3))
    F = fourier_matrix(3)
    # V = F, effects V^dagger |j><j| V project onto rows of F conjugated
    for j in range(3):
        v = F[j].conj()
        np.testing.assert_allclose(m[j], np.outer(v, v.conj()), atol=1e-12)


def test_optimal_phases_give_rank1_pvms():
    s = optimal_setting(3)
    for m in s.alice + s.bob:
        assert isinstance(m, Pvm)
        for e in m.effects:
            assert np.linalg.matrix_rank(e, tol=1e-9) == 1


def test_phase_vector():
    pv = PhaseVector([0.0, 1.0, 2.0])
    assert pv.dim == 3
    np.testing.assert_allclose(np.abs(np.diag(pv.shifter())), 1.0)
    with pytest.raises(ValueError):
        pv.phases[0] = 1.0


class TestNoise:
    def test_eta_one_unchanged(self):
        m = computational_pvm(3)
        assert add_white_noise(m, 1.0) is m

    def test_eta_zero_gives_uniform(self):
        n = add_white_noise(mub_pair(3)[1], 0.0)
        for e in n.effects:
            np.testing.assert_allclose(e, np.eye(3) / 3, atol=1e-15)

    def test_invalid_eta(self):
        for eta in (-0.1, 1.1):
            with pytest.raises(InvalidEta):
                add_white_noise(computational_pvm(2), eta)

    @given(seeds, st.floats(0, 1), st.integers(2, 5))
    def test_completeness_preserved(self, seed, eta, d):
        m = pvm_from_unitary(haar_unitary(d, rng_stream(seed, 0)))
        n = add_white_noise(m, eta)
        assert n.outcomes == d
        assert np.linalg.norm(n.effects.sum(axis=0) - np.eye(d)) <= 1e-9

    def test_three_quarters_is_robustness_boundary(self):
        bob = optimal_setting(3).bob
        assert robustness_upper_bound(*bob) == pytest.approx(0.75, abs=1e-3)

    def test_general_povm_trace_weighting(self):
        E = np.array([np.diag([0.5, 0.0]), np.diag([0.5, 1.0])])
        n = add_white_noise(Povm(E), 0.0)
        np.testing.assert_allclose(n.effects[0], 0.25 * np.eye(2))
        np.testing.assert_allclose(n.effects[1], 0.75 * np.eye(2))


class TestValidation:
    def test_not_complete(self):
        with pytest.raises(InvalidPovm):
            Povm(np.array([np.diag([1.0, 0.0])]))

    def test_not_psd(self):
        with pytest.raises(InvalidPovm):
            Povm(np.array([np.diag([1.5, 0.0]), np.diag([-0.5, 1.0])]))

    def test_not_hermitian(self):
        E = np.array([[[0.5, 0.1], [0.0, 0.5]], [[0.5, -0.1], [0.0, 0.5]]])
        with pytest.raises(InvalidPovm):
            Povm(E)

    def test_bad_shape(self):
        with pytest.raises(DimensionMismatch):
            Povm(np.eye(2))

    def test_pvm_rejects_unsharp(self):
        with pytest.raises(InvalidPovm):
            Pvm(add_white_noise(computational_pvm(2), 0.5).effects)

    def test_effects_read_only(self):
        m = computational_pvm(2)
        with pytest.raises(ValueError):
            m.effects[0, 0, 0] = 2


def test_json_round_trip():
    m = pvm_from_unitary(haar_unitary(3, rng_stream(5, 0)))
    obj = json.loads(json.dumps(m.to_json()))
    back = povm_from_json(obj)
    assert isinstance(back, Pvm)
    np.testing.assert_array_equal(back.effects, m.effects)
    n = add_white_noise(m, 0.5)
    back = povm_from_json(json.dumps(n.to_json()))
    assert type(back) is Povm
    np.testing.assert_array_equal(back.effects, n.effects)


def test_relabel_and_conjugate():
    U = haar_unitary(3, rng_stream(3, 0))
    m = pvm_from_unitary(U)
    r = m.relabel([2, 0, 1])
    np.testing.assert_allclose(r[0], m[2])
    W = haar_unitary(3, rng_stream(3, 1))
    c = m.conjugate(W)
    np.testing.assert_allclose(c[1], W @ m[1] @ W.conj().T, atol=1e-12)
