from __future__ import annotations

import itertools
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bellincompat import (
    OPTIMAL_CHI3,
    OPTIMAL_GAMMA,
    CglmpSetting,
    DimensionMismatch,
    InvalidDimension,
    InvalidEta,
    InvalidState,
    OutOfRange,
    chi_max,
    chi_of_state,
    chsh_closed_form,
    cglmp_operator,
    computational_pvm,
    haar_unitary,
    incompatibility,
    joint_probabilities,
    mub_pair,
    mvs_state,
    noisy_chi,
    optimal_setting,
    pvm_from_unitary,
    schmidt_and_entropy,
    verify_necessity,
)
from bellincompat.kernels import cglmp_weights
from bellincompat.sampling import rng_stream

from .conftest import random_density, random_pvm, random_setting, seeds


def mub_setting(d):
    a = mub_pair(d)
    return CglmpSetting(a, a)


def brute_force_chi(s: CglmpSetting, rho) -> float:
    """CGLMP value straight from the definition: P(A_a - B_b = k mod d) sums, no shortcuts."""
    d = s.dim
    P = joint_probabilities(s, rho)

    def prob(a, b, sign, k):
        # P(A_a = B_b + k) when sign=+1, P(B_b = A_a + k) when sign=-1
        return sum(
            P[a, b, j, l]
            for j in range(d)
            for l in range(d)
            if (sign > 0 and j == (l + k) % d) or (sign < 0 and l == (j + k) % d)
        )

    total = 0.0
    for k in range(d // 2):
        w = 1 - 2 * k / (d - 1)
        total += w * (
            prob(0, 0, +1, k) + prob(1, 0, -1, k + 1) + prob(1, 1, +1, k) + prob(0, 1, -1, k)
            - prob(0, 0, -1, k + 1) - prob(1, 0, +1, k) - prob(1, 1, -1, k + 1) - prob(0, 1, +1, k + 1)
        )
    return total


class TestOperator:
    def test_qubit_mub_tsirelson(self):
        assert chi_max(mub_setting(2)).chi == pytest.approx(2 * np.sqrt(2), abs=1e-8)

    def test_optimal_qutrit(self):
        assert chi_max(optimal_setting(3)).chi == pytest.approx(1 + np.sqrt(11 / 3), abs=1e-10)
        assert OPTIMAL_CHI3 == pytest.approx(2.9149, abs=1e-4)

    def test_equal_alice_settings_give_projector_form(self):
        rng = rng_stream(1, 0)
        a = random_pvm(3, rng)
        s = CglmpSetting((a, a), (random_pvm(3, rng), random_pvm(3, rng)))
        H = (cglmp_operator(s) + np.eye(9)) / 3
        assert np.linalg.norm(H @ H - H) <= 1e-9

    def test_weights_shape_and_d2(self):
        W = cglmp_weights(2)
        assert W.shape == (2, 2, 2, 2)
        assert set(np.unique(W)) <= {-1.0, 0.0, 1.0}
        with pytest.raises(ValueError):
            W[0, 0, 0, 0] = 3

    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    def test_hermitian_and_bounded(self, d):
        for i in range(50):
            C = cglmp_operator(random_setting(d, rng_stream(d, i)))
            assert np.linalg.norm(C - C.conj().T) <= 1e-10
            ev = np.linalg.eigvalsh(C)
            assert ev.min() >= -4 - 1e-9 and ev.max() <= 4 + 1e-9

    @given(seeds, st.integers(2, 4))
    def test_local_unitary_covariance(self, seed, d):
        rng = rng_stream(seed, 0)
        s = random_setting(d, rng)
        WA, WB = haar_unitary(d, rng), haar_unitary(d, rng)
        t = CglmpSetting(tuple(m.conjugate(WA) for m in s.alice), tuple(m.conjugate(WB) for m in s.bob))
        W = np.kron(WA, WB)
        np.testing.assert_allclose(cglmp_operator(t), W @ cglmp_operator(s) @ W.conj().T, atol=1e-10)
        np.testing.assert_allclose(chi_max(t).spectrum, chi_max(s).spectrum, atol=1e-9)

    def test_result_invariants(self):
        res = chi_max(random_setting(3, rng_stream(9, 0)))
        assert res.chi == res.spectrum[0]
        assert abs(np.linalg.norm(res.optimal_state) - 1) <= 1e-10

    def test_setting_validation(self):
        with pytest.raises(DimensionMismatch):
            CglmpSetting(mub_pair(2), mub_pair(3))

    def test_setting_json_round_trip(self):
        s = random_setting(3, rng_stream(10, 0))
        back = CglmpSetting.from_json(json.dumps(s.to_json()))
        assert chi_max(back).chi == pytest.approx(chi_max(s).chi, abs=1e-12)


class TestProbabilityOracle:
    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_matches_operator_trace(self, d):
        for i in range(100):
            rng = rng_stream(100 + d, i)
            s = random_setting(d, rng)
            rho = random_density(d * d, rng)
            assert abs(chi_of_state(s, rho) - np.trace(cglmp_operator(s) @ rho).real) <= 1e-8

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_matches_definition(self, d):
        rng = rng_stream(200 + d, 0)
        s = random_setting(d, rng)
        rho = random_density(d * d, rng)
        assert chi_of_state(s, rho) == pytest.approx(brute_force_chi(s, rho), abs=1e-12)

    @given(seeds, st.integers(2, 4))
    def test_maximally_mixed_gives_zero(self, seed, d):
        s = random_setting(d, rng_stream(seed, 0))
        assert abs(chi_of_state(s, np.eye(d * d) / d**2)) <= 1e-12

    def test_optimal_state_value(self):
        s = optimal_setting(3)
        assert chi_of_state(s, mvs_state(OPTIMAL_GAMMA)) == pytest.approx(2.9149, abs=1e-4)

    def test_maximally_entangled_below_optimum(self):
        # known CGLMP value of the maximally entangled qutrit state: (12 + 8 sqrt 3) / 9
        v = chi_of_state(optimal_setting(3), mvs_state(1.0))
        assert v == pytest.approx((12 + 8 * np.sqrt(3)) / 9, abs=1e-10)
        assert v < OPTIMAL_CHI3 - 1e-3

    def test_state_validation(self):
        s = optimal_setting(3)
        with pytest.raises(InvalidState):
            chi_of_state(s, np.ones(9))
        with pytest.raises(InvalidState):
            chi_of_state(s, np.eye(9))
        with pytest.raises(InvalidState):
            chi_of_state(s, np.ones(4) / 2)
        bad = np.diag([1.5, -0.5] + [0.0] * 7)
        with pytest.raises(InvalidState):
            chi_of_state(s, bad)


class TestOptimalSchmidt:
    def test_state_has_one_gamma_one_structure(self):
        res = chi_max(optimal_setting(3))
        coeffs, _ = schmidt_and_entropy(res.optimal_state, (3, 3))
        target = np.sort(np.array([1, OPTIMAL_GAMMA, 1]) / np.sqrt(2 + OPTIMAL_GAMMA**2))[::-1]
        np.testing.assert_allclose(coeffs, target, atol=1e-4)


class TestChsh:
    def test_examples(self):
        assert chsh_closed_form(0, 0) == 2
        for I in (0.0, 0.5, 1.3, 2.0):
            assert chsh_closed_form(2, I) == pytest.approx(2 * np.sqrt(1 + I / 2))
        assert chsh_closed_form(2, 2) == pytest.approx(chi_max(mub_setting(2)).chi, abs=1e-8)

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            chsh_closed_form(2.5, 1.0)
        with pytest.raises(OutOfRange):
            chsh_closed_form(-0.1, 1.0)

    @given(seeds, st.sampled_from([1.0, 2.0, np.inf]))
    def test_agrees_with_operator(self, seed, p):
        s = random_setting(2, rng_stream(seed, 0))
        ia = incompatibility(*s.alice, p).value
        ib = incompatibility(*s.bob, p).value
        assert chi_max(s).chi == pytest.approx(chsh_closed_form(ia, ib, p), abs=1e-9)


class TestNoise:
    @pytest.mark.parametrize("eta", np.linspace(0, 1, 11))
    def test_quadratic_law(self, eta):
        assert noisy_chi(optimal_setting(3), eta, eta).chi == pytest.approx(OPTIMAL_CHI3 * eta**2, abs=1e-6)

    def test_unit_eta_is_sharp(self):
        s = random_setting(3, rng_stream(3, 3))
        assert noisy_chi(s, 1, 1).chi == chi_max(s).chi

    def test_insufficiency_window(self):
        assert noisy_chi(optimal_setting(3), 0.8, 0.8).chi < 2

    def test_invalid_eta(self):
        with pytest.raises(InvalidEta):
            noisy_chi(optimal_setting(3), 1.2, 1)


class TestNecessity:
    def test_all_permutations_alice(self):
        bob = tuple(random_pvm(3, rng_stream(50, i)) for i in range(2))
        rep = verify_necessity(bob, trials=50, seed=1)
        assert rep.passed and rep.checked == 300
        assert set(rep.per_permutation) == set(itertools.permutations(range(3)))
        assert rep.per_permutation[(0, 1, 2)] <= 2 + 1e-9
        assert rep.per_permutation[(1, 2, 0)] <= 2 + 1e-9

    def test_bob_side(self):
        alice = tuple(random_pvm(3, rng_stream(51, i)) for i in range(2))
        assert verify_necessity(alice, trials=30, seed=2, compatible_side="bob").passed

    def test_only_qutrits(self):
        with pytest.raises(InvalidDimension):
            verify_necessity(mub_pair(2), 1, 0)

    def test_incompatible_pair_breaks_the_bound(self):
        # sanity: the check is not vacuous
        assert chi_max(optimal_setting(3)).chi > 2


def test_prop1_sufficiency_sample():
    for i in range(200):
        assert chi_max(random_setting(3, rng_stream(77, i))).chi > 2


def test_nonmonotone_witness():
    opt = optimal_setting(3)
    mub = mub_pair(3)
    ib_opt = incompatibility(*opt.bob).value
    ib_mub = incompatibility(*mub).value
    assert ib_opt < ib_mub
    best_mub = max(
        chi_max(CglmpSetting(opt.alice, tuple(m.conjugate(haar_unitary(3, rng_stream(90, i))) for m in mub))).chi
        for i in range(50)
    )
    assert chi_max(opt).chi > best_mub
