"""CGLMP Bell operator, its maximal quantum value and related closed forms.

Index arithmetic is zero-based throughout and every outcome shift is taken
with Euclidean modulo, so ``j - k - 1`` wraps into ``0..d-1``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionMismatch, InvalidDimension, InvalidState, OutOfRange
from .linalg import eig_hermitian
from .measurements import (
    Povm,
    Pvm,
    add_white_noise,
    interferometric_pvm,
    povm_from_json,
    pvm_from_unitary,
)
from .sampling import haar_unitary, rng_stream

STATE_TOL = 1e-9
LOCAL_BOUND = 2.0


@dataclass(frozen=True, eq=False)
class CglmpSetting:
    """Alice's pair ``(A1, A2)`` and Bob's pair ``(B1, B2)`` of d-outcome measurements."""

    alice: tuple[Povm, Povm]
    bob: tuple[Povm, Povm]

    def __post_init__(self):
        alice, bob = tuple(self.alice), tuple(self.bob)
        if len(alice) != 2 or len(bob) != 2:
            raise ValueError("each party needs exactly two measurements")
        d = alice[0].dim
        for m in alice + bob:
            if m.dim != d:
                raise DimensionMismatch("all four measurements must share a dimension")
            if m.outcomes != d:
                raise DimensionMismatch(f"each measurement needs {d} outcomes")
        object.__setattr__(self, "alice", alice)
        object.__setattr__(self, "bob", bob)

    @property
    def dim(self) -> int:
        return self.alice[0].dim

    def alice_effects(self) -> np.ndarray:
        return np.ascontiguousarray(np.stack([m.effects for m in self.alice]))

    def bob_effects(self) -> np.ndarray:
        return np.ascontiguousarray(np.stack([m.effects for m in self.bob]))

    def noisy(self, eta_a: float = 1.0, eta_b: float = 1.0) -> "CglmpSetting":
        return CglmpSetting(
            tuple(add_white_noise(m, eta_a) for m in self.alice),
            tuple(add_white_noise(m, eta_b) for m in self.bob),
        )

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "alice": [m.to_json() for m in self.alice],
            "bob": [m.to_json() for m in self.bob],
        }

    @classmethod
    def from_json(cls, obj) -> "CglmpSetting":
        if isinstance(obj, str):
            obj = json.loads(obj)
        s = cls(
            tuple(povm_from_json(m) for m in obj["alice"]),
            tuple(povm_from_json(m) for m in obj["bob"]),
        )
        if s.dim != obj["dim"]:
            raise DimensionMismatch("declared dim does not match the measurements")
        return s


@dataclass(frozen=True, eq=False)
class CglmpResult:
    chi: float
    optimal_state: np.ndarray
    spectrum: np.ndarray


def optimal_setting(d: int) -> CglmpSetting:
    """Interferometric settings maximising the CGLMP value.

    Alice: phases ``0`` and ``j pi / d``; Bob (conjugate Fourier): phases
    ``j pi / (2d)`` and ``-j pi / (2d)``.
    """
    d = int(d)
    if d < 2:
        raise InvalidDimension(f"d must be >= 2, got {d}")
    j = np.arange(d)
    return CglmpSetting(
        (interferometric_pvm(np.zeros(d)), interferometric_pvm(j * np.pi / d)),
        (
            interferometric_pvm(j * np.pi / (2 * d), conjugate_fourier=True),
            interferometric_pvm(-j * np.pi / (2 * d), conjugate_fourier=True),
        ),
    )


def mvs_state(gamma: float) -> np.ndarray:
    """``(|00> + gamma |11> + |22>) / sqrt(2 + gamma^2)`` as a length-9 vector."""
    psi = np.zeros(9, dtype=np.complex128)
    psi[0], psi[4], psi[8] = 1.0, gamma, 1.0
    return psi / np.sqrt(2.0 + gamma**2)


OPTIMAL_GAMMA = (np.sqrt(11.0) - np.sqrt(3.0)) / 2.0
OPTIMAL_CHI3 = 1.0 + np.sqrt(11.0 / 3.0)


def cglmp_operator(s: CglmpSetting) -> np.ndarray:
    """The d^2 x d^2 Bell operator whose expectation is the CGLMP value."""
    W = kernels.cglmp_weights(s.dim)
    C = np.asarray(kernels.assemble_operator(W, s.alice_effects(), s.bob_effects()))
    return 0.5 * (C + C.conj().T)


def chi_max(s: CglmpSetting) -> CglmpResult:
    """Maximal CGLMP value over all shared states: the top eigenvalue of the operator."""
    eig = eig_hermitian(cglmp_operator(s))
    return CglmpResult(eig.top_value, eig.top_vector.copy(), eig.eigenvalues)


def _check_state(rho, d: int) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.ndim == 1:
        if rho.size != d * d:
            raise InvalidState(f"state vector must have length {d * d}")
        if abs(np.linalg.norm(rho) - 1.0) > STATE_TOL:
            raise InvalidState("state vector is not normalised")
        return np.outer(rho, rho.conj())
    if rho.shape != (d * d, d * d):
        raise InvalidState(f"density matrix must be {d * d} x {d * d}")
    if np.linalg.norm(rho - rho.conj().T) > STATE_TOL:
        raise InvalidState("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > STATE_TOL:
        raise InvalidState("density matrix does not have unit trace")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] < -STATE_TOL:
        raise InvalidState("density matrix is not positive semidefinite")
    return rho


def joint_probabilities(s: CglmpSetting, rho) -> np.ndarray:
    """``P[a, b, j, k] = tr[(A^a_j (x) B^b_k) rho]`` for settings a, b in {0, 1}."""
    d = s.dim
    rho = _check_state(rho, d)
    R = rho.reshape(d, d, d, d)
    A, B = s.alice_effects(), s.bob_effects()
    # tr(M rho) = sum M[(a,b),(c,e)] rho[(c,e),(a,b)]
    P = np.einsum("xjac,ykbe,ceab->xyjk", A, B, R)
    return np.real(P)


def _p_alice_eq_bob_plus(Pab: np.ndarray, shift: int) -> float:
    """P(A = B + shift mod d) = sum_j P(A = j + shift, B = j)."""
    d = Pab.shape[0]
    return float(sum(Pab[(j + shift) % d, j] for j in range(d)))


def _p_bob_eq_alice_plus(Pab: np.ndarray, shift: int) -> float:
    """P(B = A + shift mod d) = sum_j P(A = j, B = j + shift)."""
    d = Pab.shape[0]
    return float(sum(Pab[j, (j + shift) % d] for j in range(d)))


def chi_of_state(s: CglmpSetting, rho) -> float:
    """CGLMP value of a given state, computed from the joint outcome statistics.

    This evaluates the probability form of the expression term by term and is
    kept as an independent check of :func:`cglmp_operator`.
    """
    d = s.dim
    P = joint_probabilities(s, rho)
    A1B1, A1B2, A2B1, A2B2 = P[0, 0], P[0, 1], P[1, 0], P[1, 1]
    total = 0.0
    for k in range(d // 2):
        w = 1.0 - 2.0 * k / (d - 1)
        plus = (
            _p_alice_eq_bob_plus(A1B1, k)
            + _p_bob_eq_alice_plus(A2B1, k + 1)
            + _p_alice_eq_bob_plus(A2B2, k)
            + _p_bob_eq_alice_plus(A1B2, k)
        )
        minus = (
            _p_alice_eq_bob_plus(A1B1, -k - 1)
            + _p_bob_eq_alice_plus(A2B1, -k)
            + _p_alice_eq_bob_plus(A2B2, -k - 1)
            + _p_bob_eq_alice_plus(A1B2, -k - 1)
        )
        total += w * (plus - minus)
    return total


def chsh_closed_form(i_a: float, i_b: float, p=np.inf) -> float:
    """Maximal CHSH value ``2 sqrt(1 + I_A I_B / (4 * 2^(2/p)))`` for qubit PVMs."""
    p = float(p)
    scale = 1.0 if np.isinf(p) else 2.0 ** (1.0 / p)
    top = 2.0 * scale
    for name, v in (("i_a", i_a), ("i_b", i_b)):
        if not -1e-12 <= v <= top + 1e-12:
            raise OutOfRange(f"{name}={v} outside the qubit range [0, {top}]")
    return float(2.0 * np.sqrt(1.0 + i_a * i_b / (4.0 * scale**2)))


def noisy_chi(s: CglmpSetting, eta_a: float, eta_b: float) -> CglmpResult:
    return chi_max(s.noisy(eta_a, eta_b))


@dataclass(frozen=True)
class NecessityReport:
    max_value: float
    checked: int
    per_permutation: dict
    passed: bool


def verify_necessity(
    fixed: tuple[Pvm, Pvm],
    trials: int,
    seed: int,
    compatible_side: str = "alice",
    tol: float = 1e-9,
) -> NecessityReport:
    """Check that a compatible pair on one side never beats the local bound.

    For every trial a Haar-random qutrit PVM ``M`` is drawn for the compatible
    side and its second setting is ``M`` with outcomes permuted (all six
    permutations). ``fixed`` is the other party's pair.
    """
    d = fixed[0].dim
    if d != 3:
        raise InvalidDimension("necessity check is defined for qutrits")
    side = compatible_side.lower()
    if side not in ("alice", "bob"):
        raise ValueError("compatible_side must be 'alice' or 'bob'")
    perms = list(itertools.permutations(range(d)))
    fixed_eff = np.stack([m.effects for m in fixed])
    rand_eff = np.empty((trials * len(perms), 2, d, d, d), dtype=np.complex128)
    for t in range(trials):
        U = haar_unitary(d, rng_stream(seed, t))
        P = kernels.rank1_projectors_np(U)
        for i, perm in enumerate(perms):
            rand_eff[t * len(perms) + i, 0] = P
            rand_eff[t * len(perms) + i, 1] = P[list(perm)]
    fixed_stack = np.ascontiguousarray(np.broadcast_to(fixed_eff, rand_eff.shape))
    W = kernels.cglmp_weights(d)
    if side == "alice":
        tops = kernels.batch_top_eigvals(W, rand_eff, fixed_stack)
    else:
        tops = kernels.batch_top_eigvals(W, fixed_stack, rand_eff)
    tops = np.asarray(tops).reshape(trials, len(perms))
    per_perm = {perm: float(tops[:, i].max()) for i, perm in enumerate(perms)}
    worst = float(tops.max())
    return NecessityReport(worst, int(tops.size), per_perm, worst <= LOCAL_BOUND + tol)


def random_pvm_pair(d: int, rng: np.random.Generator) -> tuple[Pvm, Pvm]:
    return pvm_from_unitary(haar_unitary(d, rng)), pvm_from_unitary(haar_unitary(d, rng))
