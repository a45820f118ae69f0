"""Projective and general measurements on C^d.

Fourier convention, used everywhere in the package::

    F[j, k] = exp(2 pi i j k / d) / sqrt(d),   j, k = 0..d-1

(zero-based form of the one-based ``e^{i(j-1)(k-1) 2 pi/d}/sqrt(d)``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidDimension,
    InvalidEta,
    InvalidPovm,
    NotUnitary,
)
from .linalg import as_square, is_hermitian

POVM_TOL = 1e-9


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Povm:
    """Ordered effects ``effects[j]`` (shape ``(n, d, d)``) summing to the identity."""

    effects: np.ndarray

    def __post_init__(self):
        E = np.asarray(self.effects, dtype=np.complex128)
        if E.ndim != 3 or E.shape[1] != E.shape[2] or E.shape[0] < 1:
            raise DimensionMismatch(f"effects must have shape (n, d, d), got {E.shape}")
        if not np.all(np.isfinite(E)):
            raise InvalidPovm("effects contain non-finite entries")
        d = E.shape[1]
        for j, e in enumerate(E):
            if not is_hermitian(e, POVM_TOL):
                raise InvalidPovm(f"effect {j} is not Hermitian")
            lo = np.linalg.eigvalsh(0.5 * (e + e.conj().T))[0]
            if lo < -POVM_TOL:
                raise InvalidPovm(f"effect {j} has negative eigenvalue {lo:.3e}")
        defect = np.linalg.norm(E.sum(axis=0) - np.eye(d))
        if defect > POVM_TOL:
            raise InvalidPovm(f"effects sum to identity only within {defect:.3e}")
        object.__setattr__(self, "effects", _freeze(E))

    @property
    def dim(self) -> int:
        return self.effects.shape[1]

    @property
    def outcomes(self) -> int:
        return self.effects.shape[0]

    def __len__(self) -> int:
        return self.outcomes

    def __getitem__(self, j: int) -> np.ndarray:
        return self.effects[j]

    def conjugate(self, W) -> "Povm":
        """Effects ``W E W^dagger``."""
        W = np.asarray(W, dtype=np.complex128)
        return Povm(W @ self.effects @ W.conj().T)

    def relabel(self, perm) -> "Povm":
        """New measurement whose outcome ``j`` is this one's outcome ``perm[j]``."""
        return Povm(self.effects[list(perm)])

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "outcomes": self.outcomes,
            "effects": [
                [[[float(z.real), float(z.imag)] for z in row] for row in e]
                for e in self.effects
            ],
        }


@dataclass(frozen=True, eq=False)
class Pvm(Povm):
    """Rank-1 projective measurement; ``basis[:, j]`` spans effect ``j``."""

    basis: np.ndarray = field(default=None)

    def __post_init__(self):
        super().__post_init__()
        E = self.effects
        d = self.dim
        if self.outcomes != d:
            raise InvalidPovm(f"a PVM on C^{d} needs {d} effects, got {self.outcomes}")
        for j in range(d):
            if np.linalg.norm(E[j] @ E[j] - E[j]) > POVM_TOL:
                raise InvalidPovm(f"effect {j} is not idempotent")
            for k in range(j + 1, d):
                if np.linalg.norm(E[j] @ E[k]) > POVM_TOL:
                    raise InvalidPovm(f"effects {j} and {k} are not orthogonal")
        if self.basis is None:
            # top eigenvector of each rank-1 projector
            cols = [np.linalg.eigh(0.5 * (e + e.conj().T))[1][:, -1] for e in E]
            basis = np.stack(cols, axis=1)
        else:
            basis = np.asarray(self.basis, dtype=np.complex128)
        object.__setattr__(self, "basis", _freeze(basis))

    @classmethod
    def from_basis(cls, U) -> "Pvm":
        U = np.asarray(U, dtype=np.complex128)
        return cls(np.einsum("aj,bj->jab", U, U.conj()), basis=U)

    def conjugate(self, W) -> "Pvm":
        W = np.asarray(W, dtype=np.complex128)
        return Pvm.from_basis(W @ self.basis)

    def relabel(self, perm) -> "Pvm":
        return Pvm.from_basis(self.basis[:, list(perm)])


def povm_from_json(obj) -> Povm:
    """Inverse of :meth:`Povm.to_json`. Returns a :class:`Pvm` when the effects qualify."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    E = np.array(obj["effects"], dtype=float)
    E = E[..., 0] + 1j * E[..., 1]
    if E.shape[0] != obj["outcomes"] or E.shape[1] != obj["dim"]:
        raise DimensionMismatch("effects do not match declared dim/outcomes")
    try:
        return Pvm(E)
    except InvalidPovm:
        return Povm(E)


@dataclass(frozen=True, eq=False)
class PhaseVector:
    """d phases (radians) of the diagonal phase shifter ``diag(e^{i phi_j})``."""

    phases: np.ndarray

    def __post_init__(self):
        ph = np.array(self.phases, dtype=float, copy=True).reshape(-1)
        if ph.size < 1 or not np.all(np.isfinite(ph)):
            raise InvalidDimension("phase vector must hold finite angles")
        ph.setflags(write=False)
        object.__setattr__(self, "phases", ph)

    @property
    def dim(self) -> int:
        return self.phases.size

    def shifter(self) -> np.ndarray:
        return np.diag(np.exp(1j * self.phases))


def fourier_matrix(d: int) -> np.ndarray:
    d = int(d)
    if d < 1:
        raise InvalidDimension(f"d must be positive, got {d}")
    j = np.arange(d)
    return np.exp(2j * np.pi * np.outer(j, j) / d) / np.sqrt(d)


def _nearest_unitary(U: np.ndarray) -> np.ndarray:
    W, _, Vh = np.linalg.svd(U)
    return W @ Vh


def pvm_from_unitary(U) -> Pvm:
    """PVM whose effect ``j`` projects onto column ``j`` of ``U``.

    ``U`` must be unitary to 1e-8 (Frobenius); it is snapped to the nearest
    unitary before building projectors so the result is exactly complete.
    """
    U = as_square(U, "U")
    d = U.shape[0]
    if np.linalg.norm(U.conj().T @ U - np.eye(d)) > 1e-8:
        raise NotUnitary("U^dagger U deviates from identity by more than 1e-8")
    return Pvm.from_basis(_nearest_unitary(U))


def computational_pvm(d: int) -> Pvm:
    return Pvm.from_basis(np.eye(d, dtype=np.complex128))


def mub_pair(d: int) -> tuple[Pvm, Pvm]:
    """Computational and Fourier bases, a mutually unbiased pair."""
    d = int(d)
    if d < 2:
        raise InvalidDimension(f"mub_pair needs d >= 2, got {d}")
    return computational_pvm(d), Pvm.from_basis(fourier_matrix(d))


def interferometric_unitary(phases, conjugate_fourier: bool = False) -> np.ndarray:
    """``V = F diag(e^{i phi})``, with ``F*`` in place of ``F`` when conjugated."""
    if not isinstance(phases, PhaseVector):
        phases = PhaseVector(phases)
    F = fourier_matrix(phases.dim)
    if conjugate_fourier:
        F = F.conj()
    return F @ phases.shifter()


def interferometric_pvm(phases, conjugate_fourier: bool = False) -> Pvm:
    """Effects ``V^dagger |j><j| V``; the measured vectors are the columns of ``V^dagger``."""
    V = interferometric_unitary(phases, conjugate_fourier)
    return Pvm.from_basis(V.conj().T)


def add_white_noise(m: Povm, eta: float) -> Povm:
    """Unsharp version ``eta E + (1 - eta) tr(E) I / d`` of every effect."""
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise InvalidEta(f"eta must lie in [0, 1], got {eta}")
    if eta == 1.0:
        return m
    d = m.dim
    tr = np.real(np.einsum("jaa->j", m.effects))
    noisy = eta * m.effects + (1.0 - eta) * tr[:, None, None] * np.eye(d) / d
    return Povm(noisy)
