"""Dense complex linear algebra for small operators (d <= 16 per subsystem).

Matrices are plain ``numpy`` arrays; their shape is the dimension metadata and
is validated on every call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidP, NotHermitian

HERMITIAN_RTOL = 1e-9


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Validate and convert to a finite 2-D complex array."""
    A = np.asarray(M, dtype=np.complex128)
    if A.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {A.shape}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be non-empty")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def as_square(M, name: str = "matrix") -> np.ndarray:
    A = as_matrix(M, name)
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {A.shape}")
    return A


def hermitian_defect(H: np.ndarray) -> float:
    return float(np.linalg.norm(H - H.conj().T))


def is_hermitian(H, rtol: float = HERMITIAN_RTOL) -> bool:
    H = np.asarray(H)
    return hermitian_defect(H) <= rtol * max(1.0, float(np.linalg.norm(H)))


def symmetrize(H, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    """Return ``(H + H^dagger)/2`` after checking ``H`` is Hermitian to ``rtol``."""
    H = as_square(H, "H")
    if not is_hermitian(H, rtol):
        raise NotHermitian(
            f"Hermiticity defect {hermitian_defect(H):.3e} exceeds tolerance"
        )
    return 0.5 * (H + H.conj().T)


@dataclass(frozen=True)
class HermitianEig:
    """Eigenvalues in descending order with matching unit eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def top_value(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def top_vector(self) -> np.ndarray:
        # one representative of a possibly degenerate top eigenspace
        return self.eigenvectors[:, 0]

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


def eig_hermitian(H) -> HermitianEig:
    Hs = symmetrize(H)
    w, V = np.linalg.eigh(Hs)
    # eigh is ascending; flip keeps the stable order of ties reversed consistently
    w = w[::-1].copy()
    V = V[:, ::-1].copy()
    w.setflags(write=False)
    V.setflags(write=False)
    return HermitianEig(w, V)


def _check_p(p) -> float:
    p = float(p)
    if np.isnan(p) or p < 1:
        raise InvalidP(f"Schatten order must satisfy p >= 1, got {p}")
    return p


def schatten_norm(A, p=np.inf) -> float:
    """Schatten p-norm ``(sum_k s_k^p)^(1/p)``; ``p = inf`` is the largest singular value."""
    A = as_square(A, "A")
    p = _check_p(p)
    s = np.linalg.svd(A, compute_uv=False)
    if np.isinf(p):
        return float(s[0])
    return float(np.sum(s**p) ** (1.0 / p))


def kron(A, B) -> np.ndarray:
    return np.kron(as_matrix(A, "A"), as_matrix(B, "B"))


def commutator(A, B) -> np.ndarray:
    A = as_square(A, "A")
    B = as_square(B, "B")
    if A.shape != B.shape:
        raise DimensionMismatch(f"commutator of {A.shape} and {B.shape}")
    return A @ B - B @ A


def partial_trace(M, dims: tuple[int, int], keep: str = "A") -> np.ndarray:
    """Reduced operator of subsystem ``keep`` ('A' or 'B') of ``M`` on C^dA (x) C^dB."""
    M = as_square(M, "M")
    dA, dB = (int(x) for x in dims)
    if dA < 1 or dB < 1 or dA * dB != M.shape[0]:
        raise DimensionMismatch(f"dims {dims} incompatible with {M.shape}")
    T = M.reshape(dA, dB, dA, dB)
    key = str(keep).upper()
    if key == "A":
        return np.einsum("ibjb->ij", T)
    if key == "B":
        return np.einsum("aiaj->ij", T)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def is_unitary(U, atol: float = 1e-8) -> bool:
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        return False
    return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0]))) <= atol
