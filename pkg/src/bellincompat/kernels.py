"""Hot numeric kernels.

Each kernel exists twice: a vectorised numpy version (``*_np``) and a numba
loop version (``*_nb``). The public name is bound to the numba version when
numba is available and not disabled through ``BELLINCOMPAT_DISABLE_JIT``.
Both paths are exercised by the test-suite and compared in
``benchmarks/bench_kernels.py``.

Array layout conventions used throughout:

* a measurement is an array ``(n_outcomes, d, d)`` of effects;
* a party's pair of measurements is ``(2, d, d, d)``;
* the CGLMP weight tensor ``W[x, y, j, k]`` is the coefficient of
  ``A^x_j (x) B^y_k`` in the Bell operator (see :func:`cglmp_weights`).
"""

from functools import lru_cache

import numpy as np

from ._jit import HAVE_NUMBA, njit


@lru_cache(maxsize=None)
def _cglmp_weights_cached(d: int) -> np.ndarray:
    W = np.zeros((2, 2, d, d))
    for k in range(d // 2):
        w = 1.0 - 2.0 * k / (d - 1)
        for j in range(d):
            # positive terms
            W[0, 0, (j + k) % d, j] += w
            W[1, 0, j, (j + k + 1) % d] += w
            W[1, 1, (j + k) % d, j] += w
            W[0, 1, j, (j + k) % d] += w
            # negative terms
            W[0, 0, (j - k - 1) % d, j] -= w
            W[1, 0, j, (j - k) % d] -= w
            W[1, 1, (j - k - 1) % d, j] -= w
            W[0, 1, j, (j - k - 1) % d] -= w
    W.setflags(write=False)
    return W


def cglmp_weights(d: int) -> np.ndarray:
    """Coefficient tensor of the d-outcome CGLMP operator.

    Entry ``[x, y, j, k]`` multiplies ``A^{x+1}_j (x) B^{y+1}_k``. Index
    shifts use Python's Euclidean ``%`` so negative shifts wrap into 0..d-1.
    """
    return _cglmp_weights_cached(int(d))


# ---------------------------------------------------------------- numpy path


def rank1_projectors_np(U):
    """Column projectors ``u_j u_j^dagger`` of ``U``; shape ``(d, d, d)``."""
    U = np.asarray(U)
    return np.einsum("aj,bj->jab", U, U.conj())


def assemble_operator_np(W, A, B):
    d = A.shape[-1]
    C = np.einsum("xyjk,xjac,ykbe->abce", W, A, B, optimize=True)
    return C.reshape(d * d, d * d)


def batch_top_eigvals_np(W, A, B):
    """Top eigenvalue of the Bell operator for a stack of settings.

    ``A`` and ``B`` have shape ``(n, 2, d, d, d)``.
    """
    n, d = A.shape[0], A.shape[-1]
    C = np.einsum("xyjk,nxjac,nykbe->nabce", W, A, B, optimize=True)
    C = C.reshape(n, d * d, d * d)
    return np.linalg.eigvalsh(C)[:, -1]


def commutator_norms_np(P, Q, p):
    """Schatten-p norms of ``[P_i, Q_j]`` for Hermitian effects; shape ``(m, n)``."""
    PQ = np.einsum("iab,jbc->ijac", P, Q)
    K = 1j * (PQ - np.conj(np.swapaxes(PQ, -1, -2)))
    ev = np.abs(np.linalg.eigvalsh(K))
    if np.isinf(p):
        return ev.max(axis=-1)
    return (ev**p).sum(axis=-1) ** (1.0 / p)


def pair_sum_top_np(P, Q):
    """Largest eigenvalue of ``P_i + Q_j`` for every pair; shape ``(m, n)``."""
    S = P[:, None, :, :] + Q[None, :, :, :]
    return np.linalg.eigvalsh(S)[..., -1]


def rank1_incompat_np(U1, U2, p):
    """Incompatibility of two rank-1 PVMs given by their basis columns."""
    c = np.abs(np.conj(U1).T @ U2)
    c = np.clip(c, 0.0, 1.0)
    factor = 1.0 if np.isinf(p) else 2.0 ** (1.0 / p)
    return factor * float(np.sum(c * np.sqrt(1.0 - c * c)))


def chi_from_unitaries_np(W, UA1, UA2, UB1, UB2):
    A = np.stack([rank1_projectors_np(UA1), rank1_projectors_np(UA2)])
    B = np.stack([rank1_projectors_np(UB1), rank1_projectors_np(UB2)])
    return float(np.linalg.eigvalsh(assemble_operator_np(W, A, B))[-1])


# ---------------------------------------------------------------- numba path


@njit
def rank1_projectors_nb(U):
    d = U.shape[0]
    out = np.empty((d, d, d), dtype=np.complex128)
    for j in range(d):
        for a in range(d):
            for b in range(d):
                out[j, a, b] = U[a, j] * np.conj(U[b, j])
    return out


@njit
def assemble_operator_nb(W, A, B):
    d = A.shape[-1]
    # contract Alice's side first: M[y, k, a, c] = sum_xj W[x,y,j,k] A[x,j,a,c]
    M = np.zeros((2, d, d, d), dtype=np.complex128)
    for x in range(2):
        for y in range(2):
            for j in range(d):
                for k in range(d):
                    w = W[x, y, j, k]
                    if w == 0.0:
                        continue
                    for a in range(d):
                        for c in range(d):
                            M[y, k, a, c] += w * A[x, j, a, c]
    C = np.zeros((d * d, d * d), dtype=np.complex128)
    for y in range(2):
        for k in range(d):
            for a in range(d):
                for c in range(d):
                    m = M[y, k, a, c]
                    for b in range(d):
                        for e in range(d):
                            C[a * d + b, c * d + e] += m * B[y, k, b, e]
    return C


@njit
def batch_top_eigvals_nb(W, A, B):
    n = A.shape[0]
    out = np.empty(n)
    for i in range(n):
        C = assemble_operator_nb(W, A[i], B[i])
        out[i] = np.linalg.eigvalsh(C)[-1]
    return out


@njit
def commutator_norms_nb(P, Q, p):
    m, n, d = P.shape[0], Q.shape[0], P.shape[1]
    out = np.empty((m, n))
    for i in range(m):
        for j in range(n):
            PQ = P[i] @ Q[j]
            K = np.empty((d, d), dtype=np.complex128)
            for a in range(d):
                for b in range(d):
                    K[a, b] = 1j * (PQ[a, b] - np.conj(PQ[b, a]))
            ev = np.abs(np.linalg.eigvalsh(K))
            if np.isinf(p):
                out[i, j] = ev.max()
            else:
                out[i, j] = np.sum(ev**p) ** (1.0 / p)
    return out


@njit
def pair_sum_top_nb(P, Q):
    m, n = P.shape[0], Q.shape[0]
    out = np.empty((m, n))
    for i in range(m):
        for j in range(n):
            out[i, j] = np.linalg.eigvalsh(P[i] + Q[j])[-1]
    return out


@njit
def rank1_incompat_nb(U1, U2, p):
    d = U1.shape[0]
    factor = 1.0 if np.isinf(p) else 2.0 ** (1.0 / p)
    total = 0.0
    for i in range(d):
        for j in range(d):
            s = 0j
            for a in range(d):
                s += np.conj(U1[a, i]) * U2[a, j]
            c = min(abs(s), 1.0)
            total += c * np.sqrt(1.0 - c * c)
    return factor * total


@njit
def chi_from_unitaries_nb(W, UA1, UA2, UB1, UB2):
    d = UA1.shape[0]
    A = np.empty((2, d, d, d), dtype=np.complex128)
    B = np.empty((2, d, d, d), dtype=np.complex128)
    A[0] = rank1_projectors_nb(UA1)
    A[1] = rank1_projectors_nb(UA2)
    B[0] = rank1_projectors_nb(UB1)
    B[1] = rank1_projectors_nb(UB2)
    return np.linalg.eigvalsh(assemble_operator_nb(W, A, B))[-1]


if HAVE_NUMBA:
    rank1_projectors = rank1_projectors_nb
    assemble_operator = assemble_operator_nb
    batch_top_eigvals = batch_top_eigvals_nb
    commutator_norms = commutator_norms_nb
    pair_sum_top = pair_sum_top_nb
    rank1_incompat = rank1_incompat_nb
    chi_from_unitaries = chi_from_unitaries_nb
else:
    rank1_projectors = rank1_projectors_np
    assemble_operator = assemble_operator_np
    batch_top_eigvals = batch_top_eigvals_np
    commutator_norms = commutator_norms_np
    pair_sum_top = pair_sum_top_np
    rank1_incompat = rank1_incompat_np
    chi_from_unitaries = chi_from_unitaries_np
