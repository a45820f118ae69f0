"""Commutator-based incompatibility of two measurements and related tests."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionMismatch, InvalidP, InvalidPovm, NotRank1, OutcomeCountMismatch
from .measurements import Povm, Pvm

JOINT_MEASURABILITY_TOL = 1e-9


def _check_p(p) -> float:
    p = float(p)
    if np.isnan(p) or p < 1:
        raise InvalidP(f"Schatten order must satisfy p >= 1, got {p}")
    return p


def _same_dim(m1: Povm, m2: Povm) -> int:
    if m1.dim != m2.dim:
        raise DimensionMismatch(f"measurements act on C^{m1.dim} and C^{m2.dim}")
    return m1.dim


def _effects(m: Povm) -> np.ndarray:
    return np.ascontiguousarray(m.effects, dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class IncompatReport:
    p: float
    value: float
    pair_terms: np.ndarray

    def __float__(self) -> float:
        return self.value


def incompatibility(m1: Povm, m2: Povm, p=np.inf) -> IncompatReport:
    """Sum over effect pairs of the Schatten p-norm of ``[M1_j, M2_k]``."""
    p = _check_p(p)
    _same_dim(m1, m2)
    E1, E2 = _effects(m1), _effects(m2)
    # evaluate in a canonical argument order so that swapping m1 and m2 gives
    # bit-identical results instead of results equal up to rounding
    swap = E2.tobytes() < E1.tobytes()
    if swap:
        E1, E2 = E2, E1
    terms = np.asarray(kernels.commutator_norms(E1, E2, p))
    if swap:
        terms = np.ascontiguousarray(terms.T)
    terms.setflags(write=False)
    return IncompatReport(p, math.fsum(terms.ravel()), terms)


def max_incompatibility(d: int, p=np.inf) -> float:
    """Upper bound ``2^(1/p) d sqrt(d-1)`` over rank-1 PVM pairs, reached by MUBs."""
    p = _check_p(p)
    factor = 1.0 if np.isinf(p) else 2.0 ** (1.0 / p)
    return factor * d * np.sqrt(d - 1.0)


def _as_pvm(m: Povm) -> Pvm:
    if isinstance(m, Pvm):
        return m
    try:
        return Pvm(m.effects)
    except InvalidPovm as exc:
        raise NotRank1(str(exc)) from None


def incompatibility_rank1(m1: Povm, m2: Povm, p=np.inf) -> float:
    """Overlap shortcut ``2^(1/p) sum_ij x_ij sqrt(1 - x_ij^2)`` for rank-1 PVMs.

    Uses ``||[|q><q|, |r><r|]||_p = 2^(1/p) c sqrt(1 - c^2)`` with ``c = |<q|r>|``.
    """
    p = _check_p(p)
    _same_dim(m1, m2)
    a, b = _as_pvm(m1), _as_pvm(m2)
    return float(
        kernels.rank1_incompat(
            np.ascontiguousarray(a.basis), np.ascontiguousarray(b.basis), p
        )
    )


def jointly_measurable_projective(m1: Povm, m2: Povm) -> bool:
    """True iff every pair of effects commutes (Frobenius norm <= 1e-9 per pair)."""
    _same_dim(m1, m2)
    E1, E2 = _effects(m1), _effects(m2)
    comm = np.einsum("iab,jbc->ijac", E1, E2) - np.einsum("jab,ibc->ijac", E2, E1)
    norms = np.linalg.norm(comm, axis=(-2, -1))
    return bool(np.all(norms <= JOINT_MEASURABILITY_TOL))


def robustness_upper_bound(m1: Povm, m2: Povm) -> float:
    """Analytic upper bound on the white-noise incompatibility robustness.

    The maximum in the numerator runs over the operator norm of the effect
    sums ``||M_j + N_i||_inf``; this reading gives 1/sqrt(2) for a qubit MUB
    pair and 3/4 for the optimal qutrit interferometric pair. Values above 1
    (compatible inputs) and a vanishing denominator (trivial measurements)
    both return 1.
    """
    d = _same_dim(m1, m2)
    if m1.outcomes != m2.outcomes:
        raise OutcomeCountMismatch(f"{m1.outcomes} vs {m2.outcomes} outcomes")
    l = m1.outcomes
    E1, E2 = _effects(m1), _effects(m2)
    top = float(np.max(kernels.pair_sum_top(E1, E2)))
    tr1 = np.real(np.einsum("jaa->j", E1))
    tr2 = np.real(np.einsum("jaa->j", E2))
    sq1 = np.real(np.einsum("jab,jba->j", E1, E1))
    sq2 = np.real(np.einsum("jab,jba->j", E2, E2))
    lin = float(np.sum(tr1**2) + np.sum(tr2**2))
    num = l * l * top - lin
    den = l * float(np.sum(sq1)) + d * float(np.sum(sq2)) - lin
    if den <= 1e-12:
        return 1.0
    return float(min(1.0, max(0.0, num / den)))
