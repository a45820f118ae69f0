"""2^d -> 1 quantum random access codes with optimal encodings.

Encoding states are never stored: for every input pair ``(a1, a2)`` the
optimal state is the top eigenvector of ``B1_a1 + B2_a2``. Noisy decodings
reuse the noiseless eigenvectors, which stay optimal because white noise
shifts every effect sum by a multiple of the identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .cglmp import CglmpSetting, chi_max, chi_of_state
from .errors import DimensionMismatch, InvalidEta, OutcomeCountMismatch, OutOfRange
from .incompatibility import incompatibility
from .measurements import Povm, add_white_noise, pvm_from_unitary
from .sampling import haar_unitary, rng_stream

BISECTION_TOL = 1e-6
# a value must clear its bound by more than this to count as beating it, so
# rounding noise at exactly the bound (compatible settings) is not a violation
MARGIN = 1e-9


@dataclass(frozen=True, eq=False)
class QracResult:
    dim: int
    success: float
    per_pair_norms: np.ndarray


@dataclass(frozen=True, eq=False)
class ThresholdReport:
    dim: int
    eta_r: float
    eta_c: float
    incompatibility: float
    qrac: float
    chi: float
    sample_index: int = -1
    seed: int = -1
    setting: CglmpSetting | None = None
    state_provenance: str = "top eigenvector of the noiseless Bell operator"


def classical_bound(d: int) -> float:
    return 0.5 * (1.0 + 1.0 / d)


def quantum_bound(d: int) -> float:
    return 0.5 * (1.0 + 1.0 / np.sqrt(d))


def _check_pair(b1: Povm, b2: Povm) -> int:
    if b1.dim != b2.dim:
        raise DimensionMismatch(f"decodings act on C^{b1.dim} and C^{b2.dim}")
    d = b1.dim
    if b1.outcomes != d or b2.outcomes != d:
        raise OutcomeCountMismatch(f"decodings need {d} outcomes each")
    return d


def qrac_success(b1: Povm, b2: Povm) -> QracResult:
    d = _check_pair(b1, b2)
    norms = np.asarray(
        kernels.pair_sum_top(
            np.ascontiguousarray(b1.effects), np.ascontiguousarray(b2.effects)
        )
    )
    norms.setflags(write=False)
    return QracResult(d, float(norms.sum() / (2 * d * d)), norms)


def qrac_closed_form_d2(i_p: float, p=np.inf) -> float:
    """Qubit success probability as a function of decoding incompatibility."""
    p = float(p)
    scale = 1.0 if np.isinf(p) else 2.0 ** (1.0 / p)
    top = 2.0 * scale
    if not -1e-12 <= i_p <= top + 1e-12:
        raise OutOfRange(f"i_p={i_p} outside the qubit range [0, {top}]")
    return float(0.5 + 0.25 * np.sqrt(1.0 + i_p / (2.0 * scale)))


def qrac_from_chsh(chi2: float) -> float:
    """``R = 1/2 + chi_2 / 8``, linking the qubit QRAC to the CHSH value.

    Holds when Alice's CHSH pair is maximally incompatible and Bob's pair is
    the QRAC decoding.
    """
    return 0.5 + chi2 / 8.0


def noisy_qrac(b1: Povm, b2: Povm, eta: float) -> float:
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise InvalidEta(f"eta must lie in [0, 1], got {eta}")
    d = _check_pair(b1, b2)
    S = b1.effects[:, None] + b2.effects[None, :]
    _, vecs = np.linalg.eigh(S)
    top = vecs[..., :, -1]  # (d, d, dim) encoding states
    n1, n2 = add_white_noise(b1, eta), add_white_noise(b2, eta)
    Sn = n1.effects[:, None] + n2.effects[None, :]
    vals = np.real(np.einsum("xya,xyab,xyb->xy", top.conj(), Sn, top))
    return float(vals.sum() / (2 * d * d))


def _bisect_threshold(f, bound: float, tol: float = BISECTION_TOL) -> float:
    """Smallest eta in [0, 1] with f(eta) > bound, assuming a single crossing."""
    bound = bound + MARGIN
    if f(1.0) <= bound:
        return 1.0
    lo, hi = 0.0, 1.0
    if f(lo) > bound:
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > bound:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def threshold_eta_r(b1: Povm, b2: Povm) -> float:
    """Critical unsharpness above which the decodings beat the classical bound."""
    d = _check_pair(b1, b2)
    return _bisect_threshold(lambda eta: noisy_qrac(b1, b2, eta), classical_bound(d))


def threshold_eta_c(s: CglmpSetting, rho, noisy_side: str = "bob") -> float:
    """Critical unsharpness above which ``rho`` violates CGLMP with noisy settings.

    ``noisy_side`` is ``'alice'``, ``'bob'`` or ``'both'``; the state stays fixed
    for every eta.
    """
    side = noisy_side.lower()
    if side not in ("alice", "bob", "both"):
        raise ValueError("noisy_side must be 'alice', 'bob' or 'both'")
    chi_of_state(s, rho)  # validates the state once

    def f(eta):
        ea = eta if side in ("alice", "both") else 1.0
        eb = eta if side in ("bob", "both") else 1.0
        return chi_of_state(s.noisy(ea, eb), rho)

    return _bisect_threshold(f, 2.0)


def equal_robustness_scan(
    samples: int, d: int, tol: float = 1e-3, seed: int = 0, p=np.inf
) -> tuple[list[ThresholdReport], int]:
    """Haar-sample Alice's pair, copy it to Bob, keep strategies with ``|eta_r - eta_c| <= tol``.

    Returns the hits and the number of strategies scanned.
    """
    hits = []
    for i in range(samples):
        rng = rng_stream(seed, i)
        a1 = pvm_from_unitary(haar_unitary(d, rng))
        a2 = pvm_from_unitary(haar_unitary(d, rng))
        s = CglmpSetting((a1, a2), (a1, a2))
        res = chi_max(s)
        eta_c = threshold_eta_c(s, res.optimal_state, "bob")
        eta_r = threshold_eta_r(a1, a2)
        if abs(eta_r - eta_c) <= tol:
            hits.append(
                ThresholdReport(
                    dim=d,
                    eta_r=eta_r,
                    eta_c=eta_c,
                    incompatibility=incompatibility(a1, a2, p).value,
                    qrac=qrac_success(a1, a2).success,
                    chi=res.chi,
                    sample_index=i,
                    seed=seed,
                    setting=s,
                )
            )
    return hits, samples


def ordering_violations(hits: list[ThresholdReport], tie: float = 1e-6) -> int:
    """Pairs of hits where the QRAC order and the CGLMP order disagree beyond ``tie``."""
    bad = 0
    for a in hits:
        for b in hits:
            if a.qrac > b.qrac + tie and a.chi < b.chi - tie:
                bad += 1
    return bad
