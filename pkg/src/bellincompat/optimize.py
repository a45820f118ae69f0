"""Constrained search for extremal CGLMP values at fixed incompatibility.

Two measurement manifolds are supported for qutrits:

* ``'unitary'``: every basis is a general U(3) element in the nine-angle
  parametrization of :class:`U3Params`;
* ``'interferometric'``: every basis is ``F diag(e^{i phi})`` (``F*`` on Bob's
  side), twelve phases in total.

On the unitary manifold the first setting of each party is gauge-fixed to the
computational basis. The CGLMP value and the incompatibility of a pair are both
invariant under a common local unitary, so nothing is lost and the search runs
over 18 angles instead of 36.

The search is CMA-ES (``cma`` package) with a quadratic penalty
``mu (I - I_target)^2`` whose weight grows from restart to restart. Each
restart is followed by a local polish (SLSQP with the incompatibility as an
equality constraint, BFGS when there is no constraint). Every objective call
counts against the budget, and the best feasible point seen in *any* call is
kept. A quarter of the budget is reserved for a final tight solve on the exact
constraint surface started from that point; its result is reported when it
converges, and the best feasible point otherwise.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import cma
import numpy as np
from scipy.optimize import minimize

from . import kernels
from .cglmp import CglmpSetting, chi_max, optimal_setting
from .errors import (
    AngleOutOfRange,
    InfeasibleTarget,
    InvalidDimension,
    InvalidState,
    NotNormalized,
)
from .incompatibility import incompatibility, max_incompatibility
from .measurements import interferometric_unitary, pvm_from_unitary
from .sampling import haar_unitary

__all__ = [
    "U3Params",
    "u3_from_params",
    "haar_unitary",
    "ConstrainedProblem",
    "OptimumReport",
    "constrained_chi_extremum",
    "schmidt_and_entropy",
    "interferometric_point",
    "interferometric_scan",
]

NORM_TOL = 1e-9

# ---------------------------------------------------------------- U(3) chart

_U3_NAMES = ("phi", "theta", "varphi", "chi", "mu", "alpha1", "alpha2", "alpha3", "beta2")
_U3_LO = np.array([-np.pi, -np.pi / 2, 0.0, -np.pi / 4, 0.0, 0.0, 0.0, 0.0, 0.0])
_U3_HI = np.array([np.pi, np.pi / 2, np.pi, np.pi / 4, np.pi / 2, np.pi, np.pi, np.pi, np.pi])


@dataclass(frozen=True)
class U3Params:
    """Nine angles of a U(3) element.

    Ranges: ``phi`` in (-pi, pi], ``theta`` in [-pi/2, pi/2], ``varphi`` in
    [0, pi], ``chi`` in [-pi/4, pi/4], ``mu`` in [0, pi/2] and the four
    phases ``alpha1, alpha2, alpha3, beta2`` in [0, pi].
    """

    phi: float = 0.0
    theta: float = 0.0
    varphi: float = 0.0
    chi: float = 0.0
    mu: float = 0.0
    alpha1: float = 0.0
    alpha2: float = 0.0
    alpha3: float = 0.0
    beta2: float = 0.0

    def __post_init__(self):
        v = self.as_array()
        if not np.all(np.isfinite(v)):
            raise AngleOutOfRange("angles must be finite")
        bad = (v < _U3_LO) | (v > _U3_HI)
        bad[0] = not (-np.pi < v[0] <= np.pi)
        if bad.any():
            i = int(np.argmax(bad))
            raise AngleOutOfRange(
                f"{_U3_NAMES[i]}={v[i]} outside [{_U3_LO[i]:.6g}, {_U3_HI[i]:.6g}]"
            )

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in _U3_NAMES], dtype=float)

    @classmethod
    def from_array(cls, v) -> "U3Params":
        v = np.asarray(v, dtype=float).reshape(9)
        return cls(*(float(x) for x in v))


def _rz(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _ry(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def _u3_matrix(v) -> np.ndarray:
    """``Q M Q^T`` for a raw angle vector, with no range checks."""
    phi, theta, varphi, chi, mu, a1, a2, a3, b2 = v
    Q = _rz(phi) @ _ry(theta) @ _rz(varphi)
    e1, e2, e3, f2 = np.exp(1j * np.array([a1, a2, a3, b2]))
    cc, sc, cm, sm = np.cos(chi), np.sin(chi), np.cos(mu), np.sin(mu)
    M = np.array(
        [
            [e1 * cc, 1j * e2 * cm * sc, 1j * e3 * sm * sc],
            [1j * e1 * sc, e2 * cm * cc, e3 * sm * cc],
            [0.0, f2 * sm, -f2 * e3 / e2 * cm],
        ]
    )
    return Q @ M @ Q.T


def u3_from_params(p: U3Params) -> np.ndarray:
    """The 3x3 unitary ``Q M Q^T`` with ``Q = R_z(phi) R_y(theta) R_z(varphi)``."""
    if not isinstance(p, U3Params):
        p = U3Params.from_array(p)
    return _u3_matrix(p.as_array())


def _squash(z: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Smooth periodic map from R^n onto the box ``[lo, hi]``."""
    return lo + (hi - lo) * np.sin(0.5 * np.pi * z) ** 2


def _canonical_u3(v: np.ndarray) -> U3Params:
    v = np.array(v, dtype=float)
    if v[0] <= -np.pi:  # R_z(-pi) = R_z(pi)
        v[0] = np.pi
    return U3Params.from_array(np.clip(v, _U3_LO, _U3_HI))


# ---------------------------------------------------------------- problems


@dataclass(frozen=True)
class ConstrainedProblem:
    """Extremise ``chi_d`` over settings whose incompatibility is pinned.

    ``side`` selects which party's pair carries the constraint (``'alice'``,
    ``'bob'`` or ``'both'``). ``i_target=None`` drops the constraint, which
    gives the maximum (or minimum) over all incompatibilities.
    """

    dim: int = 3
    sense: str = "max"
    i_target: float | None = None
    side: str = "bob"
    tol: float = 1e-3
    manifold: str = "unitary"
    budget: int = 20_000
    seed: int = 0
    p: float = np.inf
    max_restarts: int = 6

    def __post_init__(self):
        if self.dim != 3:
            raise InvalidDimension("constrained search is implemented for d = 3")
        if self.sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        if self.side not in ("alice", "bob", "both"):
            raise ValueError("side must be 'alice', 'bob' or 'both'")
        if self.manifold not in ("unitary", "interferometric"):
            raise ValueError("manifold must be 'unitary' or 'interferometric'")
        if int(self.budget) < 1:
            raise ValueError("budget must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.i_target is not None:
            top = max_incompatibility(self.dim, self.p)
            if not 0.0 <= self.i_target <= top:
                raise InfeasibleTarget(
                    f"I_target={self.i_target} outside [0, {top:.6g}]"
                )

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "sense": self.sense,
            "i_target": self.i_target,
            "side": self.side,
            "tol": self.tol,
            "manifold": self.manifold,
            "budget": int(self.budget),
            "seed": int(self.seed),
            "p": "inf" if np.isinf(self.p) else float(self.p),
            "max_restarts": self.max_restarts,
        }


@dataclass(frozen=True, eq=False)
class OptimumReport:
    problem: ConstrainedProblem
    value: float
    setting: CglmpSetting
    params: np.ndarray
    i_alice: float
    i_bob: float
    achieved_incompatibility: float
    residual: float
    state: np.ndarray
    schmidt: np.ndarray
    entropy: float
    evaluations: int
    budget_exhausted: bool
    restarts: int = 0
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "problem": self.problem.to_json(),
            "value": self.value,
            "i_alice": self.i_alice,
            "i_bob": self.i_bob,
            "achieved_incompatibility": self.achieved_incompatibility,
            "residual": self.residual,
            "schmidt": [float(x) for x in self.schmidt],
            "entropy": self.entropy,
            "evaluations": self.evaluations,
            "budget_exhausted": self.budget_exhausted,
            "restarts": self.restarts,
            "params": [float(x) for x in self.params],
            "state": [[float(z.real), float(z.imag)] for z in self.state],
            "setting": self.setting.to_json(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------- manifolds


class _UnitaryChart:
    """A2 and B2 as U(3) elements; A1 = B1 = identity."""

    n = 18

    def __init__(self):
        self.lo = np.concatenate([_U3_LO, _U3_LO])
        self.hi = np.concatenate([_U3_HI, _U3_HI])
        self.eye = np.eye(3, dtype=np.complex128)

    def angles(self, z):
        return _squash(np.asarray(z, dtype=float), self.lo, self.hi)

    def bases(self, z):
        x = self.angles(z)
        UA2 = np.ascontiguousarray(_u3_matrix(x[:9]))
        UB2 = np.ascontiguousarray(_u3_matrix(x[9:]))
        return self.eye, UA2, self.eye, UB2

    def params(self, z):
        x = self.angles(z)
        return np.concatenate([_canonical_u3(x[:9]).as_array(), _canonical_u3(x[9:]).as_array()])


class _InterferometricChart:
    """Four phase vectors (A1, A2, B1, B2); Bob uses the conjugate Fourier matrix."""

    n = 12

    def angles(self, z):
        return np.mod(np.pi * np.asarray(z, dtype=float), 2 * np.pi)

    def bases(self, z):
        x = self.angles(z).reshape(4, 3)
        out = []
        for i, ph in enumerate(x):
            V = interferometric_unitary(ph, conjugate_fourier=i >= 2)
            out.append(np.ascontiguousarray(V.conj().T))
        return tuple(out)

    def params(self, z):
        return self.angles(z)


class _OutOfBudget(Exception):
    pass


class _Evaluator:
    """Counts calls, applies the penalty and remembers the best feasible point."""

    def __init__(self, problem: ConstrainedProblem, chart):
        self.pr = problem
        self.chart = chart
        self.W = np.ascontiguousarray(kernels.cglmp_weights(problem.dim))
        self.sign = -1.0 if problem.sense == "max" else 1.0
        self.count = 0
        self.limit = int(problem.budget)
        self.best = None  # (signed objective, z)
        self.mu = 0.0

    def measure(self, z):
        UA1, UA2, UB1, UB2 = self.chart.bases(z)
        chi = float(kernels.chi_from_unitaries(self.W, UA1, UA2, UB1, UB2))
        p = float(self.pr.p)
        ia = float(kernels.rank1_incompat(UA1, UA2, p))
        ib = float(kernels.rank1_incompat(UB1, UB2, p))
        return chi, ia, ib

    def gaps(self, ia, ib):
        t = self.pr.i_target
        if t is None:
            return ()
        side = self.pr.side
        out = []
        if side in ("alice", "both"):
            out.append(ia - t)
        if side in ("bob", "both"):
            out.append(ib - t)
        return tuple(out)

    def _record(self, z, chi, ia, ib):
        g = self.gaps(ia, ib)
        if all(abs(x) <= self.pr.tol for x in g):
            obj = self.sign * chi
            if self.best is None or obj < self.best[0]:
                self.best = (obj, np.array(z, dtype=float))

    def _step(self, z):
        if self.count >= self.limit:
            raise _OutOfBudget
        self.count += 1
        chi, ia, ib = self.measure(z)
        self._record(z, chi, ia, ib)
        return chi, ia, ib

    def penalised(self, z) -> float:
        chi, ia, ib = self._step(z)
        return self.sign * chi + self.mu * sum(x * x for x in self.gaps(ia, ib))

    def plain(self, z) -> float:
        return self.sign * self._step(z)[0]

    def violation(self, z) -> float:
        _, ia, ib = self._step(z)
        return float(sum(x * x for x in self.gaps(ia, ib)))

    def constraint(self, z) -> np.ndarray:
        _, ia, ib = self._step(z)
        return np.array(self.gaps(ia, ib))


_MU_SCHEDULE = (10.0, 100.0, 1e3, 1e4)


def _repair(ev: _Evaluator, z0: np.ndarray) -> np.ndarray:
    """Move ``z0`` onto the tolerance band by minimising the squared constraint gap.

    Needed near the ends of the incompatibility range, where the constraint
    gradient vanishes and an equality-constrained solver stalls.
    """
    if ev.violation(z0) <= (0.5 * ev.pr.tol) ** 2:
        return z0
    res = minimize(ev.violation, z0, method="BFGS", options={"maxiter": 100, "gtol": 1e-12})
    return np.asarray(res.x, dtype=float)


def _polish(ev: _Evaluator, z0: np.ndarray, cap: int) -> None:
    """Local refinement from ``z0``; results are captured by the evaluator."""
    ev.limit = min(int(ev.pr.budget), ev.count + cap)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if ev.pr.i_target is None:
                minimize(ev.plain, z0, method="BFGS", options={"maxiter": 200})
            else:
                z0 = _repair(ev, z0)
                minimize(
                    ev.plain,
                    z0,
                    method="SLSQP",
                    constraints=[{"type": "eq", "fun": ev.constraint}],
                    options={"maxiter": 200, "ftol": 1e-12},
                )
    except _OutOfBudget:
        pass
    finally:
        ev.limit = int(ev.pr.budget)


def constrained_chi_extremum(problem: ConstrainedProblem) -> OptimumReport:
    """Seeded, budgeted global search for ``chi_max`` extremes at fixed incompatibility.

    The outcome is reproducible for a given ``(seed, budget)``; it is a best
    effort, not a certified optimum. Raises :class:`InfeasibleTarget` when no
    evaluated point met the constraint.
    """
    pr = problem
    chart = _UnitaryChart() if pr.manifold == "unitary" else _InterferometricChart()
    ev = _Evaluator(pr, chart)
    ss = np.random.SeedSequence(int(pr.seed))
    budget = int(pr.budget)
    final_cap = budget // 4
    search_budget = budget - final_cap
    per_restart = max(1, search_budget // max(1, pr.max_restarts))
    polish_cap = max(1, per_restart // 4)
    restarts = 0

    for r, child in enumerate(ss.spawn(pr.max_restarts)):
        if ev.count >= search_budget:
            break
        restarts += 1
        rng = np.random.default_rng(child)
        z0 = rng.uniform(-1.0, 1.0, chart.n)
        ev.mu = _MU_SCHEDULE[min(r, len(_MU_SCHEDULE) - 1)]
        cma_cap = max(1, per_restart - polish_cap)
        opts = {
            "seed": int(rng.integers(1, 2**31 - 1)),
            "verbose": -9,
            "maxfevals": cma_cap,
            "tolfun": 1e-12,
            "tolx": 1e-10,
        }
        ev.limit = min(budget, ev.count + cma_cap)
        z_start = z0
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                es = cma.CMAEvolutionStrategy(z0, 0.3, opts)
                while not es.stop():
                    sols = es.ask()
                    es.tell(sols, [ev.penalised(s) for s in sols])
        except _OutOfBudget:
            pass
        finally:
            ev.limit = budget
        if es.result.xbest is not None:
            z_start = np.asarray(es.result.xbest, dtype=float)
        if ev.count < search_budget:
            _polish(ev, z_start, min(polish_cap, search_budget - ev.count))

    z_final = _final_polish(ev, final_cap) if ev.best is not None else None
    if ev.best is None:
        raise InfeasibleTarget(
            f"no point within {pr.tol} of I_target={pr.i_target} "
            f"after {ev.count} evaluations"
        )
    z = ev.best[1] if z_final is None else z_final
    return _report(pr, chart, ev, restarts, z)


def _final_polish(ev: _Evaluator, cap: int):
    """Tight local solve on the exact constraint surface from the best feasible point.

    Returns the polished point when it lands on the surface to ``tol * 1e-3``,
    otherwise ``None``. Points inside the tolerance band can beat the exact
    surface slightly, so a converged polish is preferred over the raw best
    feasible point: it is the better estimate of the extremum *at* the target.
    """
    if cap < 1:
        return None
    pr = ev.pr
    z0 = ev.best[1]
    ev.limit = min(int(pr.budget), ev.count + cap)
    res = None
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if pr.i_target is None:
                res = minimize(ev.plain, z0, method="BFGS", options={"maxiter": 500, "gtol": 1e-9})
            else:
                res = minimize(
                    ev.plain,
                    z0,
                    method="SLSQP",
                    constraints=[{"type": "eq", "fun": ev.constraint}],
                    options={"maxiter": 500, "ftol": 1e-13},
                )
    except _OutOfBudget:
        pass
    finally:
        ev.limit = int(pr.budget)
    z = np.asarray(res.x, dtype=float) if res is not None else None
    if z is None:
        return None
    chi, ia, ib = ev.measure(z)
    if any(abs(g) > pr.tol * 1e-3 for g in ev.gaps(ia, ib)):
        return None
    return z


def _report(pr, chart, ev, restarts, z) -> OptimumReport:
    UA1, UA2, UB1, UB2 = chart.bases(z)
    setting = CglmpSetting(
        (pvm_from_unitary(UA1), pvm_from_unitary(UA2)),
        (pvm_from_unitary(UB1), pvm_from_unitary(UB2)),
    )
    res = chi_max(setting)
    ia = incompatibility(*setting.alice, pr.p).value
    ib = incompatibility(*setting.bob, pr.p).value
    gaps = ev.gaps(ia, ib)
    residual = float(max((abs(g) for g in gaps), default=0.0))
    achieved = ia if pr.side == "alice" else ib
    coeffs, ent = schmidt_and_entropy(res.optimal_state, (pr.dim, pr.dim))
    return OptimumReport(
        problem=pr,
        value=res.chi,
        setting=setting,
        params=chart.params(z),
        i_alice=ia,
        i_bob=ib,
        achieved_incompatibility=achieved,
        residual=residual,
        state=res.optimal_state,
        schmidt=coeffs,
        entropy=ent,
        evaluations=ev.count,
        budget_exhausted=ev.count >= int(pr.budget),
        restarts=restarts,
    )


# ---------------------------------------------------------------- states


def schmidt_and_entropy(state, dims) -> tuple[np.ndarray, float]:
    """Schmidt coefficients (descending) and entanglement entropy in bits."""
    psi = np.asarray(state, dtype=np.complex128).reshape(-1)
    dA, dB = (int(x) for x in dims)
    if psi.size != dA * dB:
        raise InvalidState(f"state has length {psi.size}, expected {dA * dB}")
    if abs(np.linalg.norm(psi) - 1.0) > NORM_TOL:
        raise NotNormalized(f"state norm is {np.linalg.norm(psi):.12g}")
    s = np.linalg.svd(psi.reshape(dA, dB), compute_uv=False)
    order = np.argsort(-s, kind="stable")
    s = s[order]
    probs = s**2
    nz = probs[probs > 0]
    ent = float(-np.sum(nz * np.log2(nz))) + 0.0
    s.setflags(write=False)
    return s, ent


# ---------------------------------------------------------------- scans


def _scan_setting(xi: float, d: int) -> CglmpSetting:
    base = optimal_setting(d)
    phases = np.arange(d) * np.pi / d
    phases[1] = xi
    V = interferometric_unitary(phases)
    return CglmpSetting((base.alice[0], pvm_from_unitary(V.conj().T)), base.bob)


def interferometric_point(xi: float, d: int = 3, p=np.inf) -> tuple[float, float, float]:
    """``(xi, I(A1, A2), chi)`` with Alice's second phase vector ``phi_2(1) = xi``.

    All other phases keep their optimal interferometric values.
    """
    if d not in (2, 3):
        raise InvalidDimension("the interferometric scan is defined for d = 2 and 3")
    s = _scan_setting(float(xi), d)
    return float(xi), incompatibility(*s.alice, p).value, chi_max(s).chi


def interferometric_scan(grid: int = 629, d: int = 3, p=np.inf) -> list[tuple[float, float, float]]:
    """``grid`` equally spaced values of ``xi`` over [0, 2 pi], endpoints included."""
    grid = int(grid)
    if grid < 2:
        raise ValueError("grid must contain at least two points")
    return [interferometric_point(x, d, p) for x in np.linspace(0.0, 2 * np.pi, grid)]
