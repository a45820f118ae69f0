"""Measurement incompatibility, CGLMP Bell violations and random access codes.

Set ``BELLINCOMPAT_DISABLE_JIT=1`` before import to run the pure numpy
kernels instead of the numba ones.
"""

from __future__ import annotations

from ._jit import backend
from .cglmp import (
    OPTIMAL_CHI3,
    OPTIMAL_GAMMA,
    CglmpResult,
    CglmpSetting,
    NecessityReport,
    chi_max,
    chi_of_state,
    chsh_closed_form,
    cglmp_operator,
    joint_probabilities,
    mvs_state,
    noisy_chi,
    optimal_setting,
    verify_necessity,
)
from .errors import *  # noqa: F401,F403
from .incompatibility import (
    IncompatReport,
    incompatibility,
    incompatibility_rank1,
    jointly_measurable_projective,
    max_incompatibility,
    robustness_upper_bound,
)
from .linalg import (
    HermitianEig,
    commutator,
    eig_hermitian,
    is_hermitian,
    is_unitary,
    kron,
    partial_trace,
    schatten_norm,
    symmetrize,
)
from .measurements import (
    PhaseVector,
    Povm,
    Pvm,
    add_white_noise,
    computational_pvm,
    fourier_matrix,
    interferometric_pvm,
    interferometric_unitary,
    mub_pair,
    povm_from_json,
    pvm_from_unitary,
)
from .optimize import (
    ConstrainedProblem,
    OptimumReport,
    U3Params,
    constrained_chi_extremum,
    interferometric_point,
    interferometric_scan,
    schmidt_and_entropy,
    u3_from_params,
)
from .qrac import (
    QracResult,
    ThresholdReport,
    classical_bound,
    equal_robustness_scan,
    noisy_qrac,
    ordering_violations,
    qrac_closed_form_d2,
    qrac_from_chsh,
    qrac_success,
    quantum_bound,
    threshold_eta_c,
    threshold_eta_r,
)
from .sampling import haar_unitary, rng_stream
from .sweep import (
    SCHEMA_VERSION,
    RunConfig,
    read_csv,
    run_qrac_sweep,
    run_report,
    run_sweep,
    run_thresholds,
)

__version__ = "0.1.0"
