from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from bellincompat import CglmpSetting, haar_unitary, pvm_from_unitary, rng_stream

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=2, max_value=5)


def random_pvm(d, rng):
    return pvm_from_unitary(haar_unitary(d, rng))


def random_setting(d, rng) -> CglmpSetting:
    ms = [random_pvm(d, rng) for _ in range(4)]
    return CglmpSetting((ms[0], ms[1]), (ms[2], ms[3]))


def random_density(n, rng, rank=None):
    rank = n if rank is None else rank
    G = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def rng():
    return rng_stream(2024, 0)


ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.rstrip("abc")), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:<3} {'PASS' if ok else 'FAIL'}  {detail}")
