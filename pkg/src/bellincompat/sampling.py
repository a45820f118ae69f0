"""Haar-random unitaries and reproducible per-sample random streams."""

from __future__ import annotations

import numpy as np

from .errors import InvalidDimension


def rng_stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for sample ``index`` of a run seeded with ``seed``.

    Streams are ``SeedSequence(seed, spawn_key=(index,))``, i.e. exactly the
    children ``SeedSequence(seed).spawn`` would hand out, but addressable
    without materialising the earlier ones. No generator is ever shared.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.default_rng(ss)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed element of U(d).

    QR of a complex Ginibre matrix, with each column of Q multiplied by the
    phase of the matching diagonal entry of R. Without that correction the
    distribution depends on the QR sign convention and is not Haar.
    """
    d = int(d)
    if d < 2:
        raise InvalidDimension(f"haar_unitary needs d >= 2, got {d}")
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))
