"""Global numerical settings shared by every module."""
import os

import numpy as np

#: Relative eigenvalue cutoff; eigenvalues below ``EIG_CUTOFF * dim`` count as zero.
EIG_CUTOFF = 1e-12

#: Tolerances used by the validation checks of :mod:`privmac.qstate`.
HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
CPTP_TOL = 1e-9
ISOMETRY_TOL = 1e-9

#: Rate comparisons (region membership, feasibility, submodularity).
RATE_TOL = 1e-9

_DEFAULT_MAX_DIM = 4096


def max_dim() -> int:
    """Largest matrix dimension any operation may produce.

    Reads ``PRIVMAC_MAX_DIM`` at call time so tests and the CLI can override it.
    """
    value = os.environ.get("PRIVMAC_MAX_DIM")
    if value is None:
        return _DEFAULT_MAX_DIM
    return int(value)


def make_rng(seed: int | None) -> np.random.Generator:
    """Deterministic generator (numpy PCG64) seeded from a 64-bit integer."""
    if seed is None:
        seed = 0
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


def spawn_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream number ``index`` derived from ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))
