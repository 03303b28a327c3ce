"""Hot kernels: compiled Cython versions with a pure numpy fallback.

The compiled module is used when it was built and ``PRIVMAC_PURE_PYTHON`` is
not set to a truthy value at import time. ``BACKEND`` names the active one.
Both backends are importable explicitly as :mod:`._fallback` and
:data:`compiled` (``None`` when the extension is missing).
"""
import os

import numpy as np

from . import _fallback

try:
    from . import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

_force_pure = os.environ.get("PRIVMAC_PURE_PYTHON", "").lower() not in ("", "0", "false", "no")

if compiled is not None and not _force_pure:
    BACKEND = "cython"
    hash_tables = compiled.hash_tables
    accumulate_blocks = compiled.accumulate_blocks
else:
    BACKEND = "python"
    hash_tables = _fallback.hash_tables
    accumulate_blocks = _fallback.accumulate_blocks


def scan_tables(pmf):
    """Per-subset symbol tables for :func:`compiled.truncation_scan_tables`.

    Rows are indexed by user-subset bitmask; row 0 is the ``Y`` marginal and
    the last row the full joint pmf.
    """
    pmf = np.asarray(pmf, dtype=np.float64)
    nusers = pmf.ndim - 1
    shape = pmf.shape
    K = pmf.size
    symbols = np.array(np.unravel_index(np.arange(K), shape))  # (L+1, K)
    nsub = 1 << nusers
    lp = np.empty((nsub, K))
    proj = np.empty((nsub, K), dtype=np.int64)
    msize = np.empty(nsub, dtype=np.int64)
    for s in range(nsub):
        kept_axes = [l for l in range(nusers) if (s >> l) & 1] + [nusers]
        drop = tuple(l for l in range(nusers) if not (s >> l) & 1)
        marg = pmf.sum(axis=drop) if drop else pmf
        sub_shape = tuple(shape[a] for a in kept_axes)
        idx = np.ravel_multi_index(tuple(symbols[a] for a in kept_axes), sub_shape)
        with np.errstate(divide="ignore"):
            lp[s] = np.log2(marg.reshape(-1))[idx]
        proj[s] = idx
        msize[s] = int(np.prod(sub_shape))
    return lp, proj, msize


def truncation_scan(pmf, n, lower, upper, tol, backend=None):
    """Dispatch the truncation scan; see :func:`_fallback.truncation_scan`."""
    backend = backend or BACKEND
    if backend == "cython":
        if compiled is None:
            raise RuntimeError("compiled kernels are not available")
        lp, proj, msize = scan_tables(pmf)
        excluded, kept, maxq, supp = compiled.truncation_scan_tables(
            lp, proj, msize, np.asarray(lower, dtype=np.float64), float(upper), int(n), float(tol))
        return float(excluded), float(kept), np.asarray(maxq), int(supp)
    return _fallback.truncation_scan(pmf, n, lower, upper, tol)
