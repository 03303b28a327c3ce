"""Pure numpy implementations of the hot kernels.

These are the reference versions; the compiled module in ``_kernels.pyx`` must
agree with them (bit-for-bit on integer outputs, to rounding on float outputs).
"""
import numpy as np


def hash_tables(rows, offsets, input_bits):
    """Evaluate affine GF(2) maps on every input word.

    Parameters
    ----------
    rows : (F, r) uint64 array
        Row ``j`` of member ``f`` is a bit mask over the ``input_bits`` input bits;
        output bit ``j`` is the parity of ``rows[f, j] & x``.
    offsets : (F,) uint64 array
        XORed into the output word.
    input_bits : int

    Returns
    -------
    (F, 2**input_bits) int64 array of output words (bit ``j`` of the output is
    at position ``r - 1 - j``).
    """
    rows = np.asarray(rows, dtype=np.uint64)
    offsets = np.asarray(offsets, dtype=np.uint64)
    nmem, r = rows.shape
    xs = np.arange(1 << input_bits, dtype=np.uint64)
    out = np.zeros((nmem, xs.size), dtype=np.int64)
    for j in range(r):
        parity = np.bitwise_count(rows[:, j, None] & xs[None, :]) & 1
        out |= parity.astype(np.int64) << (r - 1 - j)
    out ^= offsets.astype(np.int64)[:, None]
    return out


def accumulate_blocks(labels, states, nblocks):
    """Sum ``states[x]`` into block ``labels[c, x]`` for every row ``c``.

    Parameters
    ----------
    labels : (C, X) int64 array with entries in ``[0, nblocks)``
    states : (X, D) complex128 array (flattened operators)
    nblocks : int

    Returns
    -------
    (C, nblocks, D) complex128 array
    """
    labels = np.asarray(labels, dtype=np.int64)
    states = np.asarray(states, dtype=np.complex128)
    nrows, nx = labels.shape
    out = np.zeros((nrows, nblocks, states.shape[1]), dtype=np.complex128)
    rows = np.arange(nrows)
    for x in range(nx):
        out[rows, labels[:, x]] += states[x]
    return out


def _sequence_logprob(logp, n):
    """log2-probability of every i.i.d. sequence, one axis per variable.

    ``logp`` has one axis per variable (alphabet sizes ``k_j``); the result has
    axes of size ``k_j**n`` where the sequence index is big-endian in position.
    """
    logp = np.asarray(logp, dtype=np.float64)
    nd = logp.ndim
    out = np.zeros((1,) * nd)
    for _ in range(n):
        a = out.reshape(sum(((s, 1) for s in out.shape), ()))
        b = logp.reshape(sum(((1, s) for s in logp.shape), ()))
        with np.errstate(invalid="ignore"):
            out = (a + b).reshape(tuple(s * k for s, k in zip(out.shape, logp.shape)))
    return out


def truncated_array(pmf, n, lower, upper, tol):
    """Materialize ``q = 1{A} 1{B} p`` over all length-``n`` sequences.

    ``pmf`` has axes ``(X_1, ..., X_L, Y)``. ``lower[s]`` is the threshold of the
    set ``A_S`` for the subset with bitmask ``s`` and ``upper`` the one of ``B``.
    Returns ``(p, q)`` with axes ``(X_1^n, ..., X_L^n, Y^n)``.
    """
    pmf = np.asarray(pmf, dtype=np.float64)
    nusers = pmf.ndim - 1
    with np.errstate(divide="ignore"):
        logp_full = _sequence_logprob(np.log2(pmf), n)
    keep = np.ones(logp_full.shape, dtype=bool)
    for s in range(1 << nusers):
        drop = tuple(l for l in range(nusers) if not (s >> l) & 1)
        marg = pmf.sum(axis=drop, keepdims=True) if drop else pmf
        with np.errstate(divide="ignore"):
            lp = _sequence_logprob(np.log2(marg), n)
        with np.errstate(invalid="ignore"):
            keep &= -lp >= lower[s] - tol
    ymarg = pmf.sum(axis=tuple(range(nusers)), keepdims=True)
    with np.errstate(divide="ignore"):
        lpy = _sequence_logprob(np.log2(ymarg), n)
    keep &= -lpy <= upper + tol
    p = np.exp2(logp_full)
    q = np.where(keep, p, 0.0)
    return p, q


def truncation_scan(pmf, n, lower, upper, tol):
    """Summary statistics of the truncation without keeping it.

    Returns ``(excluded_mass, kept_mass, maxq, support_y)`` where ``maxq[s]`` is
    the largest entry of the marginal of ``q`` on ``(X_S^n, Y^n)`` and
    ``support_y`` counts the ``y^n`` with positive ``q_{Y^n}``.
    """
    p, q = truncated_array(pmf, n, lower, upper, tol)
    nusers = p.ndim - 1
    excluded = float(p[q == 0].sum())
    kept = float(q.sum())
    maxq = np.empty(1 << nusers)
    for s in range(1 << nusers):
        drop = tuple(l for l in range(nusers) if not (s >> l) & 1)
        marg = q.sum(axis=drop) if drop else q
        maxq[s] = marg.max()
    qy = q.sum(axis=tuple(range(nusers)))
    return excluded, kept, maxq, int(np.count_nonzero(qy > 0))
