"""Entropic functionals in bits.

All quantities use base-2 logarithms and the eigenvalue cutoff of
:func:`privmac.qstate.eig_cutoff` (``0 log 0 = 0``; tiny eigenvalues count as
zero for ranks and pseudo-inverses).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import qstate
from .errors import DomainError, SupportError, UsageError
from .qstate import CqState


@dataclass(frozen=True)
class EntropyReport:
    quantity: str
    value: float
    labels: tuple = ()


def _spectrum(rho) -> np.ndarray:
    m = qstate.as_matrix(rho)
    lam = np.linalg.eigvalsh((m + m.conj().T) / 2)
    return lam[lam > qstate.eig_cutoff(len(lam))]


def shannon(p) -> float:
    """Shannon entropy of a nonnegative vector (need not be normalized)."""
    p = np.asarray(p, dtype=np.float64).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def von_neumann(rho) -> float:
    """``-Tr rho log2 rho`` of a normalized state.

    Examples
    --------
    >>> round(von_neumann(np.diag([0.75, 0.25])), 6)
    0.811278
    """
    m = qstate.as_matrix(rho)
    tr = float(np.trace(m).real)
    if abs(tr - 1) > 1e-8:
        raise DomainError(f"von Neumann entropy needs a normalized state (trace {tr!r})")
    lam = _spectrum(m)
    return float(max(0.0, -np.sum(lam * np.log2(lam))))


def _subsystems(dims, *parts):
    n = len(dims)
    seen = set()
    out = []
    for part in parts:
        p = tuple(sorted(set(int(i) for i in part)))
        if any(i < 0 or i >= n for i in p):
            raise UsageError(f"subsystem index out of range in {p}")
        if seen & set(p):
            raise UsageError("subsystem partitions overlap")
        seen |= set(p)
        out.append(p)
    return out


def _h(rho, dims, keep) -> float:
    if not keep:
        return 0.0
    return von_neumann(qstate.partial_trace(rho, dims, keep))


def subsystem_entropy(rho, dims: Sequence[int], part: Sequence[int]) -> float:
    """``H(part)`` of a multipartite state."""
    (a,) = _subsystems(dims, part)
    return _h(rho, dims, a)


def conditional_entropy(rho, dims: Sequence[int], cond_subset: Sequence[int],
                        target: Sequence[int] | None = None) -> float:
    """``H(A|B) = H(AB) - H(B)`` with ``B = cond_subset``.

    ``A`` defaults to every factor not in ``cond_subset``.
    """
    if target is None:
        target = [i for i in range(len(dims)) if i not in set(cond_subset)]
    a, b = _subsystems(dims, target, cond_subset)
    return _h(rho, dims, sorted(a + b)) - _h(rho, dims, b)


def mutual_information(rho, dims, part_a, part_b) -> float:
    """``I(A;B) = H(A) + H(B) - H(AB)``."""
    a, b = _subsystems(dims, part_a, part_b)
    return _h(rho, dims, a) + _h(rho, dims, b) - _h(rho, dims, sorted(a + b))


def conditional_mutual_information(rho, dims, part_a, part_b, part_c) -> float:
    """``I(A;B|C) = H(AC) + H(BC) - H(ABC) - H(C)``."""
    a, b, c = _subsystems(dims, part_a, part_b, part_c)
    return (_h(rho, dims, sorted(a + c)) + _h(rho, dims, sorted(b + c))
            - _h(rho, dims, sorted(a + b + c)) - _h(rho, dims, c))


def coherent_information(rho, dims, part_a, part_b) -> float:
    """``I(A>B) = H(B) - H(AB)``."""
    a, b = _subsystems(dims, part_a, part_b)
    return _h(rho, dims, b) - _h(rho, dims, sorted(a + b))


def hmax(rho) -> float:
    """``log2 rank(rho)``."""
    return float(np.log2(len(_spectrum(rho)))) if len(_spectrum(rho)) else 0.0


# --------------------------------------------------------------------------------------
# cq-state quantities
# --------------------------------------------------------------------------------------


def cq_joint_entropy(cq: CqState, classical: Sequence[int], quantum: Sequence[int] | None = None) -> float:
    """``H(X_T Q)`` for classical registers ``T`` and quantum factors ``Q``.

    Uses the block structure ``H(X_T Q) = H(p_T) + sum_x p(x_T) H(rho-bar_Q^{x_T})``
    instead of building the block-diagonal matrix.
    """
    marg = cq.marginal(classical)
    w = marg.weights.ravel()
    h = shannon(w)
    if quantum is None:
        quantum = range(len(cq.qdims))
    quantum = list(quantum)
    if not quantum:
        return h
    d = marg.qdim
    states = marg.cond_states.reshape(-1, d, d)
    full = len(quantum) == len(cq.qdims)
    for p, s in zip(w, states):
        if p <= 0:
            continue
        if not full:
            s = qstate.partial_trace(s, cq.qdims, quantum)
        h += p * von_neumann(s)
    return float(h)


def cq_conditional_entropy(cq: CqState, classical: Sequence[int], cond_classical: Sequence[int] = (),
                           cond_quantum: Sequence[int] | None = None) -> float:
    """``H(X_T | X_C Q)``; ``cond_quantum=None`` means the whole quantum part."""
    t = sorted(set(classical) | set(cond_classical))
    return (cq_joint_entropy(cq, t, cond_quantum)
            - cq_joint_entropy(cq, sorted(cond_classical), cond_quantum))


def default_sigma(cq: CqState) -> np.ndarray:
    """Fully mixed state on the support of ``rho_E``."""
    return qstate.fully_mixed_on_support(cq.quantum_marginal())


def _sandwiched_blocks(cq: CqState, sigma) -> np.ndarray:
    """``sigma^{-1/2} rho_E^x sigma^{-1/2}`` for every symbol, after checking supports."""
    d = cq.qdim
    s = qstate.as_matrix(sigma)
    if s.shape != (d, d):
        raise UsageError(f"sigma has shape {s.shape}, expected {(d, d)}")
    if abs(np.trace(s).real - 1) > 1e-8:
        raise DomainError("sigma must be normalized")
    lam, vec = qstate.hermitian_eig(s)
    if lam[0] < -1e-10:
        raise DomainError("sigma must be positive semidefinite")
    sel = lam > qstate.eig_cutoff(d)
    blocks = cq.subnormalized().reshape(-1, d, d)
    # support check: mass of each block outside supp(sigma)
    off = vec[:, ~sel]
    if off.shape[1]:
        leak = np.einsum("ia,xij,jb->xab", off.conj(), blocks, off)
        tr = np.trace(leak, axis1=1, axis2=2).real
        if np.max(tr, initial=0.0) > 1e-10:
            raise SupportError("support of rho_E^x is not contained in the support of sigma")
    inv_sqrt = np.zeros_like(lam)
    inv_sqrt[sel] = lam[sel] ** -0.5
    k = (vec * inv_sqrt) @ vec.conj().T
    return k @ blocks @ k


def hmin_cq(cq: CqState, sigma=None) -> float:
    """``H_min(X|E)`` relative to ``sigma``: ``-log2 max_x lambda_max(sigma^{-1/2} rho_E^x sigma^{-1/2})``.

    ``sigma`` defaults to the fully mixed state on the support of ``rho_E``.
    Raises :class:`SupportError` when some ``rho_E^x`` leaves the support of ``sigma``.
    """
    sigma = default_sigma(cq) if sigma is None else sigma
    blocks = _sandwiched_blocks(cq, sigma)
    blocks = (blocks + blocks.conj().transpose(0, 2, 1)) / 2
    top = float(np.max(np.linalg.eigvalsh(blocks)[:, -1]))
    if top <= 0:
        return float("inf")
    return float(-np.log2(top))


def hmin_joint(cq: CqState) -> float:
    """Unconditional ``H_min(X E) = -log2 max_x lambda_max(rho_E^x)``."""
    d = cq.qdim
    blocks = cq.subnormalized().reshape(-1, d, d)
    return float(-np.log2(np.max(np.linalg.eigvalsh(blocks)[:, -1])))


def h2_collision(cq: CqState, sigma=None) -> float:
    """Collision entropy ``-log2( Tr[(rho_XE (I (x) sigma^{-1/2}))^2] / Tr rho_XE )``."""
    sigma = default_sigma(cq) if sigma is None else sigma
    d = cq.qdim
    blocks = cq.subnormalized().reshape(-1, d, d)
    _sandwiched_blocks(cq, sigma)  # support check
    k = qstate.mpower(sigma, -0.5)
    prod = blocks @ k
    num = float(np.einsum("xij,xji->", prod, prod).real)
    den = float(cq.weights.sum())
    return float(-np.log2(num / den))


def report(cq: CqState, sigma=None) -> list[EntropyReport]:
    """``H_min``, ``H_2`` and ``H_max(rho_E)`` of a cq state."""
    return [
        EntropyReport("hmin", hmin_cq(cq, sigma), ("X", "E")),
        EntropyReport("h2", h2_collision(cq, sigma), ("X", "E")),
        EntropyReport("hmax", hmax(cq.quantum_marginal()), ("E",)),
    ]
