"""Density operators, classical-quantum states and channels in Kraus form.

Conventions
-----------
* Composite systems are ordered left to right; ``dims`` lists factor dimensions
  and factor ``k`` is the ``k``-th Kronecker factor.
* A channel's Kraus operators map the joint input space (users in order) to the
  output space.  The isometric extension stacks them as ``V = sum_k K_k (x) |k>_E``,
  so the extended output is ordered ``B (x) E``.
* Every object is immutable after construction (arrays are flagged read-only).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _config
from .errors import CapacityError, DomainError, ShapeError


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


def _check_dim(dim: int) -> None:
    if dim > _config.max_dim():
        raise CapacityError(f"dimension {dim} exceeds the cap {_config.max_dim()} (PRIVMAC_MAX_DIM)")


def eig_cutoff(dim: int) -> float:
    return _config.EIG_CUTOFF * max(dim, 1)


# --------------------------------------------------------------------------------------
# Types
# --------------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A (sub)normalized quantum state.

    Hermitian, positive semidefinite and with trace in ``(0, 1]`` up to the
    tolerances of :mod:`privmac._config`.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError(f"density operator must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DomainError("density operator has non-finite entries")
        m = _frozen(m)
        object.__setattr__(self, "matrix", m)
        if np.max(np.abs(m - m.conj().T), initial=0.0) > _config.HERMITIAN_TOL:
            raise DomainError("density operator is not Hermitian")
        tr = float(np.trace(m).real)
        if not (0.0 < tr <= 1.0 + _config.TRACE_TOL):
            raise DomainError(f"trace {tr!r} outside (0, 1]")
        lam_min = float(np.linalg.eigvalsh(m)[0])
        if lam_min < -_config.PSD_TOL:
            raise DomainError(f"density operator is not positive semidefinite (min eigenvalue {lam_min:.3g})")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def __repr__(self):
        return f"DensityOperator(dim={self.dim}, trace={self.trace:.6g})"


@dataclass(frozen=True, eq=False)
class CqState:
    """Classical registers ``X_1..X_L`` attached to conditional quantum states.

    Parameters
    ----------
    weights : array with one axis per register, ``p(x_1, ..., x_L)``
    cond_states : array of shape ``weights.shape + (d, d)``; trace-one states
        ``rho-bar^{x_L}`` (entries for zero-weight symbols are still validated)
    qdims : factorization of the quantum part, e.g. ``(d_B, d_E)``; defaults to ``(d,)``
    normalized : require ``sum p == 1`` (otherwise only ``<= 1``)
    """

    weights: np.ndarray
    cond_states: np.ndarray
    qdims: tuple = None
    normalized: bool = True

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, copy=True)
        s = np.array(self.cond_states, dtype=np.complex128, copy=True)
        if s.shape[: w.ndim] != w.shape or s.ndim != w.ndim + 2 or s.shape[-1] != s.shape[-2]:
            raise ShapeError(f"cond_states shape {s.shape} does not match weights {w.shape}")
        if np.any(w < -_config.TRACE_TOL) or not np.all(np.isfinite(w)):
            raise DomainError("weights must be finite and nonnegative")
        w = np.clip(w, 0.0, None)
        total = float(w.sum())
        if total > 1 + _config.TRACE_TOL:
            raise DomainError(f"weights sum to {total!r} > 1")
        if self.normalized and abs(total - 1) > _config.TRACE_TOL:
            raise DomainError(f"weights sum to {total!r}, expected 1")
        d = s.shape[-1]
        flat = s.reshape(-1, d, d)
        if np.max(np.abs(flat - flat.conj().transpose(0, 2, 1)), initial=0.0) > _config.HERMITIAN_TOL:
            raise DomainError("conditional states must be Hermitian")
        traces = np.trace(flat, axis1=1, axis2=2).real
        if np.max(np.abs(traces - 1), initial=0.0) > 1e-9:
            raise DomainError("conditional states must have unit trace")
        if np.min(np.linalg.eigvalsh(flat), initial=0.0) < -_config.PSD_TOL:
            raise DomainError("conditional states must be positive semidefinite")
        qdims = tuple(int(q) for q in (self.qdims or (d,)))
        if int(np.prod(qdims)) != d:
            raise ShapeError(f"qdims {qdims} do not multiply to {d}")
        _check_dim(int(w.size) * d)
        w.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "cond_states", s)
        object.__setattr__(self, "qdims", qdims)

    # ---- shape information -----------------------------------------------------------
    @property
    def num_registers(self) -> int:
        return self.weights.ndim

    @property
    def alphabet_sizes(self) -> tuple:
        return self.weights.shape

    @property
    def qdim(self) -> int:
        return self.cond_states.shape[-1]

    # ---- derived objects -------------------------------------------------------------
    def subnormalized(self) -> np.ndarray:
        """``rho_E^{x_L} = p(x_L) rho-bar^{x_L}``, shape ``weights.shape + (d, d)``."""
        return self.weights[..., None, None] * self.cond_states

    def quantum_marginal(self) -> np.ndarray:
        """``rho_E = sum_x p(x) rho-bar^x`` as a matrix."""
        d = self.qdim
        return self.subnormalized().reshape(-1, d, d).sum(axis=0)

    def marginal(self, keep: Sequence[int]) -> "CqState":
        """Trace out the classical registers not listed in ``keep`` (order preserved)."""
        keep = sorted(set(int(k) for k in keep))
        drop = tuple(k for k in range(self.num_registers) if k not in keep)
        if not drop:
            return self
        sub = self.subnormalized().sum(axis=drop)
        w = self.weights.sum(axis=drop)
        cond = _conditional(sub, w, self.qdim)
        return CqState(w, cond, self.qdims, normalized=False)

    def reduce_quantum(self, keep: Sequence[int]) -> "CqState":
        """Partial trace on the quantum part, keeping factors ``keep`` of ``qdims``."""
        keep = list(keep)
        d = self.qdim
        flat = self.cond_states.reshape(-1, d, d)
        red = np.stack([partial_trace(m, self.qdims, keep) for m in flat])
        dk = red.shape[-1]
        return CqState(self.weights, red.reshape(self.weights.shape + (dk, dk)),
                       tuple(self.qdims[k] for k in keep), normalized=False)

    def flatten(self) -> DensityOperator:
        """Block-diagonal operator ``sum_x |x><x| (x) rho_E^x``."""
        d = self.qdim
        blocks = self.subnormalized().reshape(-1, d, d)
        n = blocks.shape[0]
        _check_dim(n * d)
        out = np.zeros((n * d, n * d), dtype=np.complex128)
        for i in range(n):
            out[i * d:(i + 1) * d, i * d:(i + 1) * d] = blocks[i]
        return DensityOperator(out)

    def tensor_power(self, n: int) -> "CqState":
        """``rho^{(x) n}`` with register ``l`` of the result holding ``x_l^n`` (big-endian)."""
        if n < 1:
            raise DomainError("n must be >= 1")
        w, s, qd = self.weights, self.cond_states, self.qdims
        for _ in range(n - 1):
            w, s = _cq_product(w, s, self.weights, self.cond_states)
            qd = qd + self.qdims
        return CqState(w, s, qd, normalized=self.normalized)

    def __repr__(self):
        return f"CqState(alphabets={self.alphabet_sizes}, qdims={self.qdims})"


def _conditional(sub: np.ndarray, w: np.ndarray, d: int) -> np.ndarray:
    cond = np.empty_like(sub)
    flat_sub = sub.reshape(-1, d, d)
    flat_w = w.reshape(-1)
    out = cond.reshape(-1, d, d)
    for i, (m, p) in enumerate(zip(flat_sub, flat_w)):
        out[i] = m / p if p > 0 else np.eye(d) / d
    return cond


def _cq_product(w1, s1, w2, s2):
    """Interleave two cq states register by register (register l: x1_l * |X2_l| + x2_l)."""
    L = w1.ndim
    w = np.multiply.outer(w1, w2)  # axes: X1_1..X1_L, X2_1..X2_L
    perm = [a for l in range(L) for a in (l, L + l)]
    w = w.transpose(perm).reshape(tuple(a * b for a, b in zip(w1.shape, w2.shape)))
    d1, d2 = s1.shape[-1], s2.shape[-1]
    f1 = s1.reshape(-1, d1, d1)
    f2 = s2.reshape(-1, d2, d2)
    prod = np.einsum("aij,bkl->abikjl", f1, f2).reshape(f1.shape[0], f2.shape[0], d1 * d2, d1 * d2)
    prod = prod.reshape(w1.shape + w2.shape + (d1 * d2, d1 * d2))
    prod = prod.transpose(perm + [2 * L, 2 * L + 1]).reshape(w.shape + (d1 * d2, d1 * d2))
    return w, prod


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """CPTP map from ``A'_1 (x) ... (x) A'_L`` to ``B`` given by Kraus operators."""

    in_dims: tuple
    out_dim: int
    kraus: np.ndarray

    def __post_init__(self):
        in_dims = tuple(int(d) for d in self.in_dims)
        k = np.array(self.kraus, dtype=np.complex128, copy=True)
        if k.ndim == 2:
            k = k[None]
        din = int(np.prod(in_dims))
        if k.ndim != 3 or k.shape[1:] != (int(self.out_dim), din):
            raise ShapeError(f"Kraus operators must have shape (K, {self.out_dim}, {din}), got {k.shape}")
        if not np.all(np.isfinite(k)):
            raise DomainError("Kraus operators have non-finite entries")
        _check_dim(din)
        _check_dim(int(self.out_dim) * k.shape[0])
        tp = np.einsum("kji,kjl->il", k.conj(), k)
        err = np.max(np.abs(tp - np.eye(din)))
        if err > _config.CPTP_TOL:
            raise DomainError(f"channel is not trace preserving (deviation {err:.3g})")
        k.setflags(write=False)
        object.__setattr__(self, "in_dims", in_dims)
        object.__setattr__(self, "out_dim", int(self.out_dim))
        object.__setattr__(self, "kraus", k)

    @property
    def in_dim(self) -> int:
        return int(np.prod(self.in_dims))

    @property
    def num_users(self) -> int:
        return len(self.in_dims)

    def __call__(self, rho) -> np.ndarray:
        return apply_channel(self, rho)

    def choi(self) -> np.ndarray:
        """Choi matrix ``sum_ij |i><j| (x) N(|i><j|)`` (input factor first)."""
        return choi_matrix(self.kraus)

    def complementary(self) -> "QuantumChannel":
        """Channel to the environment of :func:`isometric_extension`."""
        # (N^c) Kraus operator for output basis vector b: row k equals row b of K_k
        k = self.kraus
        comp = np.transpose(k, (1, 0, 2))  # (out_dim, K, in_dim)
        return QuantumChannel(self.in_dims, k.shape[0], comp)

    def compose(self, after: "QuantumChannel") -> "QuantumChannel":
        """``after o self``."""
        if after.in_dim != self.out_dim:
            raise ShapeError("composed channel dimensions do not match")
        ks = np.einsum("aij,bjk->abik", after.kraus, self.kraus)
        ks = ks.reshape(-1, after.out_dim, self.in_dim)
        return QuantumChannel(self.in_dims, after.out_dim, ks)

    def tensor(self, other: "QuantumChannel") -> "QuantumChannel":
        """Parallel use; users of ``self`` come first, outputs ``B_self (x) B_other``."""
        ks = np.einsum("aij,bkl->abikjl", self.kraus, other.kraus)
        ks = ks.reshape(self.kraus.shape[0] * other.kraus.shape[0],
                        self.out_dim * other.out_dim, self.in_dim * other.in_dim)
        return QuantumChannel(self.in_dims + other.in_dims, self.out_dim * other.out_dim, ks)

    def __repr__(self):
        return f"QuantumChannel(in_dims={self.in_dims}, out_dim={self.out_dim}, kraus={self.kraus.shape[0]})"


@dataclass(frozen=True, eq=False)
class IsometricExtension:
    """Stinespring isometry ``V : A' -> B (x) E`` of a channel."""

    isometry: np.ndarray
    out_dim: int
    env_dim: int
    in_dims: tuple = field(default=())

    def __post_init__(self):
        v = _frozen(self.isometry)
        object.__setattr__(self, "isometry", v)
        if v.shape[0] != self.out_dim * self.env_dim:
            raise ShapeError("isometry rows must equal out_dim * env_dim")
        err = np.max(np.abs(v.conj().T @ v - np.eye(v.shape[1])))
        if err > _config.ISOMETRY_TOL:
            raise DomainError(f"V is not an isometry (deviation {err:.3g})")

    def apply(self, rho) -> np.ndarray:
        """``V rho V^dagger`` on ``B (x) E``."""
        m = np.asarray(rho, dtype=np.complex128)
        return self.isometry @ m @ self.isometry.conj().T


# --------------------------------------------------------------------------------------
# Operations
# --------------------------------------------------------------------------------------


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {m.shape}")
    return m


def tensor(*ops):
    """Kronecker product of states or matrices.

    Returns a :class:`DensityOperator` when every operand is one.
    """
    if not ops:
        raise ShapeError("tensor needs at least one operand")
    dim = int(np.prod([as_matrix(o).shape[0] for o in ops]))
    _check_dim(dim)
    out = as_matrix(ops[0])
    for o in ops[1:]:
        out = np.kron(out, as_matrix(o))
    if all(isinstance(o, DensityOperator) for o in ops):
        return DensityOperator(out)
    return out


def partial_trace(rho, dims: Sequence[int], keep: Sequence[int]):
    """Trace out every factor of ``dims`` not in ``keep``.

    The kept factors stay in their original order. Returns the same type as
    ``rho`` (a :class:`DensityOperator` or a plain matrix).
    """
    m = as_matrix(rho)
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != m.shape[0] or m.shape[0] != m.shape[1]:
        raise ShapeError(f"dims {dims} do not match matrix shape {m.shape}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ShapeError(f"keep {keep} out of range for {len(dims)} factors")
    n = len(dims)
    t = m.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n > len(letters):
        raise CapacityError("too many tensor factors")
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for k in range(n):
        if k not in keep:
            col[k] = row[k]
    out_idx = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    res = np.einsum("".join(row) + "".join(col) + "->" + out_idx, t)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    res = res.reshape(dk, dk)
    if isinstance(rho, DensityOperator):
        return DensityOperator(res)
    return res


def apply_channel(ch: QuantumChannel, rho):
    """``sum_k K_k rho K_k^dagger``."""
    m = as_matrix(rho)
    if m.shape != (ch.in_dim, ch.in_dim):
        raise ShapeError(f"input of dimension {m.shape[0]} does not match channel input {ch.in_dim}")
    out = np.einsum("kij,jl,kml->im", ch.kraus, m, ch.kraus.conj())
    if isinstance(rho, DensityOperator):
        return DensityOperator(out)
    return out


def isometric_extension(ch: QuantumChannel) -> IsometricExtension:
    """``V = sum_k K_k (x) |k>_E`` with ``env_dim`` equal to the number of Kraus operators."""
    k = ch.kraus
    nk = k.shape[0]
    # V[(b, e), i] = K_e[b, i]
    v = np.transpose(k, (1, 0, 2)).reshape(ch.out_dim * nk, ch.in_dim)
    return IsometricExtension(v, ch.out_dim, nk, ch.in_dims)


def choi_matrix(kraus: np.ndarray) -> np.ndarray:
    """Choi matrix of a Kraus list, ordered (input, output)."""
    kraus = np.asarray(kraus, dtype=np.complex128)
    if kraus.ndim == 2:
        kraus = kraus[None]
    nk, dout, din = kraus.shape
    # |K>> = sum_i |i> (x) K|i>
    vecs = kraus.transpose(0, 2, 1).reshape(nk, din * dout)
    return vecs.T @ vecs.conj()


def apply_choi(choi: np.ndarray, din: int, dout: int, rho) -> np.ndarray:
    """Apply a map given by its Choi matrix: ``sum_ij rho_ij N(|i><j|)``."""
    m = as_matrix(rho)
    j = np.asarray(choi).reshape(din, dout, din, dout)
    return np.einsum("ij,iajb->ab", m, j)


def trace_norm(a) -> float:
    """Sum of singular values; uses the eigenvalues for Hermitian input."""
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ShapeError("trace norm requires a square matrix")
    if m.size == 0:
        return 0.0
    if np.max(np.abs(m - m.conj().T)) <= 1e-12 * max(1.0, np.max(np.abs(m))):
        return float(np.sum(np.abs(np.linalg.eigvalsh(m))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def hermitian_eig(a):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix."""
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ShapeError("eigendecomposition requires a square matrix")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > _config.HERMITIAN_TOL:
        raise DomainError("matrix is not Hermitian")
    h = (m + m.conj().T) / 2
    return np.linalg.eigh(h)


def support_projector(a) -> np.ndarray:
    lam, vec = hermitian_eig(a)
    sel = lam > eig_cutoff(len(lam))
    v = vec[:, sel]
    return v @ v.conj().T


def mpower(a, power: float) -> np.ndarray:
    """Matrix power on the support (pseudo-inverse for negative powers)."""
    lam, vec = hermitian_eig(a)
    sel = lam > eig_cutoff(len(lam))
    vals = np.zeros_like(lam)
    vals[sel] = lam[sel] ** power
    return (vec * vals) @ vec.conj().T


def fully_mixed_on_support(a) -> np.ndarray:
    p = support_projector(a)
    return p / np.trace(p).real


# --------------------------------------------------------------------------------------
# Constructors
# --------------------------------------------------------------------------------------


def basis_state(dim: int, index: int) -> DensityOperator:
    m = np.zeros((dim, dim), dtype=np.complex128)
    m[index, index] = 1
    return DensityOperator(m)


def pure_state(vec) -> DensityOperator:
    v = np.asarray(vec, dtype=np.complex128).reshape(-1)
    v = v / np.linalg.norm(v)
    return DensityOperator(np.outer(v, v.conj()))


def maximally_mixed(dim: int) -> DensityOperator:
    return DensityOperator(np.eye(dim) / dim)


def bell_state() -> DensityOperator:
    return pure_state([1, 0, 0, 1])


def cq_state(weights, cond_states, qdims=None, normalized=True) -> CqState:
    return CqState(np.asarray(weights), np.asarray(cond_states), qdims, normalized)


def product_cq_state(pmfs: Sequence, conditional) -> CqState:
    """cq state with product weights ``prod_l p_l(x_l)``; ``conditional(x_tuple)`` gives the state."""
    w = pmfs[0]
    for p in pmfs[1:]:
        w = np.multiply.outer(w, p)
    w = np.asarray(w, dtype=np.float64)
    states = [as_matrix(conditional(x)) for x in itertools.product(*(range(len(p)) for p in pmfs))]
    d = states[0].shape[0]
    return CqState(w, np.stack(states).reshape(w.shape + (d, d)))


def identity_channel(dim: int) -> QuantumChannel:
    return QuantumChannel((dim,), dim, np.eye(dim)[None])


def depolarizing_channel(dim: int, p: float) -> QuantumChannel:
    """``rho -> (1-p) rho + p Tr(rho) I/d`` via the Weyl (clock-and-shift) Kraus set."""
    w = np.exp(2j * np.pi / dim)
    shift = np.roll(np.eye(dim), 1, axis=0)
    clock = np.diag(w ** np.arange(dim))
    ks = []
    for a in range(dim):
        for b in range(dim):
            u = np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
            coef = 1 - p + p / dim**2 if (a, b) == (0, 0) else p / dim**2
            ks.append(np.sqrt(coef) * u)
    return QuantumChannel((dim,), dim, np.array(ks))


def amplitude_damping(gamma: float) -> QuantumChannel:
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]])
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]])
    return QuantumChannel((2,), 2, np.array([k0, k1]))


def dephasing_channel(p: float) -> QuantumChannel:
    return QuantumChannel((2,), 2, np.array([np.sqrt(1 - p) * np.eye(2), np.sqrt(p) * np.diag([1, -1])]))


def classical_copy_channel(dim: int) -> QuantumChannel:
    """Complete dephasing: Kraus ``|x><x|``; the environment gets a copy of ``x``."""
    return QuantumChannel((dim,), dim, np.array([np.outer(np.eye(dim)[x], np.eye(dim)[x]) for x in range(dim)]))


def unitary_channel(u, in_dims=None) -> QuantumChannel:
    u = as_matrix(u)
    return QuantumChannel(tuple(in_dims or (u.shape[1],)), u.shape[0], u[None])


def replacement_channel(in_dims: Sequence[int], state) -> QuantumChannel:
    """Discard the input and prepare ``state``."""
    s = as_matrix(state)
    din = int(np.prod(in_dims))
    lam, vec = np.linalg.eigh(s)
    ks = []
    for j in range(len(lam)):
        if lam[j] <= eig_cutoff(len(lam)):
            continue
        for i in range(din):
            ks.append(np.sqrt(lam[j]) * np.outer(vec[:, j], np.eye(din)[i]))
    return QuantumChannel(tuple(in_dims), s.shape[0], np.array(ks))


def trace_channel(in_dims: Sequence[int]) -> QuantumChannel:
    """Map to the one-dimensional output (the trace)."""
    return replacement_channel(in_dims, np.ones((1, 1)))


def with_users(ch: QuantumChannel, in_dims: Sequence[int]) -> QuantumChannel:
    """Same map with the input space split into the given user factors."""
    if int(np.prod(in_dims)) != ch.in_dim:
        raise ShapeError("user dimensions do not multiply to the channel input dimension")
    return QuantumChannel(tuple(in_dims), ch.out_dim, ch.kraus)


# --------------------------------------------------------------------------------------
# Random objects (seeded)
# --------------------------------------------------------------------------------------


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random state ``G G^dagger / Tr`` with ``G`` a complex Ginibre ``dim x rank`` matrix."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_channel(in_dims: Sequence[int], out_dim: int, num_kraus: int, rng: np.random.Generator) -> QuantumChannel:
    """Random channel from a Haar-like isometry; ``num_kraus`` is raised to ``ceil(din / out_dim)`` if needed."""
    din = int(np.prod(in_dims))
    num_kraus = max(int(num_kraus), -(-din // int(out_dim)))
    g = rng.normal(size=(num_kraus * out_dim, din)) + 1j * rng.normal(size=(num_kraus * out_dim, din))
    q, _ = np.linalg.qr(g)
    return QuantumChannel(tuple(in_dims), out_dim, q.reshape(num_kraus, out_dim, din))


def random_cq_state(alphabet_sizes: Sequence[int], qdim: int, rng: np.random.Generator,
                    product: bool = False, qdims=None, mixed_rank: bool = True) -> CqState:
    """Random cq state; ``product=True`` draws independent register marginals."""
    sizes = tuple(int(a) for a in alphabet_sizes)
    if product:
        w = np.ones(())
        for a in sizes:
            w = np.multiply.outer(w, rng.dirichlet(np.ones(a)))
    else:
        w = rng.dirichlet(np.ones(int(np.prod(sizes)))).reshape(sizes)
    n = int(np.prod(sizes))
    states = []
    for _ in range(n):
        rank = int(rng.integers(1, qdim + 1)) if mixed_rank else qdim
        states.append(random_density(qdim, rng, rank))
    return CqState(w, np.stack(states).reshape(sizes + (qdim, qdim)), qdims)
