"""Sum-rate optimizations, degradability and the private/quantum sum-rate comparison.

``P_sum`` maximizes ``[I(X_L;B) - I(X_L;E)]^+`` over product ensembles of
signal states, ``Q_sum`` maximizes the coherent information ``I(A_L>B)`` over
product purified inputs.  Both searches are multi-start local ascents and
their values are lower bounds, except in ``grid_exact`` mode (binary inputs
with fixed signal states), where an exhaustive grid plus local refinement is
run.
"""
from __future__ import annotations

import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from . import _config, qstate
from .errors import CapacityError, DomainError, ShapeError
from .qstate import CqState, QuantumChannel

GAP_TOL = 2e-3
DEGRADABLE_TOL = 1e-6
#: Alternating projections stop when the gap shrinks by less than this fraction per window.
STAGNATION_WINDOW = 100
STAGNATION_DECREASE = 1e-4
ALPHABET_CAVEAT = ("default alphabet |X_l| = d_l^2 is a heuristic; "
                   "no sufficient alphabet size is known for the region")


# --------------------------------------------------------------------------------------
# Ensembles
# --------------------------------------------------------------------------------------


def _check_state_batch(states: np.ndarray) -> None:
    if np.max(np.abs(states - states.conj().transpose(0, 2, 1)), initial=0.0) > _config.HERMITIAN_TOL:
        raise DomainError("signal states must be Hermitian")
    if np.max(np.abs(np.trace(states, axis1=1, axis2=2).real - 1), initial=0.0) > 1e-9:
        raise DomainError("signal states must have unit trace")
    if np.min(np.linalg.eigvalsh(states), initial=0.0) < -_config.PSD_TOL:
        raise DomainError("signal states must be positive semidefinite")


@dataclass(frozen=True, eq=False)
class InputEnsemble:
    """Per-user pmf ``p_{X_l}`` and signal states ``rho^{x_l}`` of shape ``(|X_l|, d_l, d_l)``."""

    pmfs: tuple
    states: tuple

    def __post_init__(self):
        if len(self.pmfs) != len(self.states):
            raise ShapeError("one pmf and one state array per user")
        pmfs, states = [], []
        for p, s in zip(self.pmfs, self.states):
            p = np.array(p, dtype=np.float64, copy=True).ravel()
            s = np.array(s, dtype=np.complex128, copy=True)
            if s.ndim != 3 or s.shape[0] != p.size or s.shape[1] != s.shape[2]:
                raise ShapeError(f"signal states {s.shape} do not match a pmf of size {p.size}")
            if np.any(p < -1e-12) or abs(p.sum() - 1) > 1e-10:
                raise DomainError("each pmf must be nonnegative and sum to 1")
            _check_state_batch(s)
            p = np.clip(p, 0.0, None)
            p.setflags(write=False)
            s.setflags(write=False)
            pmfs.append(p)
            states.append(s)
        object.__setattr__(self, "pmfs", tuple(pmfs))
        object.__setattr__(self, "states", tuple(states))

    @property
    def num_users(self) -> int:
        return len(self.pmfs)

    @property
    def alphabet_sizes(self) -> tuple:
        return tuple(p.size for p in self.pmfs)

    @property
    def dims(self) -> tuple:
        return tuple(s.shape[1] for s in self.states)

    def joint(self) -> tuple[np.ndarray, np.ndarray]:
        """Product pmf (shape ``alphabet_sizes``) and joint signal states ``(x..., d, d)``."""
        w = np.ones(())
        rho = np.ones((1, 1), dtype=np.complex128)[None]
        for p, s in zip(self.pmfs, self.states):
            w = np.multiply.outer(w, p)
            rho = np.einsum("aij,bkl->abikjl", rho, s)
            n, m = rho.shape[0] * rho.shape[1], rho.shape[2] * rho.shape[3]
            rho = rho.reshape(n, m, m)
        return w, rho.reshape(w.shape + rho.shape[1:])


def classical_ensemble(pmfs: Sequence) -> InputEnsemble:
    """Computational-basis signal states ``|x><x|`` with the given pmfs."""
    out = []
    for p in pmfs:
        k = len(p)
        out.append(np.array([np.diag(np.eye(k)[x]) for x in range(k)], dtype=complex))
    return InputEnsemble(tuple(pmfs), tuple(out))


@dataclass(frozen=True, eq=False)
class PureInputEnsemble:
    """Per-user pure state ``phi_{A_l A'_l}`` as a unit vector of length ``d_A * d_A'``."""

    vectors: tuple
    ref_dims: tuple
    dims: tuple

    def __post_init__(self):
        if not len(self.vectors) == len(self.ref_dims) == len(self.dims):
            raise ShapeError("one vector, reference dimension and input dimension per user")
        vecs = []
        for v, da, d in zip(self.vectors, self.ref_dims, self.dims):
            v = np.array(v, dtype=np.complex128, copy=True).ravel()
            if v.size != int(da) * int(d):
                raise ShapeError(f"vector of length {v.size} does not match {da} x {d}")
            if abs(np.linalg.norm(v) - 1) > 1e-10:
                raise DomainError("input vectors must have unit norm")
            v.setflags(write=False)
            vecs.append(v)
        object.__setattr__(self, "vectors", tuple(vecs))
        object.__setattr__(self, "ref_dims", tuple(int(x) for x in self.ref_dims))
        object.__setattr__(self, "dims", tuple(int(x) for x in self.dims))

    @property
    def num_users(self) -> int:
        return len(self.vectors)

    def input_states(self) -> list[np.ndarray]:
        """Reduced states ``rho_{A'_l} = Tr_{A_l} phi_l``."""
        out = []
        for v, da, d in zip(self.vectors, self.ref_dims, self.dims):
            m = v.reshape(da, d)
            out.append(m.T @ m.conj())
        return out

    def state(self) -> np.ndarray:
        """``phi_{A_L A'_L}`` with factors ordered ``A_1 .. A_L A'_1 .. A'_L``."""
        psi = np.ones(1, dtype=np.complex128)
        for v in self.vectors:
            psi = np.kron(psi, v)
        L = self.num_users
        shape = []
        for da, d in zip(self.ref_dims, self.dims):
            shape += [da, d]
        perm = list(range(0, 2 * L, 2)) + list(range(1, 2 * L, 2))
        psi = psi.reshape(shape).transpose(perm).ravel()
        return np.outer(psi, psi.conj())


def purification(rho) -> np.ndarray:
    """Unit vector ``sum_i sqrt(lambda_i) |i>_A |v_i>_A'`` with ``d_A = d_A'``."""
    lam, vec = qstate.hermitian_eig(rho)
    lam = np.clip(lam, 0.0, None)
    d = len(lam)
    v = np.zeros((d, d), dtype=np.complex128)
    for i in range(d):
        v[i] = np.sqrt(lam[i]) * vec[:, i]
    v = v.ravel()
    return v / np.linalg.norm(v)


def pure_ensemble(states: Sequence) -> PureInputEnsemble:
    """Purifications of the given per-user input states."""
    vecs = [purification(s) for s in states]
    dims = tuple(np.asarray(s).shape[0] for s in states)
    return PureInputEnsemble(tuple(vecs), dims, dims)


# --------------------------------------------------------------------------------------
# Objectives
# --------------------------------------------------------------------------------------


@functools.lru_cache(maxsize=64)
def _kraus_pair(ch: QuantumChannel) -> tuple[np.ndarray, np.ndarray]:
    return ch.kraus, ch.complementary().kraus


def _entropies(batch: np.ndarray) -> np.ndarray:
    """von Neumann entropies of a stack of normalized states."""
    lam = np.linalg.eigvalsh(batch)
    cut = qstate.eig_cutoff(batch.shape[-1])
    lam = np.where(lam > cut, lam, 1.0)
    return -np.sum(lam * np.log2(lam), axis=-1)


def _outputs(ch: QuantumChannel, rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k, kc = _kraus_pair(ch)
    b = np.einsum("kbi,xij,kcj->xbc", k, rho, k.conj())
    e = np.einsum("kbi,xij,kcj->xbc", kc, rho, kc.conj())
    return b, e


def _check_dims(ch: QuantumChannel, dims: Sequence[int]) -> None:
    if tuple(dims) != ch.in_dims:
        raise ShapeError(f"ensemble dimensions {tuple(dims)} do not match channel inputs {ch.in_dims}")


def p_sum_raw(ch: QuantumChannel, ens: InputEnsemble) -> float:
    """Unclipped ``I(X_L;B) - I(X_L;E)`` at the ensemble."""
    _check_dims(ch, ens.dims)
    w, rho = ens.joint()
    d = ch.in_dim
    w = w.ravel()
    b, e = _outputs(ch, rho.reshape(-1, d, d))
    hb = _entropies(np.einsum("x,xij->ij", w, b)[None])[0]
    he = _entropies(np.einsum("x,xij->ij", w, e)[None])[0]
    cond = float(w @ (_entropies(b) - _entropies(e)))
    return float(hb - he - cond)


def p_sum_objective(ch: QuantumChannel, ens: InputEnsemble, clip: bool = True) -> float:
    """``[I(X_L;B) - I(X_L;E)]^+`` for ``rho_{X_L B E}`` built from the isometric extension."""
    v = p_sum_raw(ch, ens)
    return max(0.0, v) if clip else v


def _coherent_from_inputs(ch: QuantumChannel, states: Sequence[np.ndarray]) -> float:
    rho = states[0]
    for s in states[1:]:
        rho = np.kron(rho, s)
    b, e = _outputs(ch, rho[None])
    return float(_entropies(b)[0] - _entropies(e)[0])


def q_sum_objective(ch: QuantumChannel, ens: PureInputEnsemble) -> float:
    """Coherent information ``I(A_L>B) = H(B) - H(A_L B)`` of ``(id (x) N)(phi)``.

    The global state on ``A_L B E`` is pure, so ``H(A_L B) = H(E)`` and only the
    reduced inputs ``rho_{A'_l}`` enter.
    """
    _check_dims(ch, ens.dims)
    return _coherent_from_inputs(ch, ens.input_states())


def ensemble_state(ch: QuantumChannel, ens: InputEnsemble) -> CqState:
    """``rho_{X_L B E}`` with quantum factors ``(B, E)``."""
    _check_dims(ch, ens.dims)
    w, rho = ens.joint()
    d = ch.in_dim
    v = qstate.isometric_extension(ch)
    out = np.einsum("ai,xij,bj->xab", v.isometry, rho.reshape(-1, d, d), v.isometry.conj())
    dd = out.shape[-1]
    return CqState(w, out.reshape(w.shape + (dd, dd)), (v.out_dim, v.env_dim))


def channel_region(ch: QuantumChannel, ens: InputEnsemble, clip: bool = True):
    """Region bounds ``S -> [I(X_S;B|X_Sc) - I(X_S;E)]^+`` of the channel at a product ensemble."""
    from . import regions

    return regions.region_set_function(ensemble_state(ch, ens), clip=clip)


# --------------------------------------------------------------------------------------
# Optimizers
# --------------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OptResult:
    """Best value found, its argument and the per-restart log.

    ``value`` equals the objective re-evaluated at ``argument``; ``raw`` is the
    unclipped objective there.  ``trace`` holds ``(label, best value)`` pairs.
    """

    value: float
    argument: object
    trace: tuple
    status: str
    raw: float
    evaluations: int = 0
    notes: tuple = ()

    @property
    def certified(self) -> bool:
        return self.status == "grid_exact"

    def as_dict(self) -> dict:
        return {"value": self.value, "raw": self.raw, "status": self.status,
                "evaluations": self.evaluations, "notes": list(self.notes),
                "trace": [{"start": label, "value": val} for label, val in self.trace]}


class _BudgetExhausted(Exception):
    pass


class _Counter:
    """Objective wrapper that counts calls, remembers the best point and stops at a limit."""

    def __init__(self, fn, limit: int):
        self.fn = fn
        self.limit = limit
        self.calls = 0
        self.best = -math.inf
        self.best_x = None

    def __call__(self, x):
        if self.calls >= self.limit:
            raise _BudgetExhausted
        self.calls += 1
        v = self.fn(x)
        if v > self.best:
            self.best, self.best_x = v, np.array(x, copy=True)
        return -v


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def _density(a: np.ndarray, d: int) -> np.ndarray:
    m = (a[: d * d] + 1j * a[d * d:]).reshape(d, d)
    rho = m @ m.conj().T
    return rho / np.trace(rho).real


class _EnsembleParams:
    """Real parameter vector <-> product ensemble (logits, then complex factors of each state)."""

    def __init__(self, dims, alphabet_sizes, signals=None):
        self.dims = tuple(dims)
        self.sizes = tuple(alphabet_sizes)
        self.signals = signals
        self.slices = []
        pos = 0
        for d, k in zip(self.dims, self.sizes):
            n_state = 0 if signals is not None else k * 2 * d * d
            self.slices.append((pos, pos + k, pos + k + n_state))
            pos += k + n_state
        self.size = pos

    def ensemble(self, x: np.ndarray) -> InputEnsemble:
        pmfs, states = [], []
        for l, (d, k) in enumerate(zip(self.dims, self.sizes)):
            a, b, c = self.slices[l]
            pmfs.append(_softmax(x[a:b]))
            if self.signals is not None:
                states.append(self.signals[l])
            else:
                blocks = x[b:c].reshape(k, 2 * d * d)
                states.append(np.stack([_density(blk, d) for blk in blocks]))
        return InputEnsemble(tuple(pmfs), tuple(states))

    def random(self, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(size=self.size)

    def from_pmfs(self, pmfs) -> np.ndarray:
        x = np.zeros(self.size)
        for l, p in enumerate(pmfs):
            a, b, _ = self.slices[l]
            x[a:b] = np.log(np.clip(p, 1e-12, None))
        return x


class _StateParams:
    """Real parameter vector <-> product of input density matrices."""

    def __init__(self, dims):
        self.dims = tuple(dims)
        self.offsets = np.cumsum([0] + [2 * d * d for d in self.dims])
        self.size = int(self.offsets[-1])

    def states(self, x: np.ndarray) -> list[np.ndarray]:
        return [_density(x[self.offsets[l]:self.offsets[l + 1]], d) for l, d in enumerate(self.dims)]

    def random(self, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(size=self.size)

    def from_diagonals(self, diags) -> np.ndarray:
        x = np.zeros(self.size)
        for l, (d, p) in enumerate(zip(self.dims, diags)):
            m = np.diag(np.sqrt(np.clip(p, 1e-12, None)))
            x[self.offsets[l]:self.offsets[l] + d * d] = m.ravel()
        return x


def _ascend(fn, x0: np.ndarray, limit: int) -> tuple[float, np.ndarray, bool, int]:
    """L-BFGS-B on ``-fn`` with finite-difference gradients; returns best seen, converged flag, calls."""
    counter = _Counter(fn, limit)
    converged = False
    try:
        res = minimize(counter, x0, method="L-BFGS-B", options={"maxfun": limit, "maxiter": limit})
        converged = bool(res.success)
    except _BudgetExhausted:
        pass
    if counter.best_x is None:
        return -math.inf, x0, False, counter.calls
    return counter.best, counter.best_x, converged, counter.calls


def _run_restarts(fn, starts: list[tuple[str, np.ndarray]], per_start: int, workers: int):
    def job(item):
        label, x0 = item
        return (label,) + _ascend(fn, x0, per_start)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, starts))
    else:
        results = [job(s) for s in starts]
    # deterministic reduction: first index wins ties
    best = max(range(len(results)), key=lambda i: (results[i][1], -i))
    return results, results[best]


def _binary_grid(num_users: int, points: int) -> np.ndarray:
    """All ``(p_1, ..., p_L)`` on a ``points``-per-axis grid of ``[0, 1]``."""
    axis = np.linspace(0.0, 1.0, points)
    return np.stack(np.meshgrid(*([axis] * num_users), indexing="ij"), axis=-1).reshape(-1, num_users)


def _check_cap(ch: QuantumChannel) -> None:
    env = ch.kraus.shape[0]
    if ch.in_dim * ch.out_dim * env > _config.max_dim() ** 2:
        raise CapacityError("channel dimensions exceed the configured cap")


def maximize_p_sum(ch: QuantumChannel, restarts: int = 8, budget: int = 40000, seed: int = 0,
                   alphabet_sizes: Sequence[int] | None = None, signals: Sequence | None = None,
                   grid_points: int | None = None, workers: int = 1) -> OptResult:
    """Lower bound on ``P_sum`` by multi-start local ascent.

    Parameters
    ----------
    alphabet_sizes : per-user ``|X_l|``; defaults to ``d_l^2``
    signals : fixed per-user signal states ``(|X_l|, d_l, d_l)``; only the pmfs
        are then optimized.  With binary alphabets this runs an exhaustive
        grid over the pmfs (``grid_exact``) before local refinement.
    grid_points : points per axis of the pmf grid; defaults to ``10**4`` for one
        user and ``floor(budget**(1/L) / 2)`` otherwise.
    budget : total number of objective evaluations.

    Returns
    -------
    OptResult
        ``value`` is clipped at 0, ``raw`` is the unclipped maximum found.
    """
    _check_cap(ch)
    L = ch.num_users
    notes = []
    if signals is not None:
        signals = [np.asarray(s, dtype=np.complex128) for s in signals]
        sizes = tuple(s.shape[0] for s in signals)
    else:
        sizes = tuple(alphabet_sizes) if alphabet_sizes is not None else tuple(d * d for d in ch.in_dims)
        if alphabet_sizes is None:
            notes.append(ALPHABET_CAVEAT)
    params = _EnsembleParams(ch.in_dims, sizes, signals)

    def fn(x):
        return p_sum_raw(ch, params.ensemble(x))

    trace = []
    used = 0
    exact = signals is not None and all(k == 2 for k in sizes)
    starts = []
    if exact:
        points = grid_points or (10**4 if L == 1 else max(3, int(budget ** (1 / L) / 2)))
        grid = _binary_grid(L, points)
        used += len(grid)
        vals = np.array([p_sum_raw(ch, InputEnsemble(tuple(np.array([1 - p, p]) for p in row),
                                                     tuple(signals))) for row in grid])
        top = int(np.argmax(vals))
        trace.append(("grid", float(vals[top])))
        starts.append(("grid-refine", params.from_pmfs([[1 - p, p] for p in grid[top]])))
    elif all(k == 2 for k in sizes) or signals is None:
        # coarse pmf grid with basis-like signal states as extra starting points
        coarse = _binary_grid(L, 5)[1:-1] if all(k == 2 for k in sizes) else np.full((1, L), 0.5)
        for row in coarse:
            x = params.from_pmfs([np.full(k, 1 / k) if k != 2 else [1 - p, p] for k, p in zip(sizes, row)])
            for l, (d, k) in enumerate(zip(ch.in_dims, sizes)):
                a, b, c = params.slices[l]
                blocks = np.zeros((k, 2 * d * d))
                for i in range(k):
                    blocks[i, (i % d) * (d + 1)] = 1.0
                    blocks[i, d * d:] = 1e-3
                x[b:c] = blocks.ravel()
            starts.append((f"grid{tuple(np.round(row, 3))}", x))
    for r in range(restarts):
        starts.append((f"restart{r}", params.random(_config.spawn_rng(seed, r))))
    per_start = max(1, (budget - used) // len(starts))
    results, best = _run_restarts(fn, starts, per_start, workers)
    converged = True
    for label, val, _, conv, calls in results:
        trace.append((label, float(val)))
        used += calls
        converged &= conv
    x_best = best[2]
    ens = params.ensemble(x_best)
    raw = p_sum_raw(ch, ens)
    if exact and trace[0][1] > raw:
        # the grid point itself beats the refinement (e.g. a boundary optimum)
        p_top = grid[top]
        ens = InputEnsemble(tuple(np.array([1 - p, p]) for p in p_top), tuple(signals))
        raw = p_sum_raw(ch, ens)
    status = "grid_exact" if exact else ("converged" if converged else "max_iter")
    return OptResult(max(0.0, raw), ens, tuple(trace), status, raw, used, tuple(notes))


def maximize_q_sum(ch: QuantumChannel, restarts: int = 8, budget: int = 40000, seed: int = 0,
                   workers: int = 1) -> OptResult:
    """Lower bound on ``Q_sum`` over product inputs with ``d_{A_l} = d_{A'_l}``.

    Qubit users also start from a coarse grid of diagonal inputs.  ``value`` is
    the (unclipped) coherent information at the returned argument.
    """
    _check_cap(ch)
    L = ch.num_users
    params = _StateParams(ch.in_dims)

    def fn(x):
        return _coherent_from_inputs(ch, params.states(x))

    starts = []
    if all(d == 2 for d in ch.in_dims):
        for row in _binary_grid(L, 5)[1:-1]:
            starts.append((f"grid{tuple(np.round(row, 3))}",
                           params.from_diagonals([[1 - p, p] for p in row])))
    else:
        starts.append(("mixed", params.from_diagonals([np.full(d, 1 / d) for d in ch.in_dims])))
    for r in range(restarts):
        starts.append((f"restart{r}", params.random(_config.spawn_rng(seed, r))))
    per_start = max(1, budget // len(starts))
    results, best = _run_restarts(fn, starts, per_start, workers)
    trace = tuple((label, float(val)) for label, val, _, _, _ in results)
    used = sum(r[4] for r in results)
    converged = all(r[3] for r in results)
    ens = pure_ensemble(params.states(best[2]))
    value = q_sum_objective(ch, ens)
    return OptResult(value, ens, trace, "converged" if converged else "max_iter", value, used)


# --------------------------------------------------------------------------------------
# Degradability
# --------------------------------------------------------------------------------------


@dataclass(frozen=True)
class DegradabilityResult:
    degradable: bool
    residual: float
    map: QuantumChannel | None
    iterations: int

    @property
    def label(self) -> str:
        return "degradable_within_tol" if self.degradable else "not_found"


def degrading_residual(ch: QuantumChannel, degrading: QuantumChannel) -> float:
    """``||Choi(D o N) - Choi(N^c)||_2`` (Frobenius norm)."""
    comp = ch.complementary()
    if degrading.in_dim != ch.out_dim or degrading.out_dim != comp.out_dim:
        raise ShapeError("degrading map must go from Bob's output to the environment")
    return float(np.linalg.norm(ch.compose(degrading).choi() - comp.choi()))


def _choi_to_kraus(j: np.ndarray, din: int, dout: int) -> np.ndarray:
    lam, vec = np.linalg.eigh((j + j.conj().T) / 2)
    keep = lam > qstate.eig_cutoff(len(lam)) * max(1.0, lam[-1])
    ks = []
    for v, l in zip(vec[:, keep].T, lam[keep]):
        # |K>> = sum_i |i> (x) K|i>, so the (din, dout) reshape holds K^T
        ks.append(np.sqrt(l) * v.reshape(din, dout).T)
    if not ks:
        ks.append(np.zeros((dout, din)))
    return np.array(ks)


def _tp_normalize(j: np.ndarray, din: int, dout: int) -> np.ndarray:
    t = np.einsum("iaja->ij", j.reshape(din, dout, din, dout))
    lam, vec = np.linalg.eigh((t + t.conj().T) / 2)
    lam = np.maximum(lam, 1e-14)
    s = (vec / np.sqrt(lam)) @ vec.conj().T
    m = np.kron(s, np.eye(dout))
    return m @ j @ m


def check_degradable(ch: QuantumChannel, tol: float = DEGRADABLE_TOL, max_iter: int = 5000) -> DegradabilityResult:
    """Search for a CPTP ``D: B -> E`` with ``D o N = N^c`` by alternating projections.

    The Choi matrix ``J_D`` is projected alternately onto the affine set of
    solutions (least-squares if it is empty) of ``Choi(D o N) = Choi(N^c)``,
    ``Tr_E J_D = I_B`` and onto the positive semidefinite cone; the last
    iterate is made trace preserving and the residual of that channel is
    reported.
    """
    comp = ch.complementary()
    d_a, d_b, d_e = ch.in_dim, ch.out_dim, comp.out_dim
    n = d_b * d_e
    if n * n > _config.max_dim() ** 2 // 4 or (d_a * d_e) ** 2 > _config.max_dim() ** 2 // 4:
        raise CapacityError("degradability check exceeds the dimension cap")
    # With X[(b c), (x y)] = J_D[b x, c y], the condition Choi(D o N) = Choi(N^c) reads K X = T
    # and trace preservation reads X w = vec(I_B) with w = vec(I_E).  Since K vec(I_B) = T w for
    # any pair of trace-preserving maps, the constraints split along w and its complement.
    k = ch.choi().reshape(d_a, d_b, d_a, d_b).transpose(0, 2, 1, 3).reshape(d_a * d_a, d_b * d_b)
    t = comp.choi().reshape(d_a, d_e, d_a, d_e).transpose(0, 2, 1, 3).reshape(d_a * d_a, d_e * d_e)
    k_pinv = np.linalg.pinv(k, rcond=1e-12)
    w = np.eye(d_e).ravel()
    p_w = np.outer(w, w) / d_e
    fixed = np.outer(np.eye(d_b).ravel(), w) / d_e
    t_perp = t - t @ p_w

    def to_x(v):
        return v.reshape(d_b, d_e, d_b, d_e).transpose(0, 2, 1, 3).reshape(d_b * d_b, d_e * d_e)

    def from_x(xm):
        return xm.reshape(d_b, d_b, d_e, d_e).transpose(0, 2, 1, 3).ravel()

    def affine(v):
        y = to_x(v)
        y = y - y @ p_w
        return from_x(fixed + y - k_pinv @ (k @ y - t_perp))

    def psd(v):
        h = v.reshape(n, n)
        h = (h + h.conj().T) / 2
        lam, vec = np.linalg.eigh(h)
        return ((vec * np.clip(lam, 0, None)) @ vec.conj().T).ravel()

    x = affine(np.zeros(n * n, dtype=np.complex128))
    it = 0
    checkpoint = math.inf
    for it in range(1, max_iter + 1):
        y = psd(x)
        x = affine(y)
        gap = np.linalg.norm(x - y)
        if gap < tol * 1e-3:
            break
        # the gap between the two sets decreases monotonically; stop once it has levelled off
        if it % STAGNATION_WINDOW == 0:
            if gap > checkpoint * (1 - STAGNATION_DECREASE):
                break
            checkpoint = gap
    j = _tp_normalize(psd(x).reshape(n, n), d_b, d_e)
    kraus = _choi_to_kraus(j, d_b, d_e)
    tp_err = np.max(np.abs(np.einsum("kji,kjl->il", kraus.conj(), kraus) - np.eye(d_b)))
    if tp_err > _config.CPTP_TOL:
        return DegradabilityResult(False, math.inf, None, it)
    degr = QuantumChannel((d_b,), d_e, kraus)
    res = degrading_residual(ch, degr)
    return DegradabilityResult(res <= tol, res, degr, it)


# --------------------------------------------------------------------------------------
# Constructed degradable channels
# --------------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DegradableChannel:
    """A channel together with an explicit degrading map ``D`` (``D o N = N^c``)."""

    channel: QuantumChannel
    degrading: QuantumChannel
    note: str = ""

    def residual(self) -> float:
        return degrading_residual(self.channel, self.degrading)

    def tensor(self, other: "DegradableChannel") -> "DegradableChannel":
        return DegradableChannel(self.channel.tensor(other.channel), self.degrading.tensor(other.degrading),
                                 f"({self.note}) x ({other.note})")

    def after_unitary(self, u) -> "DegradableChannel":
        """``N o U``; the same ``D`` degrades it."""
        pre = qstate.unitary_channel(u, self.channel.in_dims)
        return DegradableChannel(pre.compose(self.channel), self.degrading, f"{self.note} after unitary")


def degradable_amplitude_damping(gamma: float) -> DegradableChannel:
    """Amplitude damping with ``gamma <= 1/2``; ``N^c = AD_{1-gamma}`` and ``D = AD_{(1-2 gamma)/(1-gamma)}``."""
    if not 0 <= gamma <= 0.5:
        raise DomainError("amplitude damping is degradable for gamma in [0, 1/2]")
    return DegradableChannel(qstate.amplitude_damping(gamma),
                             qstate.amplitude_damping((1 - 2 * gamma) / (1 - gamma)),
                             f"amplitude damping gamma={gamma}")


def degradable_dephasing(p: float) -> DegradableChannel:
    """Qubit dephasing; ``D`` measures Z and prepares ``[[1-p, +-c], [+-c, p]]`` with ``c = sqrt(p(1-p))``."""
    if not 0 <= p <= 1:
        raise DomainError("dephasing probability must lie in [0, 1]")
    c = math.sqrt(p * (1 - p))
    prep = [np.array([[1 - p, c], [c, p]]), np.array([[1 - p, -c], [-c, p]])]
    return DegradableChannel(qstate.dephasing_channel(p), measure_prepare(prep), f"dephasing p={p}")


def measure_prepare(states: Sequence) -> QuantumChannel:
    """``sigma -> sum_x <x|sigma|x> states[x]``."""
    ks = []
    k = len(states)
    for x, s in enumerate(states):
        lam, vec = np.linalg.eigh(qstate.as_matrix(s))
        for j in range(len(lam)):
            if lam[j] > qstate.eig_cutoff(len(lam)):
                ks.append(np.sqrt(lam[j]) * np.outer(vec[:, j], np.eye(k)[x]))
    return QuantumChannel((k,), qstate.as_matrix(states[0]).shape[0], np.array(ks))


def degradable_classical_copy(dim: int) -> DegradableChannel:
    """Complete dephasing: both Bob and the environment get ``x``; ``D`` is the identity."""
    return DegradableChannel(qstate.classical_copy_channel(dim), qstate.identity_channel(dim),
                             f"classical copy d={dim}")


def degradable_appended_noise(dim: int, tau) -> DegradableChannel:
    """``rho -> rho (x) tau``: the environment holds a purification of ``tau``.

    ``N^c(rho) = Tr(rho) diag(spec tau)``, so ``D`` discards Bob's output and
    prepares that state.
    """
    t = qstate.as_matrix(tau)
    lam, vec = np.linalg.eigh(t)
    keep = lam > qstate.eig_cutoff(len(lam))
    lam, vec = lam[keep], vec[:, keep]
    ks = np.array([np.sqrt(l) * np.kron(np.eye(dim), v[:, None]) for l, v in zip(lam, vec.T)])
    ch = QuantumChannel((dim,), dim * t.shape[0], ks)
    return DegradableChannel(ch, qstate.replacement_channel((ch.out_dim,), np.diag(lam)),
                             f"appended noise on d={dim}")


def degradable_isometry(u) -> DegradableChannel:
    """Noiseless (isometric) channel; the environment is trivial and ``D`` is the trace."""
    ch = qstate.unitary_channel(u)
    return DegradableChannel(ch, qstate.trace_channel((ch.out_dim,)), "isometry")


def cnot() -> np.ndarray:
    return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def two_user_damping(gamma1: float, gamma2: float) -> DegradableChannel:
    """Two qubit senders, CNOT, then independent amplitude damping on each output qubit."""
    base = degradable_amplitude_damping(gamma1).tensor(degradable_amplitude_damping(gamma2))
    out = base.after_unitary(cnot())
    return DegradableChannel(out.channel, out.degrading, f"CNOT then AD({gamma1}) x AD({gamma2})")


# --------------------------------------------------------------------------------------
# Private vs quantum sum-rate
# --------------------------------------------------------------------------------------


@dataclass(frozen=True)
class SumRateReport:
    p_sum: OptResult
    q_sum: OptResult
    gap: float
    residual: float
    tol: float = GAP_TOL

    @property
    def passed(self) -> bool:
        return self.gap <= self.tol

    def as_dict(self) -> dict:
        return {"p_sum": self.p_sum.as_dict(), "q_sum": self.q_sum.as_dict(), "gap": self.gap,
                "degrading_residual": self.residual, "tol": self.tol, "pass": self.passed}


def theorem3_check(ch, restarts: int = 6, budget: int = 40000, seed: int = 0,
                   tol: float = GAP_TOL, degradable_tol: float = DEGRADABLE_TOL) -> SumRateReport:
    """Compare ``max_p_sum`` and ``max_q_sum`` on a degradable channel.

    ``ch`` is a :class:`DegradableChannel` (its map is verified) or a plain
    channel, which then has to pass :func:`check_degradable`.
    """
    if isinstance(ch, DegradableChannel):
        residual = ch.residual()
        ch = ch.channel
    else:
        residual = check_degradable(ch, degradable_tol).residual
    if residual > degradable_tol:
        raise DomainError(f"channel is not certified degradable (residual {residual:.3g})")
    # with degradability, pure signal states suffice and |X_l| = d_l is enough
    p = maximize_p_sum(ch, restarts, budget, seed, alphabet_sizes=ch.in_dims)
    q = maximize_q_sum(ch, restarts, budget, seed)
    return SumRateReport(p, q, abs(p.value - max(0.0, q.value)), residual, tol)


def additivity_check(ch: QuantumChannel, restarts: int = 6, budget: int = 40000, seed: int = 0,
                     tol: float = GAP_TOL) -> tuple[float, float, bool]:
    """``(Q_sum(N (x) N), 2 Q_sum(N), Q_sum(N (x) N) >= 2 Q_sum(N) - tol)``."""
    single = maximize_q_sum(ch, restarts, budget, seed).value
    double = maximize_q_sum(ch.tensor(ch), restarts, budget, seed).value
    return double, 2 * single, double >= 2 * single - tol
