"""Set functions on the subsets of ``L`` users and private rate regions.

Subsets are bitmasks: user ``l`` (0-based) belongs to ``S`` when bit ``l`` is set.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _config
from .entropy import cq_joint_entropy
from .errors import DomainError, ShapeError
from .qstate import CqState

MAX_USERS = 8


def mask_of(users: Iterable[int]) -> int:
    m = 0
    for u in users:
        m |= 1 << int(u)
    return m


def users_of(mask: int, L: int) -> list[int]:
    return [l for l in range(L) if (mask >> l) & 1]


@dataclass(frozen=True, eq=False)
class SetFunction:
    """Real function on ``2**L`` subsets, indexed by bitmask."""

    L: int
    values: np.ndarray

    def __post_init__(self):
        if not 0 <= self.L <= MAX_USERS:
            raise ShapeError(f"L must lie in [0, {MAX_USERS}]")
        v = np.array(self.values, dtype=np.float64, copy=True).reshape(-1)
        if v.size != 1 << self.L:
            raise ShapeError(f"expected {1 << self.L} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise DomainError("set function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_dict(cls, L: int, table: dict) -> "SetFunction":
        """Build from ``{frozenset_or_tuple_of_users: value}``; missing subsets are an error."""
        v = np.full(1 << L, np.nan)
        for key, val in table.items():
            v[mask_of(key)] = val
        if np.isnan(v[0]):
            v[0] = 0.0
        return cls(L, v)

    @property
    def full(self) -> int:
        return (1 << self.L) - 1

    def __call__(self, subset) -> float:
        if isinstance(subset, (int, np.integer)):
            return float(self.values[int(subset)])
        return float(self.values[mask_of(subset)])

    def is_normalized(self, tol: float = _config.RATE_TOL) -> bool:
        return abs(self.values[0]) <= tol

    def is_nondecreasing(self, tol: float = _config.RATE_TOL) -> bool:
        v = self.values
        return all(v[s | (1 << l)] >= v[s] - tol for s in range(1 << self.L) for l in range(self.L))

    def is_nonnegative(self, tol: float = _config.RATE_TOL) -> bool:
        return bool(np.all(self.values >= -tol))

    def __add__(self, other: "SetFunction") -> "SetFunction":
        return SetFunction(self.L, self.values + other.values)

    def __neg__(self) -> "SetFunction":
        return SetFunction(self.L, -self.values)

    def __sub__(self, other: "SetFunction") -> "SetFunction":
        return SetFunction(self.L, self.values - other.values)


def modular(weights: Sequence[float]) -> SetFunction:
    """``S -> sum_{l in S} w_l``."""
    L = len(weights)
    return SetFunction(L, [sum(weights[l] for l in users_of(s, L)) for s in range(1 << L)])


# --------------------------------------------------------------------------------------
# Set functions of a cq state
# --------------------------------------------------------------------------------------


def check_product(rho: CqState, tol: float = 1e-10) -> None:
    """Raise :class:`DomainError` unless ``p_{X_L}`` is the product of its marginals."""
    w = rho.weights
    prod = np.ones(())
    for l in range(w.ndim):
        prod = np.multiply.outer(prod, w.sum(axis=tuple(k for k in range(w.ndim) if k != l)))
    err = float(np.max(np.abs(prod - w)))
    if err > tol:
        raise DomainError(f"classical inputs are not independent (deviation {err:.3g})")


@dataclass(frozen=True)
class EntropyTables:
    """``H(X_T)``, ``H(X_T B)`` and ``H(X_T E)`` for every bitmask ``T``."""

    x: np.ndarray
    xb: np.ndarray
    xe: np.ndarray


def entropy_tables(rho: CqState, b: Sequence[int] = (0,), e: Sequence[int] = (1,)) -> EntropyTables:
    """Joint entropies of classical subsets with Bob's or Eve's quantum factors.

    ``b`` and ``e`` index the factors of ``rho.qdims`` held by Bob and Eve; an
    empty ``e`` stands for a trivial eavesdropper.
    """
    L = rho.num_registers
    if L > MAX_USERS:
        raise ShapeError(f"at most {MAX_USERS} users are supported")
    if set(b) & set(e):
        raise ShapeError("Bob and Eve factors overlap")
    n = 1 << L
    x, xb, xe = np.empty(n), np.empty(n), np.empty(n)
    for t in range(n):
        users = users_of(t, L)
        x[t] = cq_joint_entropy(rho, users, [])
        xb[t] = cq_joint_entropy(rho, users, list(b))
        xe[t] = cq_joint_entropy(rho, users, list(e))
    return EntropyTables(x, xb, xe)


def _tables(rho, b, e, tables):
    return tables if tables is not None else entropy_tables(rho, b, e)


def private_bound_values(rho: CqState, b=(0,), e=(1,), tables: EntropyTables | None = None) -> np.ndarray:
    """Unclipped ``I(X_S; B | X_{S^c}) - I(X_S; E)`` for every bitmask ``S``."""
    t = _tables(rho, b, e, tables)
    full = (1 << rho.num_registers) - 1
    out = np.empty(full + 1)
    for s in range(full + 1):
        c = full ^ s
        i_b = (t.x[full] - t.x[c]) - (t.xb[full] - t.xb[c])
        i_e = t.x[s] + t.xe[0] - t.xe[s]
        out[s] = i_b - i_e
    out[0] = 0.0
    return out


def region_set_function(rho: CqState, b=(0,), e=(1,), clip: bool = True,
                        tables: EntropyTables | None = None) -> SetFunction:
    """``f_rho(S) = [I(X_S; B | X_{S^c}) - I(X_S; E)]^+`` of a product-input cq state.

    Parameters
    ----------
    rho : cq state over ``(X_1..X_L; B E)``; quantum factors ``b`` belong to Bob
        and ``e`` to Eve (defaults: ``qdims = (d_B, d_E)``)
    clip : apply ``[.]^+`` per subset (the unclipped table is useful for diagnosis)
    """
    check_product(rho)
    v = private_bound_values(rho, b, e, tables)
    if clip:
        v = np.maximum(v, 0.0)
    return SetFunction(rho.num_registers, v)


def g_function(rho: CqState, b=(0,), e=(1,), tables: EntropyTables | None = None) -> SetFunction:
    """``g_rho(S) = -H(X_S | B X_{S^c})``."""
    t = _tables(rho, b, e, tables)
    full = (1 << rho.num_registers) - 1
    return SetFunction(rho.num_registers, [t.xb[full ^ s] - t.xb[full] for s in range(full + 1)])


def h_function(rho: CqState, b=(0,), e=(1,), tables: EntropyTables | None = None) -> SetFunction:
    """``h_rho(S) = H(X_S | E)``."""
    t = _tables(rho, b, e, tables)
    return SetFunction(rho.num_registers, t.xe - t.xe[0])


def nonprivate_bound_values(rho: CqState, b=(0,)) -> np.ndarray:
    """``I(X_S; B | X_{S^c})`` for every bitmask (the MAC bounds without an eavesdropper)."""
    return private_bound_values(rho, b, ())


# --------------------------------------------------------------------------------------
# Polymatroid machinery
# --------------------------------------------------------------------------------------


@dataclass(frozen=True)
class SubmodularityCheck:
    ok: bool
    worst_pair: tuple | None  # (S, T) bitmasks of the largest violation
    violation: float  # max of f(S|T) + f(S&T) - f(S) - f(T); <= tol when ok

    def __bool__(self):
        return self.ok


def is_submodular(f: SetFunction, tol: float = _config.RATE_TOL) -> SubmodularityCheck:
    """Exhaustive check of ``f(S u T) + f(S n T) <= f(S) + f(T)`` over all pairs."""
    v = f.values
    n = v.size
    s = np.arange(n)[:, None]
    t = np.arange(n)[None, :]
    gap = v[s | t] + v[s & t] - v[s] - v[t]
    idx = np.unravel_index(int(np.argmax(gap)), gap.shape)
    worst = float(gap[idx])
    ok = worst <= tol
    return SubmodularityCheck(ok, None if ok else (int(idx[0]), int(idx[1])), worst)


def is_polymatroid(f: SetFunction, tol: float = _config.RATE_TOL) -> bool:
    return f.is_normalized(tol) and f.is_nondecreasing(tol) and bool(is_submodular(f, tol))


def monotonize(f: SetFunction, tol: float = _config.RATE_TOL) -> SetFunction:
    """``f*(S) = min_{A superset of S} f(A)``.

    Requires ``f`` normalized, nonnegative and submodular; the result is then a
    polymatroid with ``f*(L) = f(L)``.
    """
    if not f.is_normalized(tol):
        raise DomainError("monotonize needs f(empty) = 0")
    if not f.is_nonnegative(tol):
        raise DomainError("monotonize needs a nonnegative set function")
    if not is_submodular(f, tol):
        raise DomainError("monotonize needs a submodular set function")
    v = f.values.copy()
    # superset minimum by dynamic programming over bits, descending masks
    for l in range(f.L):
        bit = 1 << l
        for s in range(v.size - 1, -1, -1):
            if not s & bit:
                v[s] = min(v[s], v[s | bit])
    out = SetFunction(f.L, v)
    assert out.values[out.full] == f.values[f.full]
    assert out.is_normalized(tol) and out.is_nondecreasing(tol) and is_submodular(out, tol)
    return out


def feasible_sandwich(g: SetFunction, f: SetFunction, tol: float = _config.RATE_TOL) -> bool:
    """Whether ``-g(S) <= sum_{s in S} x_s <= f(S)`` for all ``S`` has a real solution ``x``.

    For submodular ``f`` and ``g`` this holds exactly when ``-g(S) <= f(S)``
    for every ``S``.
    """
    if f.L != g.L:
        raise ShapeError("set functions have different L")
    if not is_submodular(f, tol) or not is_submodular(g, tol):
        raise DomainError("feasible_sandwich needs submodular f and g")
    return bool(np.all(-g.values <= f.values + tol))


def sandwich_witness(g: SetFunction, f: SetFunction, tol: float = _config.RATE_TOL) -> np.ndarray | None:
    """A vector ``x`` with ``-g(S) <= x_S <= f(S)`` for all ``S``, or ``None``.

    Solved as a feasibility linear program; intended for diagnostics and
    reports, while :func:`feasible_sandwich` is the decision procedure.
    """
    if not feasible_sandwich(g, f, tol):
        return None
    from scipy.optimize import linprog

    L = f.L
    rows, rhs = [], []
    for s in range(1, 1 << L):
        ind = np.array([(s >> l) & 1 for l in range(L)], dtype=float)
        rows.append(ind)
        rhs.append(f.values[s])
        rows.append(-ind)
        rhs.append(g.values[s])
    res = linprog(np.zeros(L), A_ub=np.array(rows), b_ub=np.array(rhs) + tol,
                  bounds=[(None, None)] * L, method="highs")
    return res.x if res.status == 0 else None


@dataclass(frozen=True, eq=False)
class RateRegion:
    """``{R >= 0 : R_S <= c(S) for all S}``."""

    bounds: SetFunction
    _vertices: list = field(default=None, repr=False, compare=False)

    @property
    def L(self) -> int:
        return self.bounds.L

    def contains(self, rates: Sequence[float], tol: float = _config.RATE_TOL) -> bool:
        r = np.asarray(rates, dtype=np.float64)
        if r.size != self.L or np.any(r < -tol):
            return False
        return all(r[users_of(s, self.L)].sum() <= self.bounds.values[s] + tol for s in range(1, 1 << self.L))

    def vertices(self) -> list[tuple]:
        if self._vertices is None:
            object.__setattr__(self, "_vertices", vertices(self))
        return self._vertices


def vertices(region: RateRegion | SetFunction, tol: float = _config.RATE_TOL) -> list[tuple]:
    """Greedy corners of a polymatroid, one per user order, deduplicated.

    For the order ``pi``, ``R_{pi(k)} = c(pi(1..k)) - c(pi(1..k-1))``.
    """
    c = region.bounds if isinstance(region, RateRegion) else region
    if not is_polymatroid(c, tol):
        raise DomainError("vertices need polymatroid bounds; monotonize first")
    out: list[tuple] = []
    for perm in itertools.permutations(range(c.L)):
        r = np.zeros(c.L)
        prefix = 0
        for u in perm:
            nxt = prefix | (1 << u)
            r[u] = c.values[nxt] - c.values[prefix]
            prefix = nxt
        if not any(np.max(np.abs(r - np.asarray(v))) <= tol for v in out):
            out.append(tuple(float(x) for x in r))
    return out


def polygon(c: SetFunction, tol: float = _config.RATE_TOL) -> list[tuple]:
    """Ordered boundary of a two-user polymatroid region, starting at the origin."""
    if c.L != 2:
        raise ShapeError("polygon is defined for L = 2")
    if not is_polymatroid(c, tol):
        raise DomainError("polygon needs polymatroid bounds")
    c1, c2, c12 = c.values[1], c.values[2], c.values[3]
    pts = [(0.0, 0.0), (c1, 0.0), (c1, c12 - c1), (c12 - c2, c2), (0.0, c2)]
    out: list[tuple] = []
    for p in pts:
        p = (float(p[0]), float(p[1]))
        if not out or max(abs(p[0] - out[-1][0]), abs(p[1] - out[-1][1])) > tol:
            out.append(p)
    if len(out) > 1 and max(abs(out[-1][0] - out[0][0]), abs(out[-1][1] - out[0][1])) <= tol:
        out.pop()
    return out


def sum_rate(f: SetFunction) -> float:
    """``f(L)``, the largest achievable sum-rate (unchanged by monotonization)."""
    return float(f.values[f.full])


# --------------------------------------------------------------------------------------
# Export
# --------------------------------------------------------------------------------------


def bounds_csv(f: SetFunction, unclipped: np.ndarray | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["subset", "users", "bound"] + (["unclipped"] if unclipped is not None else [])
    w.writerow(header)
    for s in range(1, 1 << f.L):
        row = [s, " ".join(str(u + 1) for u in users_of(s, f.L)), repr(float(f.values[s]))]
        if unclipped is not None:
            row.append(repr(float(unclipped[s])))
        w.writerow(row)
    return buf.getvalue()


def vertices_csv(points: Sequence[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if points:
        w.writerow([f"R{l + 1}" for l in range(len(points[0]))])
    for p in points:
        w.writerow([repr(float(x)) for x in p])
    return buf.getvalue()
