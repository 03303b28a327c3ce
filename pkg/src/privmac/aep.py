"""Simultaneous smoothing of min-entropies for i.i.d. distributions, checked exactly.

For ``p_{X_L Y}`` and a blocklength ``n`` the truncation keeps a joint sequence
when every subset marginal is atypically unlikely from below,

    -log p(x_S^n, y^n) >= n H(X_S Y) - n delta_S(n)   for all S (including {}),

and the ``Y`` sequence is not too unlikely,

    -log p(y^n) <= n H(Y) + n delta(n),

and sets ``q = p`` on kept sequences and ``0`` elsewhere.  Everything is
evaluated by enumerating all sequences, either materialized (small cases) or
streamed by :func:`privmac._ext.truncation_scan`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _config, _ext
from ._ext import _fallback
from .entropy import shannon
from .errors import CapacityError, DomainError, ShapeError

ENUMERATION_CAP = 2**24
MATERIALIZE_CAP = 2**22
THRESHOLD_TOL = 1e-9


def _check_pmf(pmf) -> np.ndarray:
    p = np.asarray(pmf, dtype=np.float64)
    if p.ndim < 1:
        raise ShapeError("pmf needs at least the Y axis")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise DomainError("pmf entries must be finite and nonnegative")
    if abs(p.sum() - 1) > 1e-10:
        raise DomainError(f"pmf sums to {p.sum()!r}")
    return p


def subset_axes(mask: int, num_users: int) -> tuple:
    """Axes of the user registers not in ``mask`` (to be summed out)."""
    return tuple(l for l in range(num_users) if not (mask >> l) & 1)


def subset_entropies(pmf) -> np.ndarray:
    """``H(X_S Y)`` for every bitmask ``S`` (entry 0 is ``H(Y)``)."""
    p = _check_pmf(pmf)
    L = p.ndim - 1
    out = np.empty(1 << L)
    for s in range(1 << L):
        drop = subset_axes(s, L)
        out[s] = shannon(p.sum(axis=drop) if drop else p)
    return out


def deltas(alphabet_sizes, y_size: int, n: int, epsilon: float) -> tuple[np.ndarray, float]:
    """``delta_S(n)`` for every bitmask ``S`` and ``delta(n)``.

    ``delta_S(n) = log(|X_S||Y| + 3) sqrt((2/n)(L + 1 + log(1/eps)))`` and
    ``delta(n) = log(|Y| + 3) sqrt((2/n)(1 + log(1/eps)))``.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    L = len(alphabet_sizes)
    log_inv = math.log2(1 / epsilon)
    rad_s = (2 / n) * (L + 1 + log_inv)
    rad = (2 / n) * (1 + log_inv)
    if rad < 0 or rad_s < 0:
        raise DomainError(f"epsilon {epsilon} is too large for the smoothing parameters")
    out = np.empty(1 << L)
    for s in range(1 << L):
        xs = math.prod(alphabet_sizes[l] for l in range(L) if (s >> l) & 1)
        out[s] = math.log2(xs * y_size + 3) * math.sqrt(rad_s)
    return out, math.log2(y_size + 3) * math.sqrt(rad)


@dataclass(frozen=True, eq=False)
class TruncatedDistribution:
    """``q = 1{A} 1{B} p^{(x) n}`` together with the exact summary of the scan.

    Attributes
    ----------
    lower : thresholds ``n H(X_S Y) - n delta_S(n)`` indexed by subset bitmask
    upper : threshold ``n H(Y) + n delta(n)``
    excluded_mass : ``V(p, q) = sum p 1{q = 0}``
    max_marginal : ``max q_{X_S^n Y^n}`` per bitmask
    support_y : ``|supp q_{Y^n}|``
    """

    base: np.ndarray
    n: int
    epsilon: float
    delta_s: np.ndarray
    delta: float
    lower: np.ndarray
    upper: float
    excluded_mass: float
    kept_mass: float
    max_marginal: np.ndarray
    support_y: int
    backend: str = field(default="python")

    @property
    def num_users(self) -> int:
        return self.base.ndim - 1

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Materialized ``(p, q)`` with axes ``(X_1^n, ..., X_L^n, Y^n)``."""
        if self.base.size**self.n > MATERIALIZE_CAP:
            raise CapacityError("too many sequences to materialize")
        return _fallback.truncated_array(self.base, self.n, self.lower, self.upper, THRESHOLD_TOL)


def build_truncation(pmf, n: int, epsilon: float, backend: str | None = None) -> TruncatedDistribution:
    """Construct the truncation of ``pmf^{(x) n}``; ``pmf`` has axes ``(X_1, ..., X_L, Y)``."""
    p = _check_pmf(pmf)
    if p.size**n > ENUMERATION_CAP:
        raise CapacityError(f"{p.size}**{n} joint sequences exceed the enumeration cap {ENUMERATION_CAP}")
    sizes = p.shape[:-1]
    ds, d = deltas(sizes, p.shape[-1], n, epsilon)
    h = subset_entropies(p)
    lower = n * h - n * ds
    upper = n * h[0] + n * d
    excluded, kept, maxq, supp = _ext.truncation_scan(p, n, lower, upper, THRESHOLD_TOL, backend)
    maxq = np.asarray(maxq, dtype=np.float64)
    maxq.setflags(write=False)
    p.setflags(write=False)
    return TruncatedDistribution(p, n, float(epsilon), ds, float(d), lower, float(upper),
                                 float(excluded), float(kept), maxq, int(supp), backend or _ext.BACKEND)


@dataclass(frozen=True)
class TruncationReport:
    n: int
    epsilon: float
    variational: float
    hmin_slack: tuple  # per bitmask: H_min(q_S) - (n H(X_S Y) - n delta_S)
    hmax_slack: float  # (n H(Y) + n delta) - H_max(q_Y)

    @property
    def variational_ok(self) -> bool:
        return self.variational <= self.epsilon + 1e-12

    @property
    def hmin_ok(self) -> bool:
        return all(s >= -THRESHOLD_TOL for s in self.hmin_slack)

    @property
    def hmax_ok(self) -> bool:
        return self.hmax_slack >= -THRESHOLD_TOL

    @property
    def passed(self) -> bool:
        return self.variational_ok and self.hmin_ok and self.hmax_ok

    def as_dict(self) -> dict:
        return {"n": self.n, "epsilon": self.epsilon, "V": self.variational,
                "hmin_slack": list(self.hmin_slack), "hmax_slack": self.hmax_slack,
                "V_ok": self.variational_ok, "hmin_ok": self.hmin_ok, "hmax_ok": self.hmax_ok,
                "pass": self.passed}


def verify_lemma2(t: TruncatedDistribution) -> TruncationReport:
    """Check the three smoothing clauses on an enumerated truncation.

    ``H_min(q) = -log max q`` and ``H_max(q) = log |supp q|``; an all-zero ``q``
    has infinite min-entropy and zero max-entropy.
    """
    with np.errstate(divide="ignore"):
        hmin = -np.log2(t.max_marginal)
    hmin_slack = tuple(float(v) for v in hmin - t.lower)
    hmax_q = math.log2(t.support_y) if t.support_y > 0 else 0.0
    return TruncationReport(t.n, t.epsilon, t.excluded_mass, hmin_slack, float(t.upper - hmax_q))


def hoeffding_tail(alphabet_size: int, n: int, delta: float) -> float:
    """``2^{-n delta^2 / (2 log(|X| + 3)^2)}`` for ``delta`` in ``[0, log |X|]``."""
    if alphabet_size < 1 or n < 1:
        raise DomainError("alphabet_size and n must be positive")
    if not 0 <= delta <= math.log2(alphabet_size) + 1e-15:
        raise DomainError(f"delta must lie in [0, log2 {alphabet_size}]")
    return 2.0 ** (-n * delta**2 / (2 * math.log2(alphabet_size + 3) ** 2))


def empirical_tails(pmf, n: int, delta: float, samples: int, seed: int) -> tuple[float, float]:
    """Frequencies of ``-log p(X^n) <= n H - n delta`` and ``>= n H + n delta`` over i.i.d. draws."""
    p = _check_pmf(pmf).ravel()
    rng = _config.make_rng(seed)
    h = shannon(p)
    with np.errstate(divide="ignore"):
        logp = np.log2(p)
    draws = rng.choice(p.size, size=(samples, n), p=p)
    surprisal = -logp[draws].sum(axis=1)
    low = float(np.mean(surprisal <= n * h - n * delta))
    high = float(np.mean(surprisal >= n * h + n * delta))
    return low, high


def random_pmf(rng: np.random.Generator, shape, alpha: float = 1.0) -> np.ndarray:
    return rng.dirichlet(np.full(math.prod(shape), alpha)).reshape(shape)


def truncation_suite(count: int = 100, seed: int = 0, ns=range(1, 9), max_users: int = 2,
                 epsilons=(0.05, 0.25, 0.5)) -> list[tuple[int, TruncationReport]]:
    """Random binary pmfs with ``L <= max_users``, each truncated at every ``n`` in ``ns``.

    Returns ``(instance index, report)`` pairs.
    """
    out = []
    for i in range(count):
        rng = _config.spawn_rng(seed, i)
        L = int(rng.integers(1, max_users + 1))
        shape = (2,) * (L + 1)
        pmf = random_pmf(rng, shape, float(rng.choice([0.3, 1.0, 3.0])))
        eps = float(rng.choice(epsilons))
        for n in ns:
            out.append((i, verify_lemma2(build_truncation(pmf, n, eps))))
    return out
