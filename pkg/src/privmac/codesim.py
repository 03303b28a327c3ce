"""Exact small-blocklength simulation of the private MAC coding scheme.

Each user ``l`` hashes its i.i.d. source ``X_l^n`` to ``U_l = f_l(X_l^n)`` and
runs the hash backwards: a message picks ``u_l`` and the encoder draws
``x_l^n`` from ``p(x^n | f_l(x^n) = u_l)``.  A random linear bin map
``g_l: U_l -> C_l`` fixes one bin ``c_l*``, and messages are the elements of
``g_l^{-1}(c_l*)``.  Bob decodes all messages jointly with a pretty-good
measurement, and Eve's view is compared to the message-averaged state.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _config, hashlemma, qstate
from .errors import CapacityError, DomainError, ShapeError

SEQUENCE_CAP = 2**16
PGM_CAP = 2**12
EXACT_CAP = 2**16
MAX_HASH_ATTEMPTS = 64


# --------------------------------------------------------------------------------------
# Channel model
# --------------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CqMacWiretapChannel:
    """``x_L -> rho_{BE}^{x_L}``; ``states`` has shape ``alphabet_sizes + (d_B d_E, d_B d_E)``."""

    states: np.ndarray
    dims: tuple

    def __post_init__(self):
        s = np.array(self.states, dtype=np.complex128, copy=True)
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 2 or s.shape[-1] != dims[0] * dims[1] or s.shape[-2] != s.shape[-1]:
            raise ShapeError(f"states {s.shape} do not match the B/E split {dims}")
        flat = s.reshape(-1, s.shape[-1], s.shape[-1])
        for m in flat:
            qstate.DensityOperator(m)
        if np.max(np.abs(np.trace(flat, axis1=1, axis2=2).real - 1), initial=0.0) > 1e-9:
            raise DomainError("channel output states must have unit trace")
        s.setflags(write=False)
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "dims", dims)

    @property
    def alphabet_sizes(self) -> tuple:
        return self.states.shape[:-2]

    @property
    def num_users(self) -> int:
        return len(self.alphabet_sizes)

    def _reduced(self, keep: int) -> np.ndarray:
        d = self.states.shape[-1]
        flat = self.states.reshape(-1, d, d)
        red = np.stack([qstate.partial_trace(m, self.dims, [keep]) for m in flat])
        return red.reshape(self.alphabet_sizes + red.shape[-2:])

    def bob_states(self) -> np.ndarray:
        return self._reduced(0)

    def eve_states(self) -> np.ndarray:
        return self._reduced(1)

    def cq_state(self, pmfs: Sequence) -> qstate.CqState:
        """``rho_{X_L BE}`` under the product input distribution."""
        w = np.ones(())
        for p in pmfs:
            w = np.multiply.outer(w, np.asarray(p, dtype=np.float64))
        if w.shape != self.alphabet_sizes:
            raise ShapeError("pmfs do not match the channel alphabets")
        return qstate.CqState(w, self.states, self.dims)


def product_channel(bob: np.ndarray, eve: np.ndarray) -> CqMacWiretapChannel:
    """Channel with ``rho_{BE}^x = bob[x] (x) eve[x]``."""
    bob = np.asarray(bob, dtype=np.complex128)
    eve = np.asarray(eve, dtype=np.complex128)
    if bob.shape[:-2] != eve.shape[:-2]:
        raise ShapeError("Bob and Eve state arrays index different alphabets")
    joint = np.einsum("...ij,...kl->...ikjl", bob, eve)
    db, de = bob.shape[-1], eve.shape[-1]
    return CqMacWiretapChannel(joint.reshape(bob.shape[:-2] + (db * de, db * de)), (db, de))


def _basis_states(sizes: Sequence[int]) -> np.ndarray:
    """``|x_1 .. x_L><x_1 .. x_L|`` on a register of dimension ``prod sizes``."""
    d = int(np.prod(sizes))
    out = np.zeros(tuple(sizes) + (d, d), dtype=np.complex128)
    for i, x in enumerate(itertools.product(*(range(k) for k in sizes))):
        out[x + (i, i)] = 1.0
    return out


def noiseless_mac(sizes: Sequence[int]) -> CqMacWiretapChannel:
    """Bob receives ``x_L`` in the computational basis, Eve's system is trivial."""
    bob = _basis_states(sizes)
    return product_channel(bob, np.ones(tuple(sizes) + (1, 1)))


def trivial_bob_mac(sizes: Sequence[int]) -> CqMacWiretapChannel:
    """Bob's system is trivial, Eve receives ``x_L``."""
    eve = _basis_states(sizes)
    return product_channel(np.ones(tuple(sizes) + (1, 1)), eve)


def degraded_eve_mac(sizes: Sequence[int], bob_noise: float, eve_noise: float) -> CqMacWiretapChannel:
    """Bob gets ``x_L`` depolarized with ``bob_noise``; Eve gets Bob's state further depolarized with ``eve_noise``."""
    basis = _basis_states(sizes)
    d = basis.shape[-1]
    mixed = np.eye(d) / d
    bob = (1 - bob_noise) * basis + bob_noise * mixed
    eve = (1 - eve_noise) * bob + eve_noise * mixed
    return product_channel(bob, eve)


# --------------------------------------------------------------------------------------
# Step 1: hash inversion
# --------------------------------------------------------------------------------------


def sequence_pmf(pmf, n: int) -> np.ndarray:
    """``p^{(x) n}`` over sequences indexed big-endian in base ``|X|``."""
    p = np.asarray(pmf, dtype=np.float64)
    out = np.ones(1)
    for _ in range(n):
        out = np.multiply.outer(out, p).ravel()
    return out


def sequence_bits(alphabet_size: int, n: int) -> int:
    return max(1, math.ceil(n * math.log2(alphabet_size))) if alphabet_size > 1 else 1


@dataclass(frozen=True, eq=False)
class InversionChannel:
    """Conditional tables ``W(x^n | u) = p(x^n) 1{f(x^n) = u} / p(f^{-1}(u))``."""

    table: np.ndarray  # (2**k, |X|^n)
    labels: np.ndarray  # f(x^n) for every sequence
    empty: np.ndarray  # u values whose preimage carries no probability

    @property
    def ok(self) -> bool:
        return not self.empty.any()

    def sample(self, u: int, rng: np.random.Generator) -> int:
        return int(rng.choice(self.table.shape[1], p=self.table[u]))


def build_inversion_channel(pmf, f, n: int) -> InversionChannel:
    """Exact inversion tables of a hash member ``f`` for the source ``pmf^{(x) n}``.

    ``f`` is a :class:`privmac.hashlemma.HashMember` or a table of output labels.
    """
    k_size = len(pmf)
    count = k_size**n
    if count > SEQUENCE_CAP:
        raise CapacityError(f"{count} sequences exceed the enumeration cap {SEQUENCE_CAP}")
    if isinstance(f, hashlemma.HashMember):
        labels = np.asarray(f.table()[:count], dtype=np.int64)
        num_out = 1 << f.family.output_bits
    else:
        labels = np.asarray(f, dtype=np.int64)[:count]
        num_out = int(labels.max()) + 1
    if labels.size != count:
        raise ShapeError("hash table shorter than the number of sequences")
    p = sequence_pmf(pmf, n)
    table = np.zeros((num_out, count))
    table[labels, np.arange(count)] = p
    mass = table.sum(axis=1)
    empty = mass <= 0
    table[~empty] /= mass[~empty, None]
    table.setflags(write=False)
    return InversionChannel(table, labels, empty)


# --------------------------------------------------------------------------------------
# Pretty-good measurement
# --------------------------------------------------------------------------------------


def pgm_decoder(states, weights=None) -> np.ndarray:
    """POVM ``Pi_i = S^{-1/2} w_i rho_i S^{-1/2}``, ``S = sum_i w_i rho_i``.

    The projector onto the complement of ``supp S`` is added to the first
    element, so the elements sum to the identity.  ``states`` is a list of
    matrices or of ``(label, matrix)`` pairs; returns an array ``(N, d, d)``.
    """
    mats = [s[1] if isinstance(s, tuple) else s for s in states]
    rho = np.stack([qstate.as_matrix(m) for m in mats])
    n, d, _ = rho.shape
    if d > PGM_CAP:
        raise CapacityError(f"PGM dimension {d} exceeds {PGM_CAP}")
    w = np.full(n, 1 / n) if weights is None else np.asarray(weights, dtype=np.float64)
    return _pgm(w[:, None, None] * rho)


def _pgm_root(avg: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lam, vec = qstate.hermitian_eig(avg)
    sel = lam > qstate.eig_cutoff(len(lam)) * max(1.0, lam[-1])
    inv = np.zeros_like(lam)
    inv[sel] = lam[sel] ** -0.5
    root = (vec * inv) @ vec.conj().T
    comp = vec[:, ~sel] @ vec[:, ~sel].conj().T
    return root, comp


def _pgm(weighted: np.ndarray) -> np.ndarray:
    root, comp = _pgm_root(weighted.sum(axis=0))
    povm = root @ weighted @ root
    povm[0] += comp
    return povm


def success_probabilities(povm: np.ndarray, states, weights=None) -> np.ndarray:
    """``Tr[Pi_i rho_i]`` for every ``i``."""
    rho = np.stack([qstate.as_matrix(s[1] if isinstance(s, tuple) else s) for s in states])
    return np.einsum("nij,nji->n", povm, rho).real


# --------------------------------------------------------------------------------------
# Step 2: bins and message sets
# --------------------------------------------------------------------------------------


def random_linear_bins(input_bits: int, output_bits: int, rng: np.random.Generator) -> np.ndarray:
    """Table of ``g(u) = G u`` over GF(2) for a uniformly random ``output_bits x input_bits`` matrix."""
    if output_bits == 0:
        return np.zeros(1 << input_bits, dtype=np.int64)
    rows = rng.integers(0, 1 << input_bits, size=output_bits, dtype=np.uint64) if input_bits else \
        np.zeros(output_bits, dtype=np.uint64)
    u = np.arange(1 << input_bits, dtype=np.uint64)
    out = np.zeros(u.size, dtype=np.int64)
    for i, row in enumerate(rows):
        bit = (np.bitwise_count(u & row) & 1).astype(np.int64)
        out |= bit << (output_bits - 1 - i)
    return out


def bin_census(bins: np.ndarray, num_bins: int, epsilon: float) -> tuple[np.ndarray, float, float]:
    """Preimage sizes, the fraction of bins with ``|g^{-1}(c)| >= eps |U|/|C|`` and
    the fraction of ``U`` lying in such bins."""
    sizes = np.bincount(bins, minlength=num_bins)
    good = sizes >= epsilon * bins.size / num_bins
    return sizes, float(good.mean()), float(sizes[good].sum() / bins.size)


@dataclass(frozen=True, eq=False)
class MacCode:
    """Chosen bins ``c*_L`` and message sets ``M_l = g_l^{-1}(c_l*)`` (sorted)."""

    bins: tuple
    bin_bits: tuple
    c_star: tuple
    messages: tuple
    epsilon: float

    @property
    def num_messages(self) -> tuple:
        return tuple(len(m) for m in self.messages)

    def encode(self, user: int, message: int) -> int:
        """``e_l(m)``: the ``m``-th element of ``g_l^{-1}(c_l*)``."""
        return int(self.messages[user][message])


def qualifying_bins(bins: np.ndarray, num_bins: int, epsilon: float) -> np.ndarray:
    sizes = np.bincount(bins, minlength=num_bins)
    return np.flatnonzero((sizes >= epsilon * bins.size / num_bins) & (sizes > 0))


def extract_mac_code(bins: Sequence[np.ndarray], bin_bits: Sequence[int], epsilon: float,
                     error_fn: Callable[[tuple], float] | None = None) -> MacCode:
    """Select ``c*_L`` among qualifying bins and build the bijective encoders.

    With ``error_fn`` the combination with the smallest returned error wins
    (first in lexicographic order on ties); otherwise the lexicographically
    first qualifying combination is used.
    """
    if not 0 < epsilon <= 1:
        raise DomainError("epsilon must lie in (0, 1]")
    choices = []
    for l, (g, b) in enumerate(zip(bins, bin_bits)):
        q = qualifying_bins(np.asarray(g), 1 << b, epsilon)
        if q.size == 0:
            raise DomainError(f"construction failure: no qualifying bin for user {l}")
        choices.append(q)

    def code_for(c):
        msgs = tuple(np.flatnonzero(np.asarray(g) == cl) for g, cl in zip(bins, c))
        return MacCode(tuple(np.asarray(g) for g in bins), tuple(bin_bits), tuple(int(x) for x in c), msgs, epsilon)

    combos = list(itertools.product(*choices))
    if error_fn is None:
        return code_for(combos[0])
    errors = [error_fn(code_for(c)) for c in combos]
    return code_for(combos[int(np.argmin(errors))])


# --------------------------------------------------------------------------------------
# Step 3: simulation
# --------------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SimCode:
    n: int
    hashes: tuple
    inversions: tuple
    mac: MacCode
    hash_bits: tuple
    hash_resamples: tuple
    decoder: str = "pgm"

    @property
    def rates(self) -> tuple:
        return tuple(math.log2(m) / self.n for m in self.mac.num_messages)


def _message_table(code: SimCode, joint: Sequence[tuple]) -> np.ndarray:
    """``P(x_L^n | m_L)`` for the listed joint messages, shape ``(batch, X_1^n, ..., X_L^n)``."""
    out = []
    for m in joint:
        t = np.ones(())
        for l, ml in enumerate(m):
            t = np.multiply.outer(t, code.inversions[l].table[code.mac.encode(l, ml)])
        out.append(t)
    return np.stack(out)


def _contract(p: np.ndarray, sizes: Sequence[int], n: int, letter_states: np.ndarray) -> np.ndarray:
    """``sum_x P[b, x] (x)_t rho[x_t]`` by sequential contraction over time steps."""
    batch = p.shape[0]
    L = len(sizes)
    # axes per user are n symbols (big-endian); regroup to time-major joint symbols
    t = p.reshape((batch,) + tuple(s for s in sizes for _ in range(n)))
    perm = [0] + [1 + l * n + step for step in range(n) for l in range(L)]
    z = int(np.prod(sizes))
    t = t.transpose(perm).reshape((batch,) + (z,) * n)
    rho = letter_states.reshape(z, letter_states.shape[-1], letter_states.shape[-1])
    d = rho.shape[-1]
    acc = t.reshape(batch, z, -1)  # (batch, z_1, rest)
    acc = np.einsum("bzr,zij->brij", acc, rho)  # (batch, rest, d, d)
    dim = d
    for _ in range(1, n):
        rest = acc.shape[1] // z
        acc = acc.reshape(batch, z, rest, dim, dim)
        acc = np.einsum("bzrIJ,zij->brIiJj", acc, rho).reshape(batch, rest, dim * d, dim * d)
        dim *= d
    return acc[:, 0]


@dataclass(frozen=True, eq=False)
class SimReport:
    n: int
    mode: str
    errors: np.ndarray  # per evaluated joint message
    leakages: np.ndarray
    messages: np.ndarray  # indices (into the joint message list) that were evaluated
    num_messages: tuple
    rates: tuple
    retained: np.ndarray
    alpha: float
    seeds: dict = field(default_factory=dict)
    hash_resamples: tuple = ()
    c_star: tuple = ()
    region_bounds: tuple = ()

    @property
    def max_error(self) -> float:
        return float(self.errors.max())

    @property
    def avg_error(self) -> float:
        return float(self.errors.mean())

    @property
    def leakage(self) -> float:
        return float(self.leakages.max())

    @property
    def avg_leakage(self) -> float:
        return float(self.leakages.mean())

    @property
    def retained_fraction(self) -> float:
        return float(self.retained.mean())

    @property
    def expurgated_max_error(self) -> float:
        return float(self.errors[self.retained].max())

    @property
    def expurgated_leakage(self) -> float:
        return float(self.leakages[self.retained].max())

    def as_dict(self) -> dict:
        return {"n": self.n, "mode": self.mode, "num_messages": list(self.num_messages),
                "rates": list(self.rates), "max_error": self.max_error, "avg_error": self.avg_error,
                "leakage": self.leakage, "avg_leakage": self.avg_leakage, "alpha": self.alpha,
                "retained_fraction": self.retained_fraction,
                "expurgated_max_error": self.expurgated_max_error,
                "expurgated_leakage": self.expurgated_leakage, "seeds": dict(self.seeds),
                "hash_resamples": list(self.hash_resamples), "c_star": list(self.c_star),
                "region_bounds": list(self.region_bounds)}

    def per_message_csv(self) -> str:
        lines = ["message,error,leakage,retained"]
        for m, e, k, r in zip(self.messages, self.errors, self.leakages, self.retained):
            lines.append(f"{int(m)},{e!r},{k!r},{int(bool(r))}")
        return "\n".join(lines) + "\n"


def expurgate(errors, leakages, alpha: float) -> np.ndarray:
    """Keep messages with ``P(m) <= avg P / alpha`` and ``S(m) <= avg S / alpha``.

    By Markov's inequality each test removes fewer than ``alpha`` of the
    messages, so at least ``1 - 2 alpha`` are kept.
    """
    if not 0 < alpha <= 1:
        raise DomainError("alpha must lie in (0, 1]")
    e = np.asarray(errors, dtype=np.float64)
    s = np.asarray(leakages, dtype=np.float64)
    keep = (e <= e.mean() / alpha) & (s <= s.mean() / alpha)
    assert keep.mean() >= 1 - 2 * alpha - 1e-12
    return keep


def _seed_int(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts]).generate_state(1, np.uint64)[0] >> 1)


def build_code(ch: CqMacWiretapChannel, pmfs: Sequence, rates: Sequence[tuple], n: int, seed: int = 0,
               epsilon: float = 0.25, error_fn=None) -> SimCode:
    """Hashes (resampled until every label has a preimage), inversion tables, bins and message sets.

    ``rates[l] = (R_U, R_DC)``; the hash outputs ``round(n R_U)`` bits and the
    bin map ``round(n R_DC)`` bits.
    """
    if len(pmfs) != ch.num_users or len(rates) != ch.num_users:
        raise ShapeError("one pmf and one rate pair per user")
    hashes, inversions, hash_bits, resamples, bins, bin_bits = [], [], [], [], [], []
    for l, (p, (r_u, r_dc)) in enumerate(zip(pmfs, rates)):
        p = np.asarray(p, dtype=np.float64)
        if p.size != ch.alphabet_sizes[l]:
            raise ShapeError(f"pmf of user {l} does not match the alphabet")
        nbits = sequence_bits(p.size, n)
        k = int(round(n * r_u))
        c = int(round(n * r_dc))
        if not 0 <= c <= k <= nbits or nbits > 62:
            raise DomainError(f"rates of user {l} give hash/bin lengths {k}/{c} outside [0, {nbits}]")
        for attempt in range(MAX_HASH_ATTEMPTS):
            f = hashlemma.sample_family("toeplitz", nbits, k, _seed_int(seed, l, attempt))
            inv = build_inversion_channel(p, f, n)
            if inv.ok:
                break
        else:
            raise DomainError(f"construction failure: hash of user {l} leaves empty preimages")
        hashes.append(f)
        inversions.append(inv)
        hash_bits.append(k)
        resamples.append(attempt)
        bins.append(random_linear_bins(k, c, _config.make_rng(_seed_int(seed, l, 1 << 20))))
        bin_bits.append(c)
    base = SimCode(n, tuple(hashes), tuple(inversions), None, tuple(hash_bits), tuple(resamples))

    def wrapped(mac):
        return error_fn(_replace_mac(base, mac)) if error_fn is not None else 0.0

    mac = extract_mac_code(bins, bin_bits, epsilon, wrapped if error_fn is not None else None)
    return _replace_mac(base, mac)


def _replace_mac(code: SimCode, mac: MacCode) -> SimCode:
    return SimCode(code.n, code.hashes, code.inversions, mac, code.hash_bits, code.hash_resamples, code.decoder)


def _joint_messages(code: SimCode) -> list[tuple]:
    return list(itertools.product(*(range(k) for k in code.mac.num_messages)))


def _evaluate(ch: CqMacWiretapChannel, code: SimCode, which: np.ndarray | None, batch: int = 64):
    """Per-message error and leakage for the joint messages ``which`` (all if ``None``)."""
    joint = _joint_messages(code)
    sizes = ch.alphabet_sizes
    n = code.n
    bob, eve = ch.bob_states(), ch.eve_states()
    num = len(joint)
    # message averages by linearity
    avg_p = np.mean(_message_table(code, joint), axis=0)[None]
    avg_b = _contract(avg_p, sizes, n, bob)[0]
    avg_e = _contract(avg_p, sizes, n, eve)[0]
    root, comp = _pgm_root(avg_b / 1.0)
    idx = np.arange(num) if which is None else np.asarray(which)
    errors = np.empty(idx.size)
    leaks = np.empty(idx.size)
    for start in range(0, idx.size, batch):
        sel = idx[start:start + batch]
        p = _message_table(code, [joint[i] for i in sel])
        wb = _contract(p, sizes, n, bob)
        we = _contract(p, sizes, n, eve)
        povm = root @ (wb / num) @ root
        povm[sel == 0] += comp
        errors[start:start + sel.size] = 1 - np.einsum("nij,nji->n", povm, wb).real
        for j in range(sel.size):
            leaks[start + j] = qstate.trace_norm(we[j] - avg_e)
    return idx, np.clip(errors, 0.0, 1.0), np.clip(leaks, 0.0, 2.0)


def simulate(ch: CqMacWiretapChannel, pmfs: Sequence, rates: Sequence[tuple], n: int, seed: int = 0,
             trials: int | None = None, epsilon: float = 0.25, alpha: float = 0.1,
             select_bins: bool = True) -> SimReport:
    """Build a code and measure per-message error and leakage.

    Exact mode (every joint message) is used when
    ``(prod |X_l|)^n d_B^n <= 2**16`` and ``trials`` is ``None``; otherwise
    ``trials`` joint messages are drawn (seeded) and evaluated exactly.
    """
    sizes = ch.alphabet_sizes
    d_b = ch.dims[0]
    if d_b**n > PGM_CAP:
        raise CapacityError(f"Bob's dimension {d_b}**{n} exceeds the decoder cap {PGM_CAP}")
    exact = trials is None and int(np.prod(sizes)) ** n * d_b**n <= EXACT_CAP

    def avg_error(code):
        _, e, _ = _evaluate(ch, code, None)
        return float(e.mean())

    code = build_code(ch, pmfs, rates, n, seed, epsilon, avg_error if select_bins and exact else None)
    num = int(np.prod(code.mac.num_messages))
    if exact:
        which = None
        mode = "exact"
    else:
        rng = _config.make_rng(_seed_int(seed, 1 << 21))
        count = min(num, trials or 256)
        which = np.sort(rng.choice(num, size=count, replace=False))
        mode = "monte_carlo"
    idx, errors, leaks = _evaluate(ch, code, which)
    keep = expurgate(errors, leaks, alpha)
    from . import regions

    bounds = tuple(float(v) for v in regions.private_bound_values(ch.cq_state(pmfs)))
    return SimReport(n, mode, errors, leaks, idx, code.mac.num_messages, code.rates, keep, alpha,
                     {"seed": int(seed)}, code.hash_resamples, code.mac.c_star, bounds)


@dataclass(frozen=True)
class TrendReport:
    """Code-ensemble averages of the max error and max leakage at each blocklength."""

    ns: tuple
    seeds: tuple
    mean_error: tuple
    mean_leakage: tuple
    min_retained: float

    @property
    def nonincreasing(self) -> bool:
        e, s = self.mean_error, self.mean_leakage
        return all(e[i + 1] <= e[i] + 1e-12 and s[i + 1] <= s[i] + 1e-12 for i in range(len(e) - 1))

    def as_dict(self) -> dict:
        return {"n": list(self.ns), "seeds": [self.seeds[0], self.seeds[-1]], "mean_max_error": list(self.mean_error),
                "mean_max_leakage": list(self.mean_leakage), "min_retained_fraction": self.min_retained,
                "nonincreasing": self.nonincreasing}


def trend(ch: CqMacWiretapChannel, pmfs: Sequence, rates: Sequence[tuple], ns=(2, 6), seeds=range(30),
          epsilon: float = 0.25, alpha: float = 0.1) -> TrendReport:
    """Average the per-code max error and max leakage over independently seeded codes."""
    seeds = tuple(int(s) for s in seeds)
    errs, leaks, kept = [], [], []
    for n in ns:
        reps = [simulate(ch, pmfs, rates, n, seed=s, epsilon=epsilon, alpha=alpha) for s in seeds]
        errs.append(float(np.mean([r.max_error for r in reps])))
        leaks.append(float(np.mean([r.leakage for r in reps])))
        kept.extend(r.retained_fraction for r in reps)
    return TrendReport(tuple(ns), seeds, tuple(errs), tuple(leaks), float(min(kept)))
