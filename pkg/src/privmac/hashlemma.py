"""Two-universal hash families and exact checks of the distributed leftover hash bound.

Bit conventions
---------------
An input symbol ``x`` in ``{0, ..., 2**n - 1}`` is the bit string whose ``j``-th
entry is bit ``n - 1 - j`` of ``x`` (big-endian), and outputs are encoded the
same way.  A member is stored as ``r`` row masks plus an ``r``-bit offset:
output bit ``i`` is the parity of ``row_i & x`` and the offset is XORed on top.

The hashed state of ``L`` users is never materialized in full.  For a joint
member ``f_L`` only the ``2**r_L`` operators
``rho_E^{f_L, a_L} = sum_{x_L in f_L^{-1}(a_L)} rho_E^{x_L}`` are formed, in
chunks of members, by :func:`privmac._ext.accumulate_blocks`.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _config, _ext, entropy, qstate
from .errors import CapacityError, DomainError, ShapeError, UsageError
from .qstate import CqState

KINDS = ("toeplitz", "linear_full")
EXACT_FAMILY_CAP = 2**20
_CHUNK_ROWS = 4096


# --------------------------------------------------------------------------------------
# Hash families
# --------------------------------------------------------------------------------------


@dataclass(frozen=True)
class HashFamily:
    """Family ``{0,1}^input_bits -> {0,1}^output_bits``.

    ``toeplitz``: ``x -> T x + b`` with ``T`` an ``r x n`` Toeplitz matrix and
    ``b`` an offset; ``2**(n + r - 1) * 2**r`` members.
    ``linear_full``: ``x -> M x`` over all ``r x n`` binary matrices; ``2**(r n)`` members.
    With ``r = 0`` either family has the single constant member.
    """

    kind: str
    input_bits: int
    output_bits: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown hash family kind {self.kind!r}; expected one of {KINDS}")
        if self.input_bits < 0 or self.output_bits < 0:
            raise DomainError("bit lengths must be nonnegative")
        if self.output_bits > self.input_bits:
            raise DomainError("output_bits must not exceed input_bits")
        if self.input_bits > 62:
            raise CapacityError("input_bits above 62 are not supported")

    @property
    def has_offset(self) -> bool:
        return self.kind == "toeplitz" and self.output_bits > 0

    @property
    def log2_size(self) -> int:
        n, r = self.input_bits, self.output_bits
        if r == 0:
            return 0
        if self.kind == "toeplitz":
            return (n + r - 1) + r
        return r * n

    @property
    def size(self) -> int:
        return 1 << self.log2_size

    @property
    def linear_size(self) -> int:
        """Number of members up to the offset."""
        return self.size >> (self.output_bits if self.has_offset else 0)

    def _check_enumerable(self, count: int) -> None:
        if count > EXACT_FAMILY_CAP:
            raise CapacityError(f"family with {count} members exceeds the enumeration cap {EXACT_FAMILY_CAP}")

    def _rows_from_diagonals(self, t_bits: np.ndarray) -> np.ndarray:
        """Toeplitz row masks from diagonal bits ``t[k]``, ``T[i, j] = t[i - j + n - 1]``."""
        n, r = self.input_bits, self.output_bits
        rows = np.zeros((t_bits.shape[0], r), dtype=np.uint64)
        for i in range(r):
            for j in range(n):
                rows[:, i] |= t_bits[:, i - j + n - 1].astype(np.uint64) << np.uint64(n - 1 - j)
        return rows

    def members(self, indices) -> tuple[np.ndarray, np.ndarray]:
        """Row masks ``(k, r)`` and offsets ``(k,)`` of the members with the given indices.

        For ``toeplitz`` the low ``r`` bits of an index are the offset and the
        remaining bits the diagonal; for ``linear_full`` bits ``i n .. i n + n - 1``
        are row ``i``.
        """
        if self.log2_size > 63:
            raise CapacityError("member indices are limited to 63 bits; use sample() for larger families")
        idx = np.asarray(indices, dtype=np.uint64).reshape(-1)
        n, r = self.input_bits, self.output_bits
        if r == 0:
            return np.zeros((idx.size, 0), dtype=np.uint64), np.zeros(idx.size, dtype=np.uint64)
        if self.kind == "toeplitz":
            offsets = idx & np.uint64((1 << r) - 1)
            t = idx >> np.uint64(r)
            t_bits = np.stack([(t >> np.uint64(k)) & np.uint64(1) for k in range(n + r - 1)], axis=1)
            return self._rows_from_diagonals(t_bits), offsets
        mask = np.uint64((1 << n) - 1)
        rows = np.stack([(idx >> np.uint64(i * n)) & mask for i in range(r)], axis=1)
        return rows, np.zeros(idx.size, dtype=np.uint64)

    def enumerate(self, with_offsets: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """Every member, or one representative per offset class when ``with_offsets`` is false."""
        if with_offsets or not self.has_offset:
            self._check_enumerable(self.size)
            return self.members(np.arange(self.size, dtype=np.uint64))
        self._check_enumerable(self.linear_size)
        idx = np.arange(self.linear_size, dtype=np.uint64) << np.uint64(self.output_bits)
        return self.members(idx)

    def sample(self, rng: np.random.Generator, count: int = 1) -> tuple[np.ndarray, np.ndarray]:
        """``count`` independent uniformly random members."""
        n, r = self.input_bits, self.output_bits
        if r == 0:
            return np.zeros((count, 0), dtype=np.uint64), np.zeros(count, dtype=np.uint64)
        if self.kind == "toeplitz":
            t_bits = rng.integers(0, 2, size=(count, n + r - 1), dtype=np.uint8)
            offsets = rng.integers(0, 1 << r, size=count, dtype=np.uint64)
            return self._rows_from_diagonals(t_bits), offsets
        rows = rng.integers(0, 1 << n, size=(count, r), dtype=np.uint64)
        return rows, np.zeros(count, dtype=np.uint64)

    def tables(self, rows, offsets) -> np.ndarray:
        """Output labels of every input, shape ``(k, 2**input_bits)``."""
        return _ext.hash_tables(rows, offsets, self.input_bits)


@dataclass(frozen=True)
class HashMember:
    """One concrete function of a family."""

    family: HashFamily
    index: int
    rows: np.ndarray = field(repr=False)
    offset: int = 0

    def __call__(self, x):
        x = np.asarray(x, dtype=np.uint64)
        r = self.family.output_bits
        out = np.zeros(x.shape, dtype=np.uint64)
        for i in range(r):
            bit = np.bitwise_count(self.rows[i] & x).astype(np.uint64) & np.uint64(1)
            out |= bit << np.uint64(r - 1 - i)
        out ^= np.uint64(self.offset)
        return out.astype(np.int64) if out.ndim else int(out)

    def table(self) -> np.ndarray:
        return self.family.tables(self.rows[None], np.array([self.offset], dtype=np.uint64))[0]


def member(family: HashFamily, index: int) -> HashMember:
    rows, offsets = family.members([index])
    return HashMember(family, int(index), rows[0], int(offsets[0]))


def sample_family(kind: str, input_bits: int, output_bits: int, seed: int) -> HashMember:
    """Draw one member uniformly at random from the named family.

    Members of families with more than ``2**62`` elements carry ``index = -1``.
    """
    fam = HashFamily(kind, input_bits, output_bits)
    rng = _config.make_rng(seed)
    if fam.log2_size > 62:
        rows, offsets = fam.sample(rng, 1)
        return HashMember(fam, -1, rows[0], int(offsets[0]))
    idx = int(rng.integers(0, fam.size)) if fam.size > 1 else 0
    return member(fam, idx)


def enumerate_family(family: HashFamily) -> list[HashMember]:
    rows, offsets = family.enumerate()
    return [HashMember(family, i, rows[i], int(offsets[i])) for i in range(len(offsets))]


def collision_probability(family: HashFamily, x: int, y: int) -> float:
    """``Pr_F[F(x) = F(y)]`` over the full family."""
    t = family.tables(*family.enumerate())
    return float(np.mean(t[:, x] == t[:, y]))


def max_collision_probability(family: HashFamily) -> float:
    """Worst pair collision probability over all distinct inputs (exhaustive)."""
    t = family.tables(*family.enumerate())
    nx = t.shape[1]
    worst = 0.0
    for x in range(nx):
        eq = (t[:, x:x + 1] == t[:, x + 1:]).mean(axis=0)
        if eq.size:
            worst = max(worst, float(eq.max()))
    return worst


# --------------------------------------------------------------------------------------
# Hashed states
# --------------------------------------------------------------------------------------


def pad_to_bits(cq: CqState) -> CqState:
    """Embed every alphabet into the next power of two with zero-probability symbols."""
    sizes = cq.alphabet_sizes
    target = tuple(1 << max(0, (s - 1).bit_length()) for s in sizes)
    if target == sizes:
        return cq
    d = cq.qdim
    w = np.zeros(target)
    s = np.broadcast_to(np.eye(d, dtype=np.complex128) / d, target + (d, d)).copy()
    sl = tuple(slice(0, a) for a in sizes)
    w[sl] = cq.weights
    s[sl] = cq.cond_states
    return CqState(w, s, cq.qdims, cq.normalized)


@dataclass(frozen=True, eq=False)
class HashedJointState:
    """The state ``rho_{F_L(X_L) E F_L}`` of a cq state hashed by independent families.

    ``mode`` is ``"exact"`` (uniform over the full product family) or
    ``"monte_carlo"`` (uniform over ``trials`` sampled joint members).
    ``tables[l]`` holds the label table of every member of user ``l`` in use;
    exact mode forms all combinations, Monte Carlo pairs them up row by row.
    """

    rho: CqState
    families: tuple
    tables: tuple
    mode: str
    seed: int | None = None

    @property
    def num_users(self) -> int:
        return len(self.families)

    @property
    def output_bits(self) -> tuple:
        return tuple(f.output_bits for f in self.families)

    @property
    def num_blocks(self) -> int:
        return 1 << sum(self.output_bits)

    @property
    def num_members(self) -> int:
        if self.mode == "exact":
            return int(np.prod([len(t) for t in self.tables]))
        return len(self.tables[0])

    def member_labels(self, start: int, stop: int) -> np.ndarray:
        """Joint label of every ``x_L`` (C-order flattened) for members ``start..stop-1``."""
        count = stop - start
        L = self.num_users
        if self.mode == "exact":
            sizes = [len(t) for t in self.tables]
            sel = np.unravel_index(np.arange(start, stop), sizes)
        else:
            sel = [np.arange(start, stop)] * L
        labels = np.zeros((count,) + self.rho.alphabet_sizes, dtype=np.int64)
        for l in range(L):
            shift = sum(self.output_bits[l + 1:])
            t = self.tables[l][sel[l]] << shift
            shape = [count] + [1] * L
            shape[l + 1] = t.shape[1]
            labels += t.reshape(shape)
        return labels.reshape(count, -1)

    def member_blocks(self, start: int, stop: int) -> np.ndarray:
        """``rho_E^{f_L, a_L}`` for members ``start..stop-1``; shape ``(C, 2**r_L, d, d)``."""
        d = self.rho.qdim
        states = self.rho.subnormalized().reshape(-1, d * d)
        blocks = _ext.accumulate_blocks(self.member_labels(start, stop), states, self.num_blocks)
        return blocks.reshape(stop - start, self.num_blocks, d, d)

    def to_cq_state(self) -> CqState:
        """Materialize the hashed state with registers ``(A_L, F_L)`` (small instances only)."""
        nm = self.num_members
        d = self.rho.qdim
        blocks = self.member_blocks(0, nm) / nm  # (F, A, d, d)
        weights = np.trace(blocks, axis1=2, axis2=3).real.T  # (A, F)
        cond = np.empty((self.num_blocks, nm, d, d), dtype=np.complex128)
        for a in range(self.num_blocks):
            for f in range(nm):
                w = weights[a, f]
                cond[a, f] = blocks[f, a] / w if w > 1e-15 else np.eye(d) / d
        weights = np.where(weights > 1e-15, weights, 0.0)
        return CqState(weights, cond, self.rho.qdims, normalized=False)


def build_hashed_state(rho: CqState, families: Sequence[HashFamily], mode: str = "exact",
                       seed: int | None = None, trials: int = 1000,
                       reduce_offsets: bool = True) -> HashedJointState:
    """Hash every register of ``rho`` with its own family.

    Parameters
    ----------
    mode : ``"exact"`` averages over the full product family; ``"monte_carlo"``
        averages over ``trials`` joint members drawn from ``seed``.
    reduce_offsets : in exact mode keep one member per offset class.  An offset
        only permutes the output labels, which leaves the trace distance of every
        member unchanged, so the average is the same and the work drops by
        ``2**r_l`` per user.
    """
    families = tuple(families)
    if len(families) != rho.num_registers:
        raise ShapeError(f"{len(families)} families for {rho.num_registers} registers")
    for f, size in zip(families, rho.alphabet_sizes):
        if size != 1 << f.input_bits:
            raise ShapeError(f"alphabet of size {size} does not match {f.input_bits} input bits")
    if mode == "exact":
        total = math.prod(f.size for f in families)
        if total > EXACT_FAMILY_CAP:
            raise CapacityError(f"product family has {total} members, above the exact-mode cap {EXACT_FAMILY_CAP}")
        tables = tuple(f.tables(*f.enumerate(with_offsets=not reduce_offsets)) for f in families)
    elif mode == "monte_carlo":
        if seed is None:
            raise UsageError("monte_carlo mode needs a seed")
        if trials < 2:
            raise UsageError("monte_carlo mode needs at least 2 trials")
        tables = tuple(f.tables(*f.sample(_config.spawn_rng(seed, l), trials)) for l, f in enumerate(families))
    else:
        raise UsageError(f"unknown mode {mode!r}")
    for t in tables:
        t.setflags(write=False)
    return HashedJointState(rho, families, tables, mode, seed)


def _member_distances(hs: HashedJointState, start: int, stop: int) -> np.ndarray:
    blocks = hs.member_blocks(start, stop)
    target = hs.rho.quantum_marginal() / hs.num_blocks
    diff = blocks - target
    if diff.shape[-1] == 1:
        return np.abs(diff[..., 0, 0].real).sum(axis=1)
    lam = np.linalg.eigvalsh(diff)
    return np.abs(lam).sum(axis=(1, 2))


def member_distances(hs: HashedJointState, workers: int | None = None) -> np.ndarray:
    """``sum_a || rho_E^{f,a} - rho_E / |A| ||_1`` for every member, in member order.

    Chunks are fixed in size, so the result does not depend on ``workers``.
    """
    nm = hs.num_members
    per_row = hs.num_blocks * hs.rho.qdim**2 + int(np.prod(hs.rho.alphabet_sizes))
    step = max(1, min(nm, (_CHUNK_ROWS * 64) // max(per_row, 1)))
    bounds = [(s, min(s + step, nm)) for s in range(0, nm, step)]
    if workers and workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _member_distances(hs, *b), bounds))
    else:
        parts = [_member_distances(hs, *b) for b in bounds]
    return np.concatenate(parts)


@dataclass(frozen=True)
class LhsEstimate:
    value: float
    standard_error: float
    members: int
    mode: str


def lhs_statistics(hs: HashedJointState, workers: int | None = None) -> LhsEstimate:
    d = member_distances(hs, workers)
    se = 0.0 if hs.mode == "exact" else float(d.std(ddof=1) / np.sqrt(len(d)))
    return LhsEstimate(float(math.fsum(d) / len(d)), se, len(d), hs.mode)


def lhs_distance(hs: HashedJointState, workers: int | None = None) -> float:
    """``|| rho_{F(X) E F} - rho_U (x) rho_{E F} ||_1``, averaged blockwise over members."""
    return lhs_statistics(hs, workers).value


# --------------------------------------------------------------------------------------
# Bounds
# --------------------------------------------------------------------------------------


def subsets(L: int):
    """Nonempty subsets of ``range(L)`` as bitmasks."""
    return range(1, 1 << L)


def members_of(mask: int, L: int) -> list[int]:
    return [l for l in range(L) if (mask >> l) & 1]


def hmin_table(rho: CqState, sigma=None) -> dict[int, float]:
    """``H_min(X_S E | sigma)`` for every nonempty ``S``."""
    sigma = entropy.default_sigma(rho) if sigma is None else sigma
    L = rho.num_registers
    return {s: entropy.hmin_cq(rho.marginal(members_of(s, L)), sigma) for s in subsets(L)}


def rhs_bound(rho: CqState, r: Sequence[int], sigma=None) -> float:
    """``sqrt( sum_{S != {}} 2^{r_S - H_min(X_S E | sigma)} )``.

    ``sigma`` defaults to the fully mixed state on the support of ``rho_E``.
    """
    L = rho.num_registers
    if len(r) != L:
        raise ShapeError(f"{len(r)} output lengths for {L} users")
    table = hmin_table(rho, sigma)
    terms = [2.0 ** (sum(r[l] for l in members_of(s, L)) - table[s]) for s in subsets(L)]
    return float(np.sqrt(math.fsum(terms)))


def product_deltas(alphabet_sizes: Sequence[int], d_e: int, n: int, epsilon: float) -> tuple[dict, float]:
    """``delta_S(n)`` for every nonempty ``S`` and ``delta(n)``."""
    if not 0 < epsilon < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    if n < 1:
        raise DomainError("n must be >= 1")
    L = len(alphabet_sizes)
    log_inv = np.log2(1 / epsilon)
    root_s = np.sqrt((2 / n) * (L + 1 + log_inv))
    root = np.sqrt((2 / n) * (1 + log_inv))
    deltas = {}
    for s in subsets(L):
        xs = math.prod(alphabet_sizes[l] for l in members_of(s, L))
        deltas[s] = float(np.log2(xs * d_e + 3) * root_s)
    return deltas, float(np.log2(d_e + 3) * root)


def product_bound(rho: CqState, n: int, r: Sequence[int], epsilon: float) -> float:
    """``2 eps + sqrt( sum_S 2^{r_S - n H(X_S|E) + n (delta_S(n) + delta(n))} )``.

    ``rho`` is the single-copy state and ``r`` the output lengths of hashes
    acting on ``n``-letter blocks.
    """
    L = rho.num_registers
    if len(r) != L:
        raise ShapeError(f"{len(r)} output lengths for {L} users")
    deltas, delta = product_deltas(rho.alphabet_sizes, rho.qdim, n, epsilon)
    terms = []
    for s in subsets(L):
        h = entropy.cq_conditional_entropy(rho, members_of(s, L))
        rs = sum(r[l] for l in members_of(s, L))
        terms.append(2.0 ** (rs - n * h + n * (deltas[s] + delta)))
    return float(2 * epsilon + np.sqrt(math.fsum(terms)))


# --------------------------------------------------------------------------------------
# Verification suites
# --------------------------------------------------------------------------------------


@dataclass(frozen=True)
class VerificationRecord:
    seed: int
    L: int
    dims: tuple
    r: tuple
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def passed(self, tol: float = 1e-9) -> bool:
        return self.lhs <= self.rhs + tol

    def as_dict(self, tol: float = 1e-9) -> dict:
        return {"seed": self.seed, "L": self.L, "dims": list(self.dims), "r": list(self.r),
                "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin, "pass": self.passed(tol)}


def random_instance(seed: int, max_users: int = 3, max_bits: int = 2, d_choices=(1, 2, 4), max_r: int = 2):
    """Seeded random cq state with power-of-two alphabets and random output lengths."""
    rng = _config.make_rng(seed)
    L = int(rng.integers(1, max_users + 1))
    bits = [int(rng.integers(1, max_bits + 1)) for _ in range(L)]
    d_e = int(rng.choice(d_choices))
    r = tuple(int(rng.integers(0, min(max_r, b) + 1)) for b in bits)
    sizes = tuple(1 << b for b in bits)
    # sparse Dirichlet weights make some instances nearly deterministic, others near uniform
    alpha = float(rng.choice([0.2, 1.0, 5.0]))
    w = rng.dirichlet(np.full(math.prod(sizes), alpha)).reshape(sizes)
    n = math.prod(sizes)
    states = np.stack([qstate.random_density(d_e, rng, int(rng.integers(1, d_e + 1))) for _ in range(n)])
    rho = CqState(w, states.reshape(sizes + (d_e, d_e)))
    return rho, r


def verify_instance(seed: int, rho: CqState, r: Sequence[int], kind: str = "toeplitz",
                    sigma=None, workers: int | None = None) -> VerificationRecord:
    families = [HashFamily(kind, int(a).bit_length() - 1, rr) for a, rr in zip(rho.alphabet_sizes, r)]
    hs = build_hashed_state(rho, families, "exact")
    lhs = lhs_distance(hs, workers)
    rhs = rhs_bound(rho, r, sigma)
    return VerificationRecord(seed, rho.num_registers, tuple(rho.alphabet_sizes) + (rho.qdim,), tuple(r), lhs, rhs)


def soundness_suite(count: int = 200, seed: int = 0, kind: str = "toeplitz",
                    workers: int | None = None) -> list[VerificationRecord]:
    """Exact LHS against the min-entropy bound on ``count`` seeded random instances."""
    records = []
    for i in range(count):
        inst_seed = int(_config.spawn_rng(seed, i).integers(0, 2**63))
        rho, r = random_instance(inst_seed)
        records.append(verify_instance(inst_seed, rho, r, kind, workers=workers))
    return records


def product_suite(count: int = 20, ns: Sequence[int] = (1, 2), epsilon: float = 0.25, seed: int = 0,
                  kind: str = "toeplitz") -> list[VerificationRecord]:
    """Exact LHS on ``rho^{(x) n}`` against the product-state bound."""
    records = []
    for i in range(count):
        inst_seed = int(_config.spawn_rng(seed, i).integers(0, 2**63))
        rng = _config.make_rng(inst_seed)
        L = int(rng.integers(1, 3))
        sizes = (2,) * L
        d_e = int(rng.choice([1, 2]))
        rho = qstate.random_cq_state(sizes, d_e, rng, product=True)
        for n in ns:
            r = tuple(int(rng.integers(0, n + 1)) for _ in range(L))
            big = rho.tensor_power(n)
            families = [HashFamily(kind, n, rr) for rr in r]
            lhs = lhs_distance(build_hashed_state(big, families, "exact"))
            rhs = product_bound(rho, n, r, epsilon)
            records.append(VerificationRecord(inst_seed, L, sizes + (d_e,), r, lhs, rhs))
    return records
