import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from privmac import entropy, hashlemma as hl, qstate as q
from privmac.errors import CapacityError, DomainError, ShapeError


def bits_of(x, n):
    return np.array([(x >> (n - 1 - j)) & 1 for j in range(n)])


def int_of(bits):
    return int("".join(str(int(b)) for b in bits) or "0", 2)


@pytest.mark.parametrize("kind,n,r", [("toeplitz", 2, 1), ("toeplitz", 3, 2), ("toeplitz", 4, 3),
                                      ("linear_full", 2, 2), ("linear_full", 3, 1), ("toeplitz", 4, 4)])
def test_two_universality_exhaustive(kind, n, r):
    fam = hl.HashFamily(kind, n, r)
    assert hl.max_collision_probability(fam) <= 2.0**-r + 1e-12


def test_family_sizes():
    assert hl.HashFamily("toeplitz", 2, 1).size == 2 ** (2 + 1 - 1) * 2
    assert hl.HashFamily("linear_full", 2, 2).size == 16
    assert hl.HashFamily("toeplitz", 3, 0).size == 1
    assert len(hl.enumerate_family(hl.HashFamily("toeplitz", 2, 1))) == 8


def test_toeplitz_members_match_matrix_definition():
    n, r = 3, 2
    fam = hl.HashFamily("toeplitz", n, r)
    for m in hl.enumerate_family(fam):
        t = m.index >> r
        diag = [(t >> k) & 1 for k in range(n + r - 1)]
        mat = np.array([[diag[i - j + n - 1] for j in range(n)] for i in range(r)])
        b = bits_of(m.offset, r)
        for x in range(2**n):
            expected = int_of((mat @ bits_of(x, n) + b) % 2)
            assert m(x) == expected


def test_linear_full_contains_identity():
    fam = hl.HashFamily("linear_full", 2, 2)
    tables = [tuple(m.table()) for m in hl.enumerate_family(fam)]
    assert (0, 1, 2, 3) in tables


def test_collision_example():
    assert hl.collision_probability(hl.HashFamily("toeplitz", 2, 1), 0b00, 0b01) <= 0.5


def test_family_validation():
    with pytest.raises(DomainError):
        hl.HashFamily("toeplitz", 2, 3)
    with pytest.raises(CapacityError):
        hl.HashFamily("linear_full", 8, 4).enumerate()


def test_sample_family_is_seeded_and_in_family():
    a = hl.sample_family("toeplitz", 4, 2, seed=11)
    b = hl.sample_family("toeplitz", 4, 2, seed=11)
    assert a.index == b.index
    assert np.array_equal(a.table(), b.table())
    big = hl.sample_family("toeplitz", 40, 30, seed=3)
    assert big.index == -1
    assert 0 <= big(12345) < 2**30


def test_sampled_members_are_uniform_over_small_family(rng):
    fam = hl.HashFamily("toeplitz", 2, 1)
    all_tables = {tuple(t) for t in fam.tables(*fam.enumerate())}
    sampled = fam.tables(*fam.sample(rng, 4000))
    counts = {}
    for t in map(tuple, sampled):
        assert t in all_tables
        counts[t] = counts.get(t, 0) + 1
    # every table appears with frequency near its multiplicity / 8
    assert min(counts.values()) > 4000 / 8 * 0.7


def uniform_bit_trivial_e():
    return q.CqState([0.5, 0.5], np.ones((2, 1, 1)))


def test_identity_hash_relabels_state(rng):
    rho = q.random_cq_state((4,), 2, rng)
    fam = hl.HashFamily("linear_full", 2, 2)
    hs = hl.build_hashed_state(rho, [fam], "exact")
    labels = hs.member_labels(0, hs.num_members)
    ident = [i for i, row in enumerate(labels) if tuple(row) == (0, 1, 2, 3)]
    assert len(ident) == 1
    blocks = hs.member_blocks(ident[0], ident[0] + 1)[0]
    assert np.allclose(blocks, rho.subnormalized())


def test_uniform_bit_full_toeplitz_family():
    rho = uniform_bit_trivial_e()
    fam = hl.HashFamily("toeplitz", 1, 1)
    hs = hl.build_hashed_state(rho, [fam], "exact", reduce_offsets=False)
    assert hs.num_members == 4
    d = hl.member_distances(hs)
    # members x -> b (constant) leave A deterministic, x -> x + b make A uniform
    assert sorted(np.round(d, 12)) == [0.0, 0.0, 1.0, 1.0]
    assert hl.lhs_distance(hs) == pytest.approx(0.5)


def test_reduce_offsets_is_exact(rng):
    for _ in range(5):
        rho = q.random_cq_state((4, 2), 2, rng)
        fams = [hl.HashFamily("toeplitz", 2, 2), hl.HashFamily("toeplitz", 1, 1)]
        full = hl.lhs_distance(hl.build_hashed_state(rho, fams, "exact", reduce_offsets=False))
        reduced = hl.lhs_distance(hl.build_hashed_state(rho, fams, "exact"))
        assert full == pytest.approx(reduced, abs=1e-12)


def test_marginal_recovery_and_uniform_labels(rng):
    rho = q.random_cq_state((2, 2), 2, rng)
    fams = [hl.HashFamily("toeplitz", 1, 1)] * 2
    hs = hl.build_hashed_state(rho, fams, "exact", reduce_offsets=False)
    cq = hs.to_cq_state()
    assert np.allclose(cq.weights.sum(axis=0), 1 / hs.num_members)
    assert np.max(np.abs(cq.quantum_marginal() - rho.quantum_marginal())) < 1e-10


def monolithic_lhs(hs):
    cq = hs.to_cq_state()  # registers (A, F)
    na, nf = cq.alphabet_sizes
    d = cq.qdim
    sub = cq.subnormalized()
    rho_ef = sub.sum(axis=0)  # (F, d, d)
    ideal = np.broadcast_to(rho_ef / na, sub.shape)
    diff = np.zeros((na * nf * d, na * nf * d), dtype=complex)
    for a in range(na):
        for f in range(nf):
            k = (a * nf + f) * d
            diff[k:k + d, k:k + d] = sub[a, f] - ideal[a, f]
    return q.trace_norm(diff)


def test_lhs_matches_monolithic_trace_norm(rng):
    rho = q.random_cq_state((2, 2), 2, rng)
    fams = [hl.HashFamily("toeplitz", 1, 1), hl.HashFamily("linear_full", 1, 1)]
    hs = hl.build_hashed_state(rho, fams, "exact", reduce_offsets=False)
    lhs = hl.lhs_distance(hs)
    assert 0 <= lhs <= 2
    assert lhs == pytest.approx(monolithic_lhs(hs), abs=1e-10)


def test_lhs_zero_cases(rng):
    rho = q.random_cq_state((4, 2), 2, rng)
    fams = [hl.HashFamily("toeplitz", 2, 0), hl.HashFamily("toeplitz", 1, 0)]
    assert hl.lhs_distance(hl.build_hashed_state(rho, fams)) == pytest.approx(0.0, abs=1e-14)

    sigma = q.random_density(2, rng)
    indep = q.CqState(np.full((4,), 0.25), np.stack([sigma] * 4))
    # every nonzero linear map of a uniform input is uniform; drop the zero map
    fam = hl.HashFamily("linear_full", 2, 1)
    hs = hl.build_hashed_state(indep, [fam])
    d = hl.member_distances(hs)
    zero_member = [i for i, t in enumerate(hs.tables[0]) if not t.any()]
    assert np.allclose(np.delete(d, zero_member), 0.0)


def test_member_distance_depends_only_on_partition(rng):
    rho = q.random_cq_state((4,), 2, rng)
    perm = rng.permutation(4)
    permuted = q.CqState(rho.weights[perm], rho.cond_states[perm])
    fam = [hl.HashFamily("linear_full", 2, 1)]
    pa = hl.build_hashed_state(rho, fam)
    pb = hl.build_hashed_state(permuted, fam)

    def by_partition(hs, relabel):
        out = {}
        for t, x in zip(hs.member_labels(0, hs.num_members), hl.member_distances(hs)):
            out[frozenset(frozenset(relabel[np.flatnonzero(t == v)]) for v in (0, 1))] = x
        return out

    parts_a = by_partition(pa, np.arange(4))
    parts_b = by_partition(pb, perm)
    for key, val in parts_b.items():
        assert parts_a[key] == pytest.approx(val, abs=1e-14)


def test_lhs_invariant_under_symbol_translation(rng):
    rho = q.random_cq_state((4, 2), 2, rng)
    fams = [hl.HashFamily("toeplitz", 2, 1), hl.HashFamily("toeplitz", 1, 1)]
    base = hl.lhs_distance(hl.build_hashed_state(rho, fams))
    for c1, c2 in itertools.product(range(4), range(2)):
        idx1 = np.arange(4) ^ c1
        idx2 = np.arange(2) ^ c2
        moved = q.CqState(rho.weights[np.ix_(idx1, idx2)], rho.cond_states[np.ix_(idx1, idx2)])
        assert hl.lhs_distance(hl.build_hashed_state(moved, fams)) == pytest.approx(base, abs=1e-12)


def test_monte_carlo_converges(rng):
    rho = q.random_cq_state((4, 2), 2, rng)
    fams = [hl.HashFamily("toeplitz", 2, 1), hl.HashFamily("toeplitz", 1, 1)]
    exact = hl.lhs_distance(hl.build_hashed_state(rho, fams))
    est = hl.lhs_statistics(hl.build_hashed_state(rho, fams, "monte_carlo", seed=5, trials=3000))
    assert est.standard_error > 0
    assert abs(est.value - exact) <= 3 * est.standard_error


def test_worker_count_does_not_change_result(rng, monkeypatch):
    monkeypatch.setattr(hl, "_CHUNK_ROWS", 1)
    rho = q.random_cq_state((4, 4), 2, rng)
    fams = [hl.HashFamily("toeplitz", 2, 2)] * 2
    hs = hl.build_hashed_state(rho, fams)
    a = hl.member_distances(hs, workers=1)
    b = hl.member_distances(hs, workers=4)
    assert np.array_equal(a, b)


def test_exact_mode_capacity():
    rho = q.CqState(np.full((64,), 1 / 64), np.ones((64, 1, 1)))
    with pytest.raises(CapacityError):
        hl.build_hashed_state(rho, [hl.HashFamily("linear_full", 6, 4)], "exact")


def test_shape_checks(rng):
    rho = q.random_cq_state((3,), 2, rng)
    with pytest.raises(ShapeError):
        hl.build_hashed_state(rho, [hl.HashFamily("toeplitz", 2, 1)])
    padded = hl.pad_to_bits(rho)
    assert padded.alphabet_sizes == (4,)
    assert padded.weights[3] == 0
    hl.build_hashed_state(padded, [hl.HashFamily("toeplitz", 2, 1)])


def test_rhs_examples(rng):
    sigma = q.random_density(2, rng)
    indep = q.CqState([0.5, 0.5], np.stack([sigma, sigma]))
    assert hl.rhs_bound(indep, [1], sigma) == pytest.approx(1.0)

    rho = q.random_cq_state((2, 2), 2, rng)
    table = hl.hmin_table(rho)
    expected = np.sqrt(sum(2.0 ** -table[s] for s in (1, 2, 3)))
    assert hl.rhs_bound(rho, [0, 0]) == pytest.approx(expected)


def test_rhs_monotone_in_r(rng):
    rho = q.random_cq_state((4, 4), 2, rng)
    base = hl.rhs_bound(rho, [1, 1])
    assert hl.rhs_bound(rho, [2, 1]) >= base
    assert hl.rhs_bound(rho, [1, 2]) >= base


def test_rhs_nonincreasing_in_hmin(rng):
    # mixing the conditional states with the identity raises every H_min term
    rho = q.random_cq_state((2, 2), 2, rng)
    noisy = q.CqState(rho.weights, 0.5 * rho.cond_states + 0.25 * np.eye(2))
    t0, t1 = hl.hmin_table(rho, np.eye(2) / 2), hl.hmin_table(noisy, np.eye(2) / 2)
    assert all(t1[s] >= t0[s] - 1e-12 for s in t0)
    assert hl.rhs_bound(noisy, [1, 1], np.eye(2) / 2) <= hl.rhs_bound(rho, [1, 1], np.eye(2) / 2) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**40))
def test_soundness_random_instances(seed):
    rho, r = hl.random_instance(seed)
    rec = hl.verify_instance(seed, rho, r)
    assert rec.passed(1e-9)


def test_soundness_with_linear_family(rng):
    for seed in range(20):
        rho, r = hl.random_instance(seed, max_users=2)
        assert hl.verify_instance(seed, rho, r, kind="linear_full").passed()


def test_product_bound_formula():
    rho = q.CqState([0.5, 0.5], np.stack([np.diag([1.0, 0]), np.eye(2) / 2]))
    n, eps = 8, 0.5
    h = entropy.cq_conditional_entropy(rho, [0])
    delta_s = np.log2(2 * 2 + 3) * np.sqrt((2 / n) * (1 + 1 + np.log2(1 / eps)))
    delta = np.log2(2 + 3) * np.sqrt((2 / n) * (1 + np.log2(1 / eps)))
    expected = 2 * eps + np.sqrt(2.0 ** (0 - n * h + n * (delta_s + delta)))
    value = hl.product_bound(rho, n, [0], eps)
    assert value == pytest.approx(expected, rel=1e-12)
    assert np.isfinite(value) and value > 1


def test_product_bound_tail_decreases(rng):
    rho = q.CqState([0.5, 0.5], np.stack([np.diag([1.0, 0]), np.diag([0, 1.0])]) * 0.2 + 0.4 * np.eye(2))
    h = entropy.cq_conditional_entropy(rho, [0])
    rate = 0.2 * h
    vals = [hl.product_bound(rho, n, [int(rate * n)], 0.25) for n in (100, 400)]
    assert vals[1] < vals[0]


def test_product_bound_floor():
    rho = q.CqState([0.5, 0.5], np.ones((2, 1, 1)))
    assert hl.product_bound(rho, 4, [400], 0.3) >= 0.6


def test_product_bound_rejects_bad_epsilon(rng):
    rho = q.random_cq_state((2,), 2, rng)
    with pytest.raises(DomainError):
        hl.product_bound(rho, 2, [1], 1.5)


def test_product_suite_small():
    recs = hl.product_suite(count=3)
    assert len(recs) == 6
    assert all(r.passed() for r in recs)
