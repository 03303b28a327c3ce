import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from privmac import codesim as cs
from privmac import hashlemma, qstate as q
from privmac.errors import CapacityError, DomainError

UNIFORM = [0.5, 0.5]


def ket(theta):
    return np.array([np.cos(theta), np.sin(theta)])


# ---- inversion ---------------------------------------------------------------------


def test_inversion_identity_is_deterministic():
    inv = cs.build_inversion_channel([0.3, 0.7], np.arange(8), 3)
    assert inv.ok
    assert np.array_equal(inv.table, np.eye(8))


def test_inversion_constant_hash_is_unconditional():
    f = hashlemma.sample_family("toeplitz", 3, 0, seed=0)
    inv = cs.build_inversion_channel([0.3, 0.7], f, 3)
    assert inv.table.shape == (1, 8)
    assert np.allclose(inv.table[0], cs.sequence_pmf([0.3, 0.7], 3))


def test_inversion_two_to_one_toeplitz():
    fam = hashlemma.HashFamily("toeplitz", 2, 1)
    balanced = 0
    for f in hashlemma.enumerate_family(fam):
        inv = cs.build_inversion_channel(UNIFORM, f, 2)
        if not inv.ok:  # the constant members leave one label without preimage
            assert np.all(f.table() == f.table()[0])
            continue
        balanced += 1
        for u in range(2):
            row = inv.table[u]
            assert np.allclose(row[row > 0], 0.5) and np.count_nonzero(row) == 2
            assert np.all(inv.labels[row > 0] == u)
    assert balanced == 6


def test_inversion_cap():
    with pytest.raises(CapacityError):
        cs.build_inversion_channel(UNIFORM, np.zeros(2**17, dtype=int), 17)


# ---- pretty-good measurement --------------------------------------------------------


def test_pgm_orthogonal_states():
    states = [np.diag(np.eye(3)[i]) for i in range(3)]
    povm = cs.pgm_decoder(states)
    assert np.allclose(cs.success_probabilities(povm, states), 1.0)


def test_pgm_identical_states():
    rho = q.random_density(2, np.random.default_rng(0))
    povm = cs.pgm_decoder([("a", rho), ("b", rho)])
    assert np.allclose(cs.success_probabilities(povm, [rho, rho]), 0.5)


def test_pgm_trine():
    states = [np.outer(ket(2 * np.pi * k / 3), ket(2 * np.pi * k / 3)) for k in range(3)]
    povm = cs.pgm_decoder(states)
    assert np.mean(cs.success_probabilities(povm, states)) == pytest.approx(2 / 3, abs=1e-9)


def test_pgm_completeness(rng):
    for rank in (1, 2):
        states = [q.random_density(4, rng, rank) for _ in range(3)]
        povm = cs.pgm_decoder(states)
        assert np.allclose(povm.sum(axis=0), np.eye(4), atol=1e-9)
        assert np.min(np.linalg.eigvalsh(povm)) > -1e-12


# ---- bins and message sets ----------------------------------------------------------


def test_extract_identity_and_constant_bins():
    ident = cs.extract_mac_code([np.arange(8)], [3], 0.25)
    assert ident.num_messages == (1,)
    const = cs.extract_mac_code([np.zeros(8, dtype=int)], [0], 0.25)
    assert const.num_messages == (8,)
    assert [const.encode(0, m) for m in range(8)] == list(range(8))


def test_random_linear_bins_census(rng):
    for _ in range(20):
        g = cs.random_linear_bins(4, 2, rng)
        _, _, mass = cs.bin_census(g, 4, 0.25)
        assert mass >= 0.75
        code = cs.extract_mac_code([g], [2], 0.25)
        assert code.num_messages[0] >= 0.25 * 16 / 4


def test_encoder_is_bijection_onto_bin(rng):
    g = cs.random_linear_bins(5, 2, rng)
    code = cs.extract_mac_code([g], [2], 0.25)
    images = [code.encode(0, m) for m in range(code.num_messages[0])]
    assert len(set(images)) == len(images)
    assert set(images) == set(np.flatnonzero(g == code.c_star[0]))


def test_extract_uses_error_function():
    g = np.array([0, 0, 1, 1, 2, 2, 3, 3])
    code = cs.extract_mac_code([g], [2], 0.25, error_fn=lambda c: abs(c.c_star[0] - 2))
    assert code.c_star == (2,)


def test_extract_epsilon_range():
    # for eps <= 1 the largest bin always qualifies, so only the range can fail
    with pytest.raises(DomainError):
        cs.extract_mac_code([np.zeros(4, dtype=int)], [2], 2.0)
    assert cs.extract_mac_code([np.zeros(4, dtype=int)], [2], 1.0).c_star == (0,)


def test_preimage_lemma_linear_maps():
    u = np.arange(16, dtype=np.uint64)
    for r0, r1 in itertools.product(range(16), repeat=2):
        g = ((np.bitwise_count(u & np.uint64(r0)) & 1) << 1 | (np.bitwise_count(u & np.uint64(r1)) & 1)).astype(int)
        for eps in (0.1, 0.25, 0.5):
            assert cs.bin_census(g, 4, eps)[2] >= 1 - eps


def test_preimage_lemma_all_functions():
    # every function from 3-bit inputs to 2-bit outputs
    digits = np.array(list(itertools.product(range(4), repeat=8)))
    counts = np.stack([(digits == c).sum(axis=1) for c in range(4)], axis=1)
    for eps in (0.1, 0.25, 0.5):
        good = counts >= eps * 8 / 4
        mass = (counts * good).sum(axis=1) / 8
        assert mass.min() >= 1 - eps


# ---- expurgation ---------------------------------------------------------------------


def test_expurgate_examples():
    assert cs.expurgate(np.full(16, 0.2), np.full(16, 0.1), 0.1).all()
    errors = np.zeros(16)
    errors[5] = 1.0
    keep = cs.expurgate(errors, np.zeros(16), 0.1)
    assert np.flatnonzero(~keep).tolist() == [5]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=40), st.floats(0.01, 0.5), st.integers(0, 2**31))
def test_expurgate_retains_fraction(errors, alpha, seed):
    leaks = np.random.default_rng(seed).random(len(errors)) * 2
    keep = cs.expurgate(errors, leaks, alpha)
    assert keep.mean() >= 1 - 2 * alpha


# ---- state assembly -------------------------------------------------------------------


def brute_force_states(ch, code, joint):
    """Sum over every sequence with explicit Kronecker products."""
    n = code.n
    sizes = ch.alphabet_sizes
    bob = ch.bob_states()
    out = []
    seqs = [list(itertools.product(range(k), repeat=n)) for k in sizes]
    for m in joint:
        acc = 0
        for xs in itertools.product(*seqs):
            w = np.prod([code.inversions[l].table[code.mac.encode(l, m[l])][i]
                         for l, i in enumerate(seqs[l].index(x) for l, x in enumerate(xs))])
            if w == 0:
                continue
            mat = np.ones((1, 1))
            for t in range(n):
                mat = np.kron(mat, bob[tuple(x[t] for x in xs)])
            acc = acc + w * mat
        out.append(acc)
    return np.stack(out)


def test_contraction_matches_brute_force():
    ch = cs.degraded_eve_mac((2, 2), 0.1, 0.5)
    code = cs.build_code(ch, [UNIFORM, [0.3, 0.7]], [(0.5, 0), (1, 0.5)], 2, seed=3)
    joint = cs._joint_messages(code)
    fast = cs._contract(cs._message_table(code, joint), ch.alphabet_sizes, 2, ch.bob_states())
    assert np.allclose(fast, brute_force_states(ch, code, joint), atol=1e-12)


# ---- simulation ------------------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 3, 4])
def test_noiseless_mac_is_perfect(n):
    rep = cs.simulate(cs.noiseless_mac((2, 2)), [UNIFORM, UNIFORM], [(0.5, 0.25), (0.5, 0)], n, seed=n)
    assert rep.mode == "exact"
    assert rep.max_error <= 1e-10 and rep.leakage <= 1e-10
    assert rep.retained.all()


def test_trivial_bob_is_guessing():
    rep = cs.simulate(cs.trivial_bob_mac((2,)), [UNIFORM], [(0.5, 0)], 4, seed=0)
    m = int(np.prod(rep.num_messages))
    assert np.all(rep.errors >= 1 - 1 / m - 1e-12)


def test_report_ranges_and_expurgation():
    ch = cs.degraded_eve_mac((2,), 0.05, 0.5)
    rep = cs.simulate(ch, [UNIFORM], [(1, 0.5)], 4, seed=1, alpha=0.2)
    assert np.all((0 <= rep.errors) & (rep.errors <= 1))
    assert np.all((0 <= rep.leakages) & (rep.leakages <= 2))
    assert rep.retained_fraction >= 1 - 2 * 0.2
    assert rep.rates == (0.5,)
    assert rep.as_dict()["num_messages"] == [4]
    assert rep.per_message_csv().splitlines()[0] == "message,error,leakage,retained"


def test_monte_carlo_matches_exact_on_sampled_messages():
    ch = cs.degraded_eve_mac((2,), 0.05, 0.5)
    exact = cs.simulate(ch, [UNIFORM], [(1, 0.5)], 6, seed=2, select_bins=False)
    mc = cs.simulate(ch, [UNIFORM], [(1, 0.5)], 6, seed=2, trials=3, select_bins=False)
    assert mc.mode == "monte_carlo" and len(mc.messages) == 3
    assert np.allclose(mc.errors, exact.errors[mc.messages], atol=1e-12)
    assert np.allclose(mc.leakages, exact.leakages[mc.messages], atol=1e-12)


def test_simulation_is_deterministic():
    ch = cs.degraded_eve_mac((2,), 0.05, 0.5)
    a = cs.simulate(ch, [UNIFORM], [(0.5, 0)], 4, seed=7)
    b = cs.simulate(ch, [UNIFORM], [(0.5, 0)], 4, seed=7)
    assert np.array_equal(a.errors, b.errors) and np.array_equal(a.leakages, b.leakages)


def test_rates_outside_hash_range():
    with pytest.raises(DomainError):
        cs.simulate(cs.noiseless_mac((2,)), [UNIFORM], [(1.5, 0)], 2)
