import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from privmac import qstate as q
from privmac.errors import CapacityError, DomainError, ShapeError


def test_tensor_examples():
    mixed = q.maximally_mixed(2)
    assert np.allclose(q.tensor(mixed, mixed).matrix, np.eye(4) / 4)
    out = q.tensor(q.basis_state(2, 0), q.basis_state(2, 1))
    assert np.allclose(out.matrix, q.basis_state(4, 1).matrix)
    prod = q.tensor(q.DensityOperator(np.diag([0.75, 0.25])), q.DensityOperator(np.diag([0.5, 0.5])))
    assert np.allclose(np.diag(prod.matrix).real, [0.375, 0.375, 0.125, 0.125])
    assert prod.dim == 4


def test_tensor_trace_multiplies(rng):
    a = q.DensityOperator(0.5 * q.random_density(2, rng))
    b = q.DensityOperator(q.random_density(3, rng))
    assert q.tensor(a, b).trace == pytest.approx(0.5)


def test_tensor_capacity(monkeypatch):
    monkeypatch.setenv("PRIVMAC_MAX_DIM", "8")
    with pytest.raises(CapacityError):
        q.tensor(q.maximally_mixed(4), q.maximally_mixed(4))


def test_partial_trace_examples(rng):
    ket01 = q.basis_state(4, 1)
    assert np.allclose(q.partial_trace(ket01, [2, 2], [1]).matrix, q.basis_state(2, 1).matrix)
    assert np.allclose(q.partial_trace(ket01, [2, 2], [0]).matrix, q.basis_state(2, 0).matrix)
    assert np.allclose(q.partial_trace(q.bell_state(), [2, 2], [1]).matrix, np.eye(2) / 2)

    rho = 0.7 * q.random_density(3, rng)
    sigma = q.random_density(2, rng)
    joint = np.kron(rho, sigma)
    # direct index contraction
    t = joint.reshape(3, 2, 3, 2)
    oracle = sum(t[i, :, i, :] for i in range(3))
    assert np.allclose(q.partial_trace(joint, [3, 2], [1]), oracle)
    assert np.allclose(oracle, 0.7 * sigma)


def test_partial_trace_dims_mismatch():
    with pytest.raises(ShapeError):
        q.partial_trace(np.eye(4) / 4, [2, 3], [0])


def test_partial_trace_three_factors(rng):
    a, b, c = (q.random_density(d, rng) for d in (2, 3, 2))
    abc = np.kron(np.kron(a, b), c)
    assert np.allclose(q.partial_trace(abc, [2, 3, 2], [0, 2]), np.kron(a, c))
    assert np.allclose(q.partial_trace(abc, [2, 3, 2], []), [[1.0]])


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_partial_trace_of_tensor(da, db, seed):
    rng = np.random.default_rng(seed)
    a = q.random_density(da, rng)
    b = 0.5 * q.random_density(db, rng)
    out = q.partial_trace(np.kron(a, b), [da, db], [0])
    assert np.max(np.abs(out - 0.5 * a)) < 1e-10


def test_apply_channel_examples(rng):
    rho = q.random_density(3, rng)
    assert np.allclose(q.apply_channel(q.identity_channel(3), rho), rho)
    out = q.apply_channel(q.depolarizing_channel(2, 1.0), q.basis_state(2, 0))
    assert np.allclose(out.matrix, np.eye(2) / 2)
    ad = q.amplitude_damping(0.3)
    mixed = np.eye(2) / 2
    assert np.allclose(ad(mixed), q.apply_choi(ad.choi(), 2, 2, mixed))
    assert np.allclose(ad(mixed), np.diag([0.65, 0.35]))


def test_apply_channel_shape_mismatch():
    with pytest.raises(ShapeError):
        q.apply_channel(q.identity_channel(2), np.eye(3) / 3)


def test_channel_rejects_non_tp():
    with pytest.raises(DomainError):
        q.QuantumChannel((2,), 2, np.array([np.eye(2) * 0.9]))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_channel_trace_preserving_on_basis(din, dout, nk, seed):
    rng = np.random.default_rng(seed)
    ch = q.random_channel((din,), dout, nk, rng)
    for i in range(din):
        for j in range(din):
            e = np.zeros((din, din))
            e[i, j] = 1
            assert abs(np.trace(ch(e)) - (i == j)) < 1e-10


def test_isometric_extension_examples():
    v = q.isometric_extension(q.identity_channel(2))
    assert v.env_dim == 1
    assert np.allclose(v.isometry, np.eye(2))

    ad = q.amplitude_damping(0.4)
    v = q.isometric_extension(ad)
    assert v.env_dim == 2
    assert np.allclose(v.isometry.conj().T @ v.isometry, np.eye(2))

    copy = q.classical_copy_channel(2)
    v = q.isometric_extension(copy)
    for x in range(2):
        out = v.apply(q.basis_state(2, x).matrix)
        eve = q.partial_trace(out, [2, v.env_dim], [1])
        assert np.allclose(eve, q.basis_state(2, x).matrix)


def test_extension_recovers_channel(rng):
    for _ in range(100):
        din, dout, nk = rng.integers(1, 4, size=3)
        ch = q.random_channel((int(din),), int(dout), int(nk), rng)
        v = q.isometric_extension(ch)
        rho = q.random_density(int(din), rng)
        bob = q.partial_trace(v.apply(rho), [v.out_dim, v.env_dim], [0])
        eve = q.partial_trace(v.apply(rho), [v.out_dim, v.env_dim], [1])
        assert q.trace_norm(bob - ch(rho)) < 1e-8
        assert q.trace_norm(eve - ch.complementary()(rho)) < 1e-8


def test_trace_norm_examples(rng):
    assert q.trace_norm(np.zeros((3, 3))) == 0
    rho = q.random_density(3, rng)
    assert q.trace_norm(rho - rho) == 0
    assert q.trace_norm(np.diag([1.0, -1.0])) == pytest.approx(2.0)
    with pytest.raises(ShapeError):
        q.trace_norm(np.zeros((2, 3)))


def test_trace_norm_non_hermitian_uses_singular_values():
    a = np.array([[0, 1], [0, 0]], dtype=complex)
    assert q.trace_norm(a) == pytest.approx(1.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_trace_norm_is_a_metric(d, seed):
    rng = np.random.default_rng(seed)
    a, b, c = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for _ in range(3))
    a, b, c = (m + m.conj().T for m in (a, b, c))
    assert abs(q.trace_norm(a - b) - q.trace_norm(b - a)) < 1e-9
    assert q.trace_norm(a - c) <= q.trace_norm(a - b) + q.trace_norm(b - c) + 1e-9


def test_hermitian_eig_examples(rng):
    lam, _ = q.hermitian_eig(np.diag([1.0, 2.0, 3.0]))
    assert np.allclose(lam, [1, 2, 3])
    lam, _ = q.hermitian_eig(np.array([[0, 1], [1, 0]]))
    assert np.allclose(lam, [-1, 1])
    g = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    h = g + g.conj().T
    lam, u = q.hermitian_eig(h)
    assert np.linalg.norm(u @ np.diag(lam) @ u.conj().T - h) < 1e-9
    with pytest.raises(DomainError):
        q.hermitian_eig(np.array([[0, 1], [0, 0]]))


def test_density_operator_validation():
    with pytest.raises(DomainError):
        q.DensityOperator(np.diag([1.0, 0.5]))
    with pytest.raises(DomainError):
        q.DensityOperator(np.diag([1.2, -0.2]))
    with pytest.raises(DomainError):
        q.DensityOperator(np.array([[0.5, 0.3], [0.0, 0.5]]))
    with pytest.raises(ShapeError):
        q.DensityOperator(np.ones((2, 3)))
    sub = q.DensityOperator(np.diag([0.2, 0.1]))
    assert sub.trace == pytest.approx(0.3)
    assert np.asarray(sub).shape == (2, 2)
    with pytest.raises(ValueError):
        sub.matrix[0, 0] = 1


def test_cq_state_flatten_and_marginal(rng):
    cq = q.random_cq_state((2, 3), 2, rng)
    flat = cq.flatten()
    assert flat.dim == 12
    assert flat.trace == pytest.approx(1.0)
    assert np.allclose(flat.matrix[2:4, 2:4], cq.subnormalized()[0, 1])
    m = cq.marginal([1])
    assert m.alphabet_sizes == (3,)
    assert np.allclose(m.quantum_marginal(), cq.quantum_marginal())
    with pytest.raises(DomainError):
        q.CqState(np.array([0.5, 0.6]), np.stack([np.eye(2) / 2] * 2))


def test_cq_tensor_power(rng):
    cq = q.random_cq_state((2,), 2, rng)
    t = cq.tensor_power(2)
    assert t.alphabet_sizes == (4,)
    assert t.qdims == (2, 2)
    # symbol (x1, x2) -> x1 * 2 + x2
    sub = cq.subnormalized()
    assert np.allclose(t.subnormalized()[1], np.kron(sub[0], sub[1]))


def test_cq_reduce_quantum(rng):
    states = np.stack([np.kron(q.random_density(2, rng), q.random_density(3, rng)) for _ in range(2)])
    cq = q.CqState([0.4, 0.6], states, (2, 3))
    red = cq.reduce_quantum([1])
    assert red.qdims == (3,)
    assert np.allclose(red.cond_states[0], q.partial_trace(states[0], [2, 3], [1]))


def test_complementary_of_amplitude_damping():
    ad = q.amplitude_damping(0.3)
    comp = ad.complementary()
    other = q.amplitude_damping(0.7)
    for rho in (np.eye(2) / 2, np.array([[0.6, 0.2], [0.2, 0.4]])):
        assert np.allclose(comp(rho), other(rho))
