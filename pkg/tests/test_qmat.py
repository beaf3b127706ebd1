import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_state, random_subspace_vectors
from superact.qmat import (
    DimensionError,
    StateSubspace,
    antidiagonal,
    array_from_json,
    array_to_json,
    flip,
    flip_operator,
    hermitian_inv_sqrt,
    matrix_to_state,
    max_principal_angle,
    omega,
    orthogonal_complement,
    orthonormalize,
    partial_trace,
    schmidt_rank,
    state_to_matrix,
)


def ket(dims, i, j):
    v = np.zeros(dims[0] * dims[1], dtype=complex)
    v[i * dims[1] + j] = 1
    return v


def test_state_to_matrix_examples():
    assert np.array_equal(state_to_matrix(ket((2, 2), 0, 1), (2, 2)), [[0, 1], [0, 0]])
    assert np.array_equal(state_to_matrix(omega(4), (4, 4)), np.eye(4))
    anti = sum(ket((4, 4), i, 3 - i) for i in range(4))
    assert np.array_equal(state_to_matrix(anti, (4, 4)), antidiagonal(4))
    with pytest.raises(DimensionError):
        state_to_matrix(np.ones(5), (2, 2))


def test_matrix_state_round_trip(gen):
    m = gen.standard_normal((3, 5)) + 1j * gen.standard_normal((3, 5))
    assert np.array_equal(state_to_matrix(matrix_to_state(m), (3, 5)), m)


def test_flip_examples(gen):
    assert np.allclose(flip(ket((2, 2), 0, 1), (2, 2)), ket((2, 2), 1, 0))
    assert np.allclose(flip(1j * ket((2, 2), 0, 1), (2, 2)), -1j * ket((2, 2), 1, 0))
    psi = random_state(gen, 9)
    assert np.allclose(flip(flip(psi, (3, 3)), (3, 3)), psi)


def test_flip_is_dagger_of_coefficient_matrix(gen):
    psi = random_state(gen, 12)
    assert np.allclose(state_to_matrix(flip(psi, (3, 4)), (4, 3)), state_to_matrix(psi, (3, 4)).conj().T)


def test_flip_operator_involution_and_consistency(gen):
    a = gen.standard_normal((6, 6)) + 1j * gen.standard_normal((6, 6))
    assert np.allclose(flip_operator(flip_operator(a, (2, 3)), (3, 2)), a)
    psi = random_state(gen, 6)
    proj = np.outer(psi, psi.conj())
    fpsi = flip(psi, (2, 3))
    assert np.allclose(flip_operator(proj, (2, 3)), np.outer(fpsi, fpsi.conj()))


@pytest.mark.parametrize("psi,dims,expected", [
    (ket((2, 2), 0, 0), (2, 2), 1),
    (omega(4), (4, 4), 4),
    (ket((3, 2), 0, 0) + ket((3, 2), 1, 0) + ket((3, 2), 2, 1), (3, 2), 2),
])
def test_schmidt_rank_examples(psi, dims, expected):
    assert schmidt_rank(psi, dims) == expected


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**31))
def test_schmidt_rank_is_matrix_rank(da, db, seed):
    gen = np.random.default_rng(seed)
    r = int(gen.integers(1, min(da, db) + 1))
    m = (gen.standard_normal((da, r)) + 1j * gen.standard_normal((da, r))) @ \
        (gen.standard_normal((r, db)) + 1j * gen.standard_normal((r, db)))
    assert schmidt_rank(m.reshape(-1), (da, db)) == np.linalg.matrix_rank(m) == r


def test_orthonormalize_is_deterministic_and_rank_revealing(gen):
    v = random_subspace_vectors(gen, 8, 3).T
    dep = np.concatenate([v, v[:, :1] + 2 * v[:, 1:2]], axis=1)
    q1, q2 = orthonormalize(dep), orthonormalize(dep)
    assert q1.shape == (8, 3)
    assert np.array_equal(q1, q2)
    assert np.allclose(q1.conj().T @ q1, np.eye(3))
    assert orthonormalize(np.zeros((4, 2))).shape == (4, 0)


def test_subspace_rejects_bad_input():
    with pytest.raises(ValueError):
        StateSubspace.span(np.zeros((1, 4)), (2, 2))
    with pytest.raises(DimensionError):
        StateSubspace(np.eye(4)[:, :2], (2, 3))


def test_complement_examples(example):
    c = orthogonal_complement(StateSubspace.span(ket((2, 2), 0, 0), (2, 2)))
    assert c.dim == 3
    s1, _ = example
    assert orthogonal_complement(s1).dim == 8


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**31))
def test_complement_properties(da, db, seed):
    gen = np.random.default_rng(seed)
    n = da * db
    k = int(gen.integers(1, n)) if n > 1 else 1
    if k >= n:
        return
    s = StateSubspace.span(random_subspace_vectors(gen, n, k), (da, db))
    c = orthogonal_complement(s)
    assert s.dim + c.dim == n
    assert np.max(np.abs(s.basis.conj().T @ c.basis)) <= 1e-10


def test_principal_angles(gen):
    s = StateSubspace.span(random_subspace_vectors(gen, 9, 3), (3, 3))
    u = np.linalg.qr(gen.standard_normal((3, 3)) + 1j * gen.standard_normal((3, 3)))[0]
    same = StateSubspace(s.basis @ u, s.dims)
    assert max_principal_angle(s, same) < 1e-12
    assert s.equals(same)
    t = StateSubspace.span(random_subspace_vectors(gen, 9, 2), (3, 3))
    assert max_principal_angle(s, t) == pytest.approx(np.pi / 2)
    e0 = StateSubspace.span(ket((1, 2), 0, 0), (1, 2))
    tilt = StateSubspace.span(np.array([np.cos(0.3), np.sin(0.3)]), (1, 2))
    assert max_principal_angle(e0, tilt) == pytest.approx(0.3)


def test_partial_trace_examples(gen):
    w = omega(2)
    assert np.allclose(partial_trace(np.outer(w, w.conj()), (2, 2), "B"), np.eye(2))
    p = gen.standard_normal((2, 2)) + 1j * gen.standard_normal((2, 2))
    q = gen.standard_normal((3, 3)) + 1j * gen.standard_normal((3, 3))
    assert np.allclose(partial_trace(np.kron(p, q), (2, 3), "A"), np.trace(p) * q)
    assert np.allclose(partial_trace(np.kron(p, q), (2, 3), "B"), np.trace(q) * p)


def test_partial_trace_trace_and_linearity(gen):
    a = gen.standard_normal((12, 12)) + 1j * gen.standard_normal((12, 12))
    b = gen.standard_normal((12, 12)) + 1j * gen.standard_normal((12, 12))
    for side in "AB":
        assert np.trace(partial_trace(a, (3, 4), side)) == pytest.approx(np.trace(a))
        lhs = partial_trace(2 * a - 1j * b, (3, 4), side)
        rhs = 2 * partial_trace(a, (3, 4), side) - 1j * partial_trace(b, (3, 4), side)
        assert np.allclose(lhs, rhs)
    with pytest.raises(ValueError):
        partial_trace(a, (3, 4), "C")


def test_hermitian_inv_sqrt(gen):
    assert np.allclose(hermitian_inv_sqrt(np.eye(3)), np.eye(3))
    assert np.allclose(hermitian_inv_sqrt(np.diag([4.0, 1.0])), np.diag([0.5, 1.0]))
    g = gen.standard_normal((5, 3)) + 1j * gen.standard_normal((5, 3))
    m = g @ g.conj().T  # rank 3
    r = hermitian_inv_sqrt(m)
    supp = g @ np.linalg.pinv(g)
    assert np.max(np.abs(r @ m @ r - supp)) <= 1e-10
    with pytest.raises(ValueError):
        hermitian_inv_sqrt(np.array([[0, 1], [0, 0]]))


def test_json_round_trip(gen):
    a = gen.standard_normal((2, 3, 4)) + 1j * gen.standard_normal((2, 3, 4))
    assert np.array_equal(array_from_json(array_to_json(a)), a)
