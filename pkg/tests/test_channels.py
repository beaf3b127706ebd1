import numpy as np
import pytest

from conftest import hermitian_span_vectors
from superact.channels import (
    Channel,
    ChoiMatrix,
    KrausMap,
    adjoint_channel,
    apply_channel,
    channel_from_choi,
    channel_from_subspace,
    check_necessary,
    choi_from_channel,
    choi_of_adjoint,
    compose,
    composite_choi,
    random_channel,
    standardize_choi,
)
from superact.qmat import StateSubspace, max_principal_angle, omega, partial_trace
from superact.subspaces import find_psd_basis


def depolarizing(d):
    # Kraus operators |i><j| / sqrt(d)
    k = np.zeros((d * d, d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            k[i * d + j, i, j] = 1 / np.sqrt(d)
    return Channel(k)


def literal_choi(E: KrausMap) -> np.ndarray:
    """sum_ij |i><j| ⊗ E(|i><j|), built entry by entry."""
    d_in, d_out = E.d_in, E.d_out
    out = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for i in range(d_in):
        for j in range(d_in):
            eij = np.zeros((d_in, d_in))
            eij[i, j] = 1
            out += np.kron(eij, E(eij))
    return out


def literal_adjoint_apply(E: KrausMap, y):
    return sum(k.conj().T @ y @ k for k in E.kraus)


def test_identity_and_depolarizing_choi():
    ident = Channel(np.eye(2)[None])
    w = omega(2)
    assert np.allclose(choi_from_channel(ident).matrix, np.outer(w, w.conj()))
    assert np.linalg.matrix_rank(choi_from_channel(ident).matrix) == 1
    assert np.allclose(choi_from_channel(depolarizing(2)).matrix, np.eye(4) / 2)


def test_choi_matches_literal_definition(gen):
    for d_a, d_b, d_e in [(2, 2, 1), (2, 3, 2), (3, 2, 4)]:
        E = random_channel(d_a, d_b, d_e, gen)
        assert np.allclose(choi_from_channel(E).matrix, literal_choi(E), atol=1e-12)


def test_apply_channel_examples(gen):
    rho = np.diag([0.3, 0.7]).astype(complex)
    assert np.allclose(apply_channel(Channel(np.eye(2)[None]), rho), rho)
    zero = np.diag([1.0, 0.0, 0.0])
    assert np.allclose(apply_channel(depolarizing(3), zero), np.eye(3) / 3)
    E = random_channel(3, 2, 3, gen)
    a = gen.standard_normal((3, 3)) + 1j * gen.standard_normal((3, 3))
    assert np.allclose(apply_channel(choi_from_channel(E), a), E(a))


def test_adjoint_examples(gen):
    u = np.linalg.qr(gen.standard_normal((3, 3)) + 1j * gen.standard_normal((3, 3)))[0]
    adj = adjoint_channel(Channel(u[None]))
    y = gen.standard_normal((3, 3)) + 1j * gen.standard_normal((3, 3))
    assert np.allclose(adj(y), u.conj().T @ y @ u)
    assert np.allclose(adjoint_channel(depolarizing(3))(y), np.trace(y) * np.eye(3) / 3)


def test_adjoint_is_hilbert_schmidt_adjoint(gen):
    E = random_channel(3, 4, 2, gen)
    x = gen.standard_normal((3, 3)) + 1j * gen.standard_normal((3, 3))
    y = gen.standard_normal((4, 4)) + 1j * gen.standard_normal((4, 4))
    lhs = np.trace(y.conj().T @ E(x))
    rhs = np.trace(adjoint_channel(E)(y).conj().T @ x)
    assert lhs == pytest.approx(rhs)


def test_compose_order(gen):
    first = random_channel(2, 3, 2, gen)
    second = random_channel(3, 4, 2, gen)
    x = gen.standard_normal((2, 2)) + 1j * gen.standard_normal((2, 2))
    assert np.allclose(compose(first, second)(x), second(first(x)))


def test_choi_of_adjoint_dense_and_factored_agree(gen):
    E = random_channel(3, 2, 3, gen)
    c = choi_from_channel(E)
    dense = ChoiMatrix(c.dims, c.kind, matrix_=c.matrix)
    assert np.allclose(choi_of_adjoint(c).matrix, choi_of_adjoint(dense).matrix)


def test_composite_examples():
    ident = Channel(np.eye(3)[None])
    w = omega(3)
    assert np.allclose(composite_choi(choi_from_channel(ident)).matrix, np.outer(w, w.conj()))
    assert np.allclose(composite_choi(choi_from_channel(depolarizing(2))).matrix, np.eye(4) / 2)


def test_composite_matches_literal_composition(gen):
    for _ in range(5):
        E = random_channel(3, 2, 2, gen)
        target = literal_choi(compose(E, adjoint_channel(E)))
        c = choi_from_channel(E)
        assert np.allclose(composite_choi(c).matrix, target, atol=1e-12)
        dense = ChoiMatrix(c.dims, c.kind, matrix_=c.matrix)
        assert np.allclose(composite_choi(dense).matrix, target, atol=1e-12)


def test_composite_recovers_map_on_inputs(gen):
    E = random_channel(3, 3, 2, gen)
    sigma = composite_choi(choi_from_channel(E))
    for _ in range(20):
        x = gen.standard_normal((3, 3)) + 1j * gen.standard_normal((3, 3))
        assert np.max(np.abs(apply_channel(sigma, x) - literal_adjoint_apply(E, E(x)))) <= 1e-9


def test_kraus_choi_round_trip(gen):
    for _ in range(10):
        E = random_channel(3, 3, 3, gen)
        c = choi_from_channel(E)
        dense = ChoiMatrix(c.dims, "standard", matrix_=c.matrix)
        back = channel_from_choi(dense)
        assert back.cpt_error() <= 1e-10
        assert np.max(np.abs(choi_from_channel(back).matrix - c.matrix)) <= 1e-10


def test_channel_rejects_non_tp():
    with pytest.raises(ValueError):
        Channel(2 * np.eye(2)[None])


def test_channel_json_round_trip(gen):
    E = random_channel(2, 3, 2, gen)
    assert np.array_equal(Channel.from_json(E.to_json()).kraus, E.kraus)
    c = choi_from_channel(E)
    assert np.allclose(ChoiMatrix.from_json(c.to_json()).matrix, c.matrix)


def test_standardize_examples(gen):
    c = choi_from_channel(random_channel(2, 2, 2, gen))
    assert standardize_choi(c) is c
    g = gen.standard_normal((6, 6)) + 1j * gen.standard_normal((6, 6))
    ns = ChoiMatrix((2, 3), "nonstandard", matrix_=g @ g.conj().T)
    std = standardize_choi(ns)
    assert np.max(np.abs(partial_trace(std.matrix, (2, 3), "B") - np.eye(2))) <= 1e-9
    assert channel_from_choi(std).cpt_error() <= 1e-10


def test_standardize_shrinks_degenerate_marginal(gen):
    f = np.zeros((2, 3, 2), dtype=complex)
    f[0] = gen.standard_normal((3, 2)) + 1j * gen.standard_normal((3, 2))
    ns = ChoiMatrix((2, 3), "nonstandard", factor=f.reshape(6, 2))
    with pytest.raises(ValueError):
        standardize_choi(ns)
    std = standardize_choi(ns, shrink=True)
    assert std.dims == (1, 3)
    assert "embedding" in std.metadata


def test_subspace_channel_single_generator():
    sc = channel_from_subspace([np.eye(4)])
    ch = sc.channel
    assert (ch.d_A, ch.d_E, ch.d_B) == (4, 1, 4)
    # isometric embedding
    assert np.allclose(ch.kraus[0].conj().T @ ch.kraus[0], np.eye(4))
    supp = composite_choi(sc.rho).support()
    assert supp.dim == 1 and supp.contains(omega(4))


def test_subspace_channel_example(example):
    s1, _ = example
    psd = find_psd_basis(s1)
    sc = channel_from_subspace(psd)
    assert (sc.channel.d_A, sc.channel.d_E, sc.channel.d_B) == (4, 8, 32)
    assert sc.channel.cpt_error() <= 1e-10
    assert np.linalg.matrix_rank(choi_from_channel(sc.channel).matrix) == 8
    marg = sc.rho.input_marginal()
    assert np.linalg.matrix_rank(marg) == 4
    std = standardize_choi(sc.rho)
    assert channel_from_choi(std).cpt_error() <= 1e-10
    assert max_principal_angle(composite_choi(sc.rho).support(), s1) <= 1e-7
    assert max_principal_angle(sc.sigma.support(), s1) <= 1e-7


def test_standardized_channel_support_is_rescaled(example):
    s1, _ = example
    sc = channel_from_subspace(find_psd_basis(s1))
    r = sc.rescale
    expected = s1.transform(np.kron(r, r.conj()))
    got = composite_choi(choi_from_channel(sc.channel)).support()
    assert max_principal_angle(got, expected) <= 1e-7


def test_subspace_channel_rejects_indefinite():
    with pytest.raises(ValueError):
        channel_from_subspace([np.diag([1.0, -1.0])])


def test_necessary_conditions(gen):
    for _ in range(5):
        E = random_channel(3, 2, 2, gen)
        assert check_necessary(composite_choi(choi_from_channel(E))).passed
    w = omega(3)
    assert check_necessary(ChoiMatrix((3, 3), "standard", matrix_=np.outer(w, w.conj()))).passed
    v = np.zeros(4, dtype=complex)
    v[1] = 1  # |01>, not flip invariant
    rep = check_necessary(ChoiMatrix((2, 2), "standard", matrix_=np.outer(v, v)))
    assert not rep.conjugate_symmetric and not rep.passed


def test_necessary_on_hermitian_span(gen):
    vecs = np.concatenate([omega(3)[None], hermitian_span_vectors(gen, 3, 4)])
    s = StateSubspace.span(vecs, (3, 3))
    psd = find_psd_basis(s)
    assert psd
    sc = channel_from_subspace(psd)
    assert check_necessary(composite_choi(sc.rho)).passed
