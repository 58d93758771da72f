import numpy as np
import pytest

from quasiloc.algebra import (LocalOperator, commutator, cond_expect, cond_expect_matrix, delta_m,
                              embed, embed_matrix, fixed_order_sum, op_norm, pauli_string,
                              random_local, spectral_norm, unitarity_defect)
from quasiloc.backend import BlockSpace, DenseSpace, err_norm, make_space
from quasiloc.errors import BlockStructureError, DomainError
from quasiloc.lattice import Region

CHAIN4 = Region.chain(0, 4)


def test_pauli_algebra():
    X, Y, Z = (pauli_string(c) for c in "XYZ")
    assert np.allclose(X @ Y, 1j * Z)
    assert np.allclose(pauli_string("XZ"), np.kron(X, Z))
    assert spectral_norm(pauli_string("XX") + pauli_string("ZZ"), True) == pytest.approx(2.0)


def test_embed_matrix_orders_legs_by_ambient():
    amb = Region.chain(0, 3)
    X, Z = pauli_string("X"), pauli_string("Z")
    M = embed_matrix(np.kron(X, Z), Region.of([(0,), (2,)]), amb)
    assert np.allclose(M, np.kron(np.kron(X, np.eye(2)), Z))


def test_cond_expect_of_product_is_normalised_trace():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((2, 2))
    B = rng.standard_normal((4, 4))
    M = np.kron(A, B)
    got = cond_expect_matrix(M, Region.chain(0, 3), Region.chain(0, 1))
    assert np.allclose(got, np.kron(A, np.eye(4)) * np.trace(B) / 4)


def test_cond_expect_properties():
    rng = np.random.default_rng(1)
    A = random_local(rng, CHAIN4, CHAIN4)
    X = Region.chain(1, 3)
    P = cond_expect(A, X)
    assert P.support.issubset(X)
    assert np.allclose(cond_expect(P, X).matrix, P.matrix)  # idempotent
    assert op_norm(P) <= op_norm(A) + 1e-12  # contraction
    # bimodule property for an operator already localised in X
    B = random_local(rng, X, CHAIN4)
    assert np.allclose(cond_expect(B @ A, X).matrix, (B @ P).matrix)


def test_delta_m_telescopes_to_operator():
    rng = np.random.default_rng(2)
    amb = Region.chain(0, 6)
    A = random_local(rng, amb, amb)
    X = Region.of([(2,)])
    parts = [delta_m(A, X, m) for m in range(6)]
    total = fixed_order_sum([p.matrix for p in parts])
    assert np.allclose(total, A.matrix, atol=1e-12)
    assert all(op_norm(p) <= 2 * op_norm(A) + 1e-12 for p in parts[1:])
    with pytest.raises(DomainError):
        delta_m(A, X, -1)


def test_delta_m_vanishes_beyond_support():
    rng = np.random.default_rng(3)
    amb = Region.chain(0, 5)
    A = random_local(rng, Region.chain(1, 3), amb)
    X = Region.of([(1,)])
    assert op_norm(delta_m(A, X, 2)) < 1e-12
    assert op_norm(delta_m(A, X, 3)) < 1e-12


def test_commutator_of_disjoint_supports_vanishes():
    rng = np.random.default_rng(4)
    A = random_local(rng, Region.chain(0, 2), CHAIN4)
    B = random_local(rng, Region.chain(2, 4), CHAIN4)
    assert op_norm(commutator(A, B)) < 1e-12
    C = LocalOperator.from_local(pauli_string("Z"), Region.of([(0,)]), CHAIN4)
    D = LocalOperator.from_local(pauli_string("X"), Region.of([(0,)]), CHAIN4)
    assert op_norm(commutator(C, D)) == pytest.approx(2.0)


def test_local_operator_validation_and_json():
    with pytest.raises(DomainError):
        LocalOperator(Region.chain(0, 5), CHAIN4, np.eye(16))
    with pytest.raises(DomainError):
        LocalOperator(CHAIN4, CHAIN4, np.eye(8))
    with pytest.raises(DomainError):
        LocalOperator(CHAIN4, CHAIN4, np.triu(np.ones((16, 16))), hermitian=True)
    A = random_local(np.random.default_rng(5), Region.chain(0, 2), CHAIN4, hermitian=False)
    B = LocalOperator.from_json(A.to_json())
    assert np.array_equal(A.matrix, B.matrix) and B.support == A.support


def test_embed_into_larger_region():
    A = LocalOperator.from_local(pauli_string("Y"), Region.of([(1,)]), Region.chain(0, 2))
    E = embed(A, CHAIN4)
    assert E.ambient == CHAIN4 and op_norm(E) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        embed(E, Region.chain(0, 2))


def test_spectral_norm_matches_svd():
    rng = np.random.default_rng(6)
    M = rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30))
    assert spectral_norm(M) == pytest.approx(np.linalg.svd(M, compute_uv=False)[0])


def test_fixed_order_sum_is_deterministic():
    rng = np.random.default_rng(7)
    mats = [rng.standard_normal((3, 3)) * 10.0**k for k in range(-8, 9)]
    assert np.array_equal(fixed_order_sum(mats), fixed_order_sum(list(mats)))
    with pytest.raises(DomainError):
        fixed_order_sum([])


def test_unitarity_defect():
    assert unitarity_defect(np.eye(4)) == 0.0
    assert unitarity_defect(2 * np.eye(2)) == pytest.approx(3.0)


def test_err_norm_bounds_operator_norm():
    rng = np.random.default_rng(8)
    M = rng.standard_normal((16, 16))
    assert err_norm(M) >= spectral_norm(M) - 1e-12


def test_block_space_round_trip_and_cond_expect():
    reg = Region.chain(0, 4)
    bs, ds = BlockSpace(reg), DenseSpace(reg)
    H2 = pauli_string("XX") + pauli_string("YY") + 0.3 * pauli_string("ZZ")
    sub = Region.chain(1, 3)
    B = bs.embed(H2, sub)
    D = ds.embed(H2, sub)
    assert np.allclose(bs.to_dense(B), D)
    keep = Region.chain(0, 2)
    assert np.allclose(bs.to_dense(bs.cond_expect(B, keep)), ds.cond_expect(D, keep))
    assert bs.norm(B) == pytest.approx(ds.norm(D))


def test_block_space_rejects_charge_violation():
    bs = make_space(Region.chain(0, 3), kind="block")
    with pytest.raises(BlockStructureError):
        bs.embed(pauli_string("X"), Region.of([(0,)]))
    with pytest.raises(DomainError):
        make_space(Region.chain(0, 3), kind="sparse")
