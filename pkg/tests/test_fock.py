"""Tests for the truncated Fock basis and ladder operators."""
from math import comb, exp

import numpy as np
import pytest
import scipy.sparse as sp

from ymgap.app.fock import (
    FockBasis,
    FockOperator,
    annihilation_matrix,
    coherent_tail,
    coherent_vector,
    creation_matrix,
    enumerate_basis,
    number_operator,
)


def test_graded_lex_order():
    basis = enumerate_basis(2, 2)
    assert [basis.multi_index(i) for i in range(basis.dim)] == [
        (0, 0),
        (1, 0),
        (0, 1),
        (2, 0),
        (1, 1),
        (0, 2),
    ]


@pytest.mark.parametrize("n_modes, D", [(1, 0), (1, 7), (3, 4), (9, 3), (5, 0)])
def test_dimension_is_binomial(n_modes, D):
    basis = enumerate_basis(n_modes, D)
    assert basis.dim == comb(n_modes + D, D)
    assert basis.degrees[0] == 0
    assert np.all(np.diff(basis.degrees) >= 0)


def test_enumerate_rejects_bad_sizes():
    with pytest.raises(ValueError):
        enumerate_basis(0, 3)
    with pytest.raises(ValueError):
        enumerate_basis(2, -1)


def test_lookup_and_index_of():
    basis = enumerate_basis(3, 3)
    for position in range(basis.dim):
        assert basis.index_of(basis.multi_index(position)) == position
    missing = basis.lookup(np.array([[4, 0, 0], [-1, 0, 0], [1, 1, 1]]))
    assert missing[0] == -1 and missing[1] == -1 and missing[2] >= 0
    with pytest.raises(KeyError):
        basis.index_of((2, 2, 0))


def test_embedding_places_dropped_modes_empty():
    basis = enumerate_basis(3, 2)
    sub, positions = basis.embedding([2, 0])
    assert sub.n_modes == 2 and sub.max_degree == 2
    for i, position in enumerate(positions):
        beta = basis.multi_index(position)
        assert beta[1] == 0
        assert (beta[2], beta[0]) == sub.multi_index(i)
    empty, vacuum = basis.embedding([])
    assert empty.dim == 1 and list(vacuum) == [0]


def test_creation_entries():
    basis = enumerate_basis(1, 4)
    create = creation_matrix(basis, 0).toarray()
    for n in range(4):
        assert create[n + 1, n] == pytest.approx(np.sqrt(n + 1))
    # overflow past the cutoff is dropped
    assert np.all(create[:, 4] == 0)


def test_canonical_commutator_below_cutoff():
    basis = enumerate_basis(2, 4)
    for j in range(2):
        a = annihilation_matrix(basis, j).toarray()
        adag = creation_matrix(basis, j).toarray()
        commutator = a @ adag - adag @ a
        inner = np.flatnonzero(basis.degrees < basis.max_degree)
        block = commutator[np.ix_(inner, inner)]
        assert np.allclose(block, np.eye(len(inner)))


def test_number_operator_is_degree():
    basis = enumerate_basis(3, 3)
    N = number_operator(basis)
    assert N.hermitian
    assert np.allclose(N.toarray().diagonal(), basis.degrees)
    assert np.allclose(number_operator(basis, shifted=True).toarray().diagonal(), basis.degrees + 1)


def test_hermitian_flag_is_checked():
    basis = enumerate_basis(1, 3)
    create = creation_matrix(basis, 0)
    with pytest.raises(ValueError):
        FockOperator(basis, create.matrix, hermitian=True)
    summed = create + create.adjoint()
    assert np.allclose(summed.toarray(), summed.toarray().conj().T)


def test_operator_shape_mismatch():
    with pytest.raises(ValueError):
        FockOperator(FockBasis(1, 2), sp.identity(5, format="csr"))


def test_coherent_vector_norm_plus_tail():
    zeta = [0.7 + 0.2j, -0.4j]
    r2 = sum(abs(z) ** 2 for z in zeta)
    for D in (2, 5, 12):
        vector = coherent_vector(enumerate_basis(2, D), zeta)
        tail = coherent_tail(zeta, D)
        assert np.vdot(vector, vector).real + tail**2 == pytest.approx(exp(r2), rel=1e-12)


def test_coherent_vector_components():
    basis = enumerate_basis(1, 5)
    vector = coherent_vector(basis, [0.5])
    expected = [0.5**n / np.sqrt(float(np.prod(range(1, n + 1)))) for n in range(6)]
    assert np.allclose(vector, expected)


def test_coherent_tail_vanishes_at_origin():
    assert coherent_tail([0.0, 0.0], 3) == 0.0
