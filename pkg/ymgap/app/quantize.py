"""
Symbol to operator maps.

Every map returns the exact compression P Q P of the untruncated operator onto
the degree-D block: matrix elements come from closed-form factorial ratios, so
no intermediate state is ever cut off.

Conventions: z* is paired with the creation operator and z with the
annihilation operator. A term z*^beta z^alpha quantizes to

    normal:     (a^dagger)^beta a^alpha
    antinormal: a^alpha (a^dagger)^beta      (creators act first)
    weyl:       via convert_ordering(weyl -> normal)
"""
import logging
from math import factorial
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from ymgap.app.fock import (
    FockBasis,
    FockOperator,
    annihilation_matrix,
    coherent_tail,
    coherent_vector,
    creation_matrix,
)
from ymgap.app.models import OrderingTag, TruncationError
from ymgap.app.symbols import PolySymbol, convert_ordering

logger = logging.getLogger(__name__)

# Largest per-mode occupation whose factorial is a finite double.
MAX_OCCUPATION = 170
_FACTORIALS = np.array([float(factorial(k)) for k in range(MAX_OCCUPATION + 1)])
_SQRT_FACTORIALS = np.sqrt(_FACTORIALS)


def _check_modes(p: PolySymbol, basis: FockBasis) -> None:
    if p.n_modes != basis.n_modes:
        raise ValueError(
            f"Symbol has {p.n_modes} modes but basis has {basis.n_modes} modes"
        )


def _check_occupation(highest: int) -> None:
    if highest > MAX_OCCUPATION:
        raise TruncationError(
            f"Occupation {highest} exceeds the factorial table limit {MAX_OCCUPATION}"
        )


def _term_entries(beta: np.ndarray, alpha: np.ndarray, basis: FockBasis, antinormal: bool):
    """Rows, columns and values of one monomial operator compressed to the basis."""
    delta = basis.indices
    if antinormal:
        top = delta + beta
        gamma = top - alpha
    else:
        top = delta - alpha
        gamma = top + beta
    ok = (gamma >= 0).all(axis=1) & (top >= 0).all(axis=1)
    cols = np.flatnonzero(ok)
    rows = basis.lookup(gamma[cols])
    inside = rows >= 0
    cols, rows = cols[inside], rows[inside]
    d, g, t = delta[cols], gamma[cols], top[cols]
    _check_occupation(max(int(t.max(initial=0)), basis.max_degree))
    if antinormal:
        # (delta + beta)! / sqrt(delta! gamma!)
        values = np.prod(_FACTORIALS[t] / _SQRT_FACTORIALS[d] / _SQRT_FACTORIALS[g], axis=1)
    else:
        # sqrt(delta! gamma!) / (delta - alpha)!
        values = np.prod(_SQRT_FACTORIALS[d] * _SQRT_FACTORIALS[g] / _FACTORIALS[t], axis=1)
    return rows, cols, values


def _hermitian_matrix(matrix: sp.spmatrix) -> sp.csr_matrix:
    """Rebuild an (analytically) Hermitian matrix from its upper triangle and real diagonal."""
    upper = sp.triu(matrix, k=1, format="csr")
    diagonal = sp.diags(np.real(matrix.diagonal()).astype(complex), format="csr")
    return (upper + upper.getH() + diagonal).tocsr()


def _assemble(p: PolySymbol, basis: FockBasis, antinormal: bool) -> FockOperator:
    _check_modes(p, basis)
    rows, cols, values = [], [], []
    for (beta, alpha), coeff in p.terms.items():
        r, c, v = _term_entries(np.array(beta), np.array(alpha), basis, antinormal)
        rows.append(r)
        cols.append(c)
        values.append(complex(coeff) * v)
    if rows:
        matrix = sp.coo_matrix(
            (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))),
            shape=(basis.dim, basis.dim),
            dtype=complex,
        ).tocsr()
    else:
        matrix = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    hermitian = p.is_real_diagonal()
    if hermitian:
        matrix = _hermitian_matrix(matrix)
    return FockOperator(basis, matrix, hermitian=hermitian)


def quantize(
    p: PolySymbol, tag: Union[OrderingTag, str], basis: FockBasis
) -> FockOperator:
    """
    Quantize a polynomial symbol in the given ordering.

    Args:
        p: Symbol on basis.n_modes modes
        tag: Ordering the symbol is written in
        basis: Truncated Fock basis

    Returns:
        FockOperator, flagged hermitian when p is real-diagonal

    Raises:
        ValueError: If the mode counts differ or the tag is unknown
    """
    tag = OrderingTag(tag)
    if tag == OrderingTag.WEYL:
        return _assemble(convert_ordering(p, OrderingTag.WEYL, OrderingTag.NORMAL), basis, False)
    operator = _assemble(p, basis, tag == OrderingTag.ANTINORMAL)
    logger.debug(
        "Quantized %d terms (%s) on %r: nnz=%d", len(p.terms), tag.value, basis, operator.matrix.nnz
    )
    return operator


def toeplitz_quantize(
    p: PolySymbol, basis: FockBasis, margin: Optional[int] = None
) -> FockOperator:
    """
    Berezin-Toeplitz operator: multiply by p on an enlarged basis, then project.

    On the enlarged basis of degree D + margin each term z*^beta z^alpha becomes
    a^alpha (a^dagger)^beta built from truncated ladder matrices: the z* factors
    raise first, the z factors lower afterwards. The degree-D block is kept.

    Args:
        p: Symbol on basis.n_modes modes
        basis: Target basis of degree D
        margin: Extra degrees in the working basis, deg(p) by default. With
            margin >= deg(p) the result equals antinormal quantization exactly;
            smaller margins lose the states near the truncation edge.

    Returns:
        FockOperator on basis
    """
    _check_modes(p, basis)
    if margin is None:
        margin = p.degree
    if margin < 0:
        raise ValueError(f"margin must be nonnegative, got {margin}")
    big = FockBasis(basis.n_modes, basis.max_degree + margin)
    create = [creation_matrix(big, j).matrix for j in range(basis.n_modes)]
    destroy = [annihilation_matrix(big, j).matrix for j in range(basis.n_modes)]
    identity = sp.identity(big.dim, dtype=complex, format="csr")

    total = sp.csr_matrix((big.dim, big.dim), dtype=complex)
    for (beta, alpha), coeff in p.terms.items():
        product = identity
        for j, power in enumerate(beta):
            for _ in range(power):
                product = create[j] @ product
        for j, power in enumerate(alpha):
            for _ in range(power):
                product = destroy[j] @ product
        total = total + complex(coeff) * product

    # The degree-D states occupy the first basis.dim positions of the graded order.
    block = total[: basis.dim, : basis.dim]
    hermitian = p.is_real_diagonal()
    if hermitian:
        block = _hermitian_matrix(block)
    return FockOperator(basis, block.tocsr(), hermitian=hermitian)


def toeplitz_edge_defect(p: PolySymbol, basis: FockBasis, margin: int = 0) -> np.ndarray:
    """
    Measure where the Toeplitz route departs from antinormal quantization.

    Args:
        p: Symbol on basis.n_modes modes
        basis: Target basis of degree D
        margin: Enlargement used for the Toeplitz route

    Returns:
        Array of length D + 1; entry d is the largest absolute entry difference
        among matrix elements whose row or column has degree d and neither has
        a larger degree
    """
    toeplitz = toeplitz_quantize(p, basis, margin).toarray()
    reference = quantize(p, OrderingTag.ANTINORMAL, basis).toarray()
    difference = np.abs(toeplitz - reference)
    level = np.maximum.outer(basis.degrees, basis.degrees)
    defect = np.zeros(basis.max_degree + 1)
    for d in range(basis.max_degree + 1):
        mask = level == d
        if mask.any():
            defect[d] = difference[mask].max()
    return defect


def galerkin_compress(Q: FockOperator, keep: Sequence[int]) -> FockOperator:
    """
    Compress an operator to the multi-indices supported on a subset of modes.

    Args:
        Q: Operator on the full basis
        keep: Mode indices to keep; the sub-basis orders them as given

    Returns:
        FockOperator on the sub-basis of len(keep) modes and the same degree
        cutoff (keep = [] gives the 1x1 vacuum block)
    """
    sub, positions = Q.basis.embedding(keep)
    block = Q.matrix[positions][:, positions]
    return FockOperator(sub, block.tocsr(), hermitian=Q.hermitian)


def coherent_matrix_element(
    Q: FockOperator,
    zeta: Sequence[complex],
    eta: Sequence[complex],
    tol: float = 1e-8,
) -> complex:
    """
    Matrix element <e^zeta | Q | e^eta> between truncated exponential vectors.

    Args:
        Q: Operator on a truncated basis
        zeta: Left coherent label
        eta: Right coherent label
        tol: Largest tolerated norm of the exponential tail past degree D

    Returns:
        The complex matrix element

    Raises:
        TruncationError: If either exponential vector loses more than tol past
            the degree cutoff
    """
    D = Q.basis.max_degree
    tail = max(coherent_tail(zeta, D), coherent_tail(eta, D))
    if tail > tol:
        raise TruncationError(
            f"Exponential tail {tail:.3e} past degree {D} exceeds tolerance {tol:.1e}; "
            "raise D or shrink the coherent labels"
        )
    left = coherent_vector(Q.basis, zeta)
    right = coherent_vector(Q.basis, eta)
    return complex(np.vdot(left, Q.matrix @ right))
