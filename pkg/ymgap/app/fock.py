"""
Degree-truncated bosonic Fock space.

Occupation-number multi-indices label the normalized Bargmann monomials
e_alpha = z^alpha / sqrt(alpha!). The basis keeps every multi-index of total
degree at most D, vacuum first, graded by degree and in descending
lexicographic order inside each degree.
"""
import logging
from dataclasses import dataclass
from math import comb
from typing import Dict, Iterator, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

logger = logging.getLogger(__name__)

MultiIndex = Tuple[int, ...]

# Keys of the mixed-radix lookup must stay inside int64.
_MAX_RADIX_KEY = 2**62


def _compositions(total: int, parts: int) -> Iterator[MultiIndex]:
    """Yield all ways to write total as an ordered sum of parts nonnegative ints, lex-descending."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class FockBasis:
    """
    Ordered list of multi-indices with total degree at most max_degree.

    Attributes:
        n_modes: Number of bosonic modes
        max_degree: Degree cutoff D
        indices: Integer array of shape (dim, n_modes), one row per basis state
        degrees: Total degree of every basis state
    """

    def __init__(self, n_modes: int, max_degree: int):
        if n_modes < 0:
            raise ValueError(f"n_modes must be nonnegative, got {n_modes}")
        if max_degree < 0:
            raise ValueError(f"max_degree must be nonnegative, got {max_degree}")
        self.n_modes = n_modes
        self.max_degree = max_degree

        rows = [alpha for d in range(max_degree + 1) for alpha in _compositions(d, n_modes)]
        self.indices = np.array(rows, dtype=np.int64).reshape(len(rows), n_modes)
        self.indices.setflags(write=False)
        self.degrees = self.indices.sum(axis=1)
        self.degrees.setflags(write=False)

        expected = comb(n_modes + max_degree, max_degree)
        if len(rows) != expected:
            raise RuntimeError(f"Basis enumeration produced {len(rows)} states, expected {expected}")

        self._radix: Optional[np.ndarray] = None
        self._table: Optional[Dict[MultiIndex, int]] = None
        if (max_degree + 1) ** max(n_modes, 1) < _MAX_RADIX_KEY:
            radix = (max_degree + 1) ** np.arange(n_modes - 1, -1, -1, dtype=np.int64)
            keys = self.indices @ radix if n_modes else np.zeros(len(rows), dtype=np.int64)
            self._radix = radix
            self._order = np.argsort(keys, kind="stable")
            self._sorted_keys = keys[self._order]
        else:
            self._table = {tuple(int(x) for x in row): i for i, row in enumerate(self.indices)}

    @property
    def dim(self) -> int:
        return self.indices.shape[0]

    def __len__(self) -> int:
        return self.dim

    def __repr__(self) -> str:
        return f"FockBasis(n_modes={self.n_modes}, max_degree={self.max_degree}, dim={self.dim})"

    def multi_index(self, position: int) -> MultiIndex:
        """Multi-index stored at a basis position."""
        return tuple(int(x) for x in self.indices[position])

    def lookup(self, alphas: np.ndarray) -> np.ndarray:
        """
        Find the basis positions of many multi-indices at once.

        Args:
            alphas: Integer array of shape (m, n_modes)

        Returns:
            Array of m positions, -1 where a multi-index is not in the basis
            (negative entry or degree above the cutoff)
        """
        alphas = np.asarray(alphas, dtype=np.int64).reshape(-1, self.n_modes)
        result = np.full(alphas.shape[0], -1, dtype=np.int64)
        valid = (alphas >= 0).all(axis=1) & (alphas.sum(axis=1) <= self.max_degree)
        if not valid.any():
            return result
        if self._radix is not None:
            keys = alphas[valid] @ self._radix if self.n_modes else np.zeros(valid.sum(), np.int64)
            slots = np.searchsorted(self._sorted_keys, keys)
            result[valid] = self._order[slots]
        else:
            for row in np.flatnonzero(valid):
                result[row] = self._table[tuple(int(x) for x in alphas[row])]
        return result

    def index_of(self, alpha: Sequence[int]) -> int:
        """
        Position of a single multi-index.

        Raises:
            KeyError: If alpha is not part of the basis
        """
        if len(alpha) != self.n_modes:
            raise ValueError(f"Multi-index {tuple(alpha)} has wrong length for {self.n_modes} modes")
        position = int(self.lookup(np.array([alpha]))[0])
        if position < 0:
            raise KeyError(f"Multi-index {tuple(alpha)} is not in {self!r}")
        return position

    def embedding(self, keep: Sequence[int]) -> Tuple["FockBasis", np.ndarray]:
        """
        Sub-basis on a subset of modes and where its states sit in this basis.

        Args:
            keep: Mode indices to keep, in the order they appear in the sub-basis

        Returns:
            Tuple of (sub_basis, positions) where positions[i] is the index in
            this basis of the i-th state of sub_basis (dropped modes empty)
        """
        keep = list(keep)
        if len(set(keep)) != len(keep):
            raise ValueError(f"Mode subset contains duplicates: {keep}")
        for j in keep:
            if not 0 <= j < self.n_modes:
                raise ValueError(f"Mode index {j} out of range for {self.n_modes} modes")
        sub = FockBasis(len(keep), self.max_degree)
        full = np.zeros((sub.dim, self.n_modes), dtype=np.int64)
        if keep:
            full[:, keep] = sub.indices
        return sub, self.lookup(full)


@dataclass
class FockOperator:
    """
    Sparse matrix of an operator on a FockBasis.

    The hermitian flag promises exact conjugate symmetry of the stored entries;
    it is checked on construction.
    """
    basis: FockBasis
    matrix: sp.csr_matrix
    hermitian: bool = False

    def __post_init__(self):
        self.matrix = sp.csr_matrix(self.matrix, dtype=complex)
        if self.matrix.shape != (self.basis.dim, self.basis.dim):
            raise ValueError(
                f"Matrix shape {self.matrix.shape} does not match basis dimension {self.basis.dim}"
            )
        if self.hermitian:
            skew = self.matrix - self.matrix.getH()
            if skew.count_nonzero():
                raise ValueError("Operator flagged hermitian is not exactly conjugate-symmetric")

    @property
    def dim(self) -> int:
        return self.basis.dim

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def adjoint(self) -> "FockOperator":
        return FockOperator(self.basis, self.matrix.getH().tocsr(), self.hermitian)

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        _check_same_basis(self, other)
        return FockOperator(self.basis, self.matrix @ other.matrix)

    def __add__(self, other: "FockOperator") -> "FockOperator":
        _check_same_basis(self, other)
        return FockOperator(
            self.basis, self.matrix + other.matrix, self.hermitian and other.hermitian
        )

    def __sub__(self, other: "FockOperator") -> "FockOperator":
        _check_same_basis(self, other)
        return FockOperator(
            self.basis, self.matrix - other.matrix, self.hermitian and other.hermitian
        )

    def scaled(self, factor: float) -> "FockOperator":
        """Multiply by a scalar; real factors keep the hermitian flag."""
        real = np.isreal(factor)
        return FockOperator(self.basis, self.matrix * factor, self.hermitian and bool(real))

    def shifted(self, constant: float) -> "FockOperator":
        """Add a real multiple of the identity."""
        eye = sp.identity(self.dim, dtype=complex, format="csr")
        return FockOperator(self.basis, self.matrix + constant * eye, self.hermitian)

    def norm_estimate(self) -> float:
        """Cheap upper bound on the spectral norm (max absolute row sum)."""
        if self.matrix.nnz == 0:
            return 0.0
        return float(abs(self.matrix).sum(axis=1).max())


def _check_same_basis(left: FockOperator, right: FockOperator) -> None:
    if left.basis is not right.basis and (
        left.basis.n_modes != right.basis.n_modes or left.basis.max_degree != right.basis.max_degree
    ):
        raise ValueError(f"Operators live on different bases: {left.basis!r} vs {right.basis!r}")


def enumerate_basis(n_modes: int, D: int) -> FockBasis:
    """
    Enumerate the degree-truncated basis.

    Args:
        n_modes: Number of modes, at least 1
        D: Degree cutoff, at least 0

    Returns:
        FockBasis with C(n_modes + D, D) states in graded lex order

    Raises:
        ValueError: If n_modes < 1 or D < 0
    """
    if n_modes < 1:
        raise ValueError(f"n_modes must be at least 1, got {n_modes}")
    if D < 0:
        raise ValueError(f"D must be nonnegative, got {D}")
    basis = FockBasis(n_modes, D)
    logger.debug("Enumerated %r", basis)
    return basis


def _check_mode(basis: FockBasis, j: int) -> None:
    if not 0 <= j < basis.n_modes:
        raise ValueError(f"Mode index {j} out of range for {basis.n_modes} modes")


def creation_matrix(basis: FockBasis, j: int) -> FockOperator:
    """
    Creation operator a_j^dagger, overflow past degree D dropped.

    Args:
        basis: Basis to act on
        j: Mode index

    Returns:
        FockOperator with entry sqrt(alpha_j + 1) at (alpha + 1_j, alpha)
    """
    _check_mode(basis, j)
    cols = np.flatnonzero(basis.degrees < basis.max_degree)
    raised = basis.indices[cols].copy()
    raised[:, j] += 1
    rows = basis.lookup(raised)
    values = np.sqrt(raised[:, j].astype(float))
    matrix = sp.coo_matrix((values, (rows, cols)), shape=(basis.dim, basis.dim))
    return FockOperator(basis, matrix.tocsr())


def annihilation_matrix(basis: FockBasis, j: int) -> FockOperator:
    """Annihilation operator a_j, the conjugate transpose of the creation matrix."""
    return creation_matrix(basis, j).adjoint()


def number_operator(basis: FockBasis, shifted: bool = False) -> FockOperator:
    """
    Number operator N = sum_j a_j^dagger a_j, diagonal with entry |alpha|.

    Args:
        basis: Basis to act on
        shifted: Return N + 1 instead, whose one-mode spectrum starts at 1

    Returns:
        Hermitian diagonal FockOperator
    """
    diagonal = basis.degrees.astype(float) + (1.0 if shifted else 0.0)
    return FockOperator(basis, sp.diags(diagonal, format="csr"), hermitian=True)


def coherent_vector(basis: FockBasis, zeta: Sequence[complex]) -> np.ndarray:
    """
    Truncated exponential vector e^zeta, component zeta^alpha / sqrt(alpha!).

    The vector is not normalized.
    """
    zeta = np.asarray(zeta, dtype=complex).reshape(-1)
    if zeta.shape[0] != basis.n_modes:
        raise ValueError(f"zeta has {zeta.shape[0]} entries, basis has {basis.n_modes} modes")
    if not np.all(np.isfinite(zeta)):
        raise ValueError("zeta must be finite")
    powers = np.prod(zeta[np.newaxis, :] ** basis.indices, axis=1)
    log_norms = 0.5 * gammaln(basis.indices + 1.0).sum(axis=1)
    return powers * np.exp(-log_norms)


def coherent_tail(zeta: Sequence[complex], D: int) -> float:
    """
    Norm of the part of e^zeta above degree D.

    Equals sqrt(sum_{k > D} r^(2k) / k!) with r = |zeta|.
    """
    r2 = float(np.sum(np.abs(np.asarray(zeta, dtype=complex)) ** 2))
    if r2 == 0.0:
        return 0.0
    k = D + 1
    term = np.exp(k * np.log(r2) - gammaln(k + 1.0))
    total = 0.0
    while term > 1e-300 and (total == 0.0 or term > 1e-18 * total):
        total += term
        k += 1
        term *= r2 / k
    return float(np.sqrt(total))
