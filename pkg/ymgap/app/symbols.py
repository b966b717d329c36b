"""
Polynomial symbols in conjugate variable pairs (z*, z).

A PolySymbol is a finitely supported map (beta, alpha) -> coefficient standing
for sum c * z*^beta z^alpha. Coefficients may be int, Fraction, float or
complex; integer and Fraction inputs stay exact through every operation here,
which the oracle tests rely on.

Composition of quantized operators is encoded by three star products. With
per-mode weights (w_plus for pairing d_z on the left factor with d_z* on the
right one, w_minus for d_z* on the left with d_z on the right) they read

    p2 * p1 = sum_{mu, nu} w_plus^|mu| w_minus^|nu| / (mu! nu!)
              (d_z^mu d_z*^nu p2) (d_z*^mu d_z^nu p1)

normal: (1, 0), antinormal: (0, -1), weyl: (1/2, -1/2).
"""
import itertools
import logging
from fractions import Fraction
from math import factorial, perm
from numbers import Number
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ymgap.app.models import OrderingTag

logger = logging.getLogger(__name__)

Coefficient = Union[int, Fraction, float, complex]
MultiIndex = Tuple[int, ...]
TermKey = Tuple[MultiIndex, MultiIndex]

HALF = Fraction(1, 2)

# t such that sigma_to = exp(t * laplacian) sigma_from
_TRANSFORM_TIMES: Dict[Tuple[OrderingTag, OrderingTag], Fraction] = {
    (OrderingTag.NORMAL, OrderingTag.WEYL): -HALF,
    (OrderingTag.NORMAL, OrderingTag.ANTINORMAL): Fraction(-1),
    (OrderingTag.ANTINORMAL, OrderingTag.WEYL): HALF,
    (OrderingTag.WEYL, OrderingTag.NORMAL): HALF,
    (OrderingTag.ANTINORMAL, OrderingTag.NORMAL): Fraction(1),
    (OrderingTag.WEYL, OrderingTag.ANTINORMAL): -HALF,
}

_STAR_WEIGHTS: Dict[OrderingTag, Tuple[Fraction, Fraction]] = {
    OrderingTag.NORMAL: (Fraction(1), Fraction(0)),
    OrderingTag.ANTINORMAL: (Fraction(0), Fraction(-1)),
    OrderingTag.WEYL: (HALF, -HALF),
}


def _conj(value: Coefficient) -> Coefficient:
    return value.conjugate()


def _is_zero(value: Coefficient) -> bool:
    return value == 0


class PolySymbol:
    """
    Polynomial in z*_j, z_j for j < n_modes.

    Attributes:
        n_modes: Number of conjugate pairs
        terms: Mapping (beta, alpha) -> nonzero coefficient, beta the z* exponents
    """

    __slots__ = ("n_modes", "terms")

    def __init__(self, n_modes: int, terms: Optional[Dict[TermKey, Coefficient]] = None):
        if n_modes < 0:
            raise ValueError(f"n_modes must be nonnegative, got {n_modes}")
        self.n_modes = n_modes
        self.terms: Dict[TermKey, Coefficient] = {}
        for (beta, alpha), coeff in (terms or {}).items():
            beta, alpha = tuple(int(b) for b in beta), tuple(int(a) for a in alpha)
            if len(beta) != n_modes or len(alpha) != n_modes:
                raise ValueError(
                    f"Term ({beta}, {alpha}) does not have {n_modes} entries per multi-index"
                )
            if min(beta + alpha, default=0) < 0:
                raise ValueError(f"Negative exponent in term ({beta}, {alpha})")
            if not _is_zero(coeff):
                self.terms[(beta, alpha)] = coeff

    # construction helpers

    @classmethod
    def zero(cls, n_modes: int) -> "PolySymbol":
        return cls(n_modes)

    @classmethod
    def constant(cls, n_modes: int, value: Coefficient) -> "PolySymbol":
        empty = (0,) * n_modes
        return cls(n_modes, {(empty, empty): value})

    @classmethod
    def variable(cls, n_modes: int, j: int, conjugate: bool = False) -> "PolySymbol":
        """The coordinate z_j, or z*_j when conjugate is set."""
        if not 0 <= j < n_modes:
            raise ValueError(f"Mode index {j} out of range for {n_modes} modes")
        unit = tuple(1 if i == j else 0 for i in range(n_modes))
        empty = (0,) * n_modes
        key = (unit, empty) if conjugate else (empty, unit)
        return cls(n_modes, {key: 1})

    @classmethod
    def monomial(
        cls, beta: Sequence[int], alpha: Sequence[int], coeff: Coefficient = 1
    ) -> "PolySymbol":
        return cls(len(beta), {(tuple(beta), tuple(alpha)): coeff})

    # basic queries

    @property
    def degree(self) -> int:
        """Largest |alpha| + |beta| over the stored terms, 0 for the zero symbol."""
        return max((sum(b) + sum(a) for b, a in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, beta: Sequence[int], alpha: Sequence[int]) -> Coefficient:
        return self.terms.get((tuple(beta), tuple(alpha)), 0)

    def is_real_diagonal(self, tol: float = 0.0) -> bool:
        """
        True if coeff(beta, alpha) = conj(coeff(alpha, beta)) for all pairs.

        Symbols with this property take real values on the diagonal z* = conj(z)
        and quantize to Hermitian operators.
        """
        for (beta, alpha), coeff in self.terms.items():
            mirror = self.terms.get((alpha, beta), 0)
            if abs(coeff - _conj(mirror)) > tol:
                return False
        return True

    def homogeneous_part(self, d: int) -> "PolySymbol":
        """Terms of total degree exactly d."""
        return PolySymbol(
            self.n_modes, {k: c for k, c in self.terms.items() if sum(k[0]) + sum(k[1]) == d}
        )

    def degrees(self) -> List[int]:
        """Sorted list of the total degrees present."""
        return sorted({sum(b) + sum(a) for b, a in self.terms})

    def evaluate(self, z: Sequence[complex]) -> complex:
        """Value on the diagonal, z* replaced by the complex conjugate of z."""
        z = np.asarray(z, dtype=complex).reshape(-1)
        if z.shape[0] != self.n_modes:
            raise ValueError(f"Point has {z.shape[0]} entries, symbol has {self.n_modes} modes")
        zc = np.conj(z)
        total = 0j
        for (beta, alpha), coeff in self.terms.items():
            total += complex(coeff) * np.prod(zc**beta) * np.prod(z**alpha)
        return total

    # arithmetic

    def _check_modes(self, other: "PolySymbol") -> None:
        if self.n_modes != other.n_modes:
            raise ValueError(
                f"Mode count mismatch: {self.n_modes} vs {other.n_modes}"
            )

    def _coerce(self, other) -> "PolySymbol":
        if isinstance(other, PolySymbol):
            self._check_modes(other)
            return other
        if isinstance(other, Number):
            return PolySymbol.constant(self.n_modes, other)
        return NotImplemented

    def __add__(self, other) -> "PolySymbol":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self.terms)
        for key, coeff in other.terms.items():
            terms[key] = terms.get(key, 0) + coeff
        return PolySymbol(self.n_modes, terms)

    __radd__ = __add__

    def __neg__(self) -> "PolySymbol":
        return PolySymbol(self.n_modes, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other) -> "PolySymbol":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "PolySymbol":
        return (-self) + other

    def __mul__(self, other) -> "PolySymbol":
        if isinstance(other, Number):
            return self.scale(other)
        if not isinstance(other, PolySymbol):
            return NotImplemented
        return multiply(self, other)

    def __rmul__(self, other) -> "PolySymbol":
        if isinstance(other, Number):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, exponent: int) -> "PolySymbol":
        if exponent < 0:
            raise ValueError(f"Negative power {exponent} of a polynomial symbol")
        result = PolySymbol.constant(self.n_modes, 1)
        for _ in range(exponent):
            result = multiply(result, self)
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Number):
            other = PolySymbol.constant(self.n_modes, other)
        if not isinstance(other, PolySymbol):
            return NotImplemented
        return self.n_modes == other.n_modes and self.terms == other.terms

    __hash__ = None

    def scale(self, factor: Coefficient) -> "PolySymbol":
        return PolySymbol(self.n_modes, {k: factor * c for k, c in self.terms.items()})

    def adjoint(self) -> "PolySymbol":
        """Symbol of the adjoint operator: swap z and z*, conjugate coefficients."""
        return PolySymbol(self.n_modes, {(a, b): _conj(c) for (b, a), c in self.terms.items()})

    def hermitian_part(self) -> "PolySymbol":
        """(p + p.adjoint()) / 2, exactly real-diagonal."""
        return (self + self.adjoint()).scale(HALF)

    def diff(self, j: int, conjugate: bool = False) -> "PolySymbol":
        return diff(self, j, conjugate)

    def chop(self, tol: float = 1e-14) -> "PolySymbol":
        """Drop coefficients with absolute value at most tol."""
        return PolySymbol(self.n_modes, {k: c for k, c in self.terms.items() if abs(c) > tol})

    def allclose(self, other: "PolySymbol", atol: float = 1e-12) -> bool:
        """Coefficientwise comparison with absolute tolerance."""
        self._check_modes(other)
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.coefficient(*k) - other.coefficient(*k)) <= atol for k in keys)

    def max_abs_coefficient(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def __repr__(self) -> str:
        if not self.terms:
            return f"PolySymbol({self.n_modes}, 0)"
        parts = [f"{c}*{_monomial_text(b, a)}" for (b, a), c in sorted(self.terms.items())]
        return f"PolySymbol({self.n_modes}, {' + '.join(parts)})"


def _monomial_text(beta: MultiIndex, alpha: MultiIndex) -> str:
    factors = [f"z*{j}^{e}" for j, e in enumerate(beta) if e]
    factors += [f"z{j}^{e}" for j, e in enumerate(alpha) if e]
    return "·".join(factors) or "1"


def add(p: PolySymbol, q: PolySymbol) -> PolySymbol:
    p._check_modes(q)
    return p + q


def scale(p: PolySymbol, factor: Coefficient) -> PolySymbol:
    return p.scale(factor)


def multiply(p: PolySymbol, q: PolySymbol) -> PolySymbol:
    """Plain pointwise product of two symbols."""
    p._check_modes(q)
    terms: Dict[TermKey, Coefficient] = {}
    for (b1, a1), c1 in p.terms.items():
        for (b2, a2), c2 in q.terms.items():
            key = (
                tuple(x + y for x, y in zip(b1, b2)),
                tuple(x + y for x, y in zip(a1, a2)),
            )
            terms[key] = terms.get(key, 0) + c1 * c2
    return PolySymbol(p.n_modes, terms)


def diff(p: PolySymbol, j: int, conjugate: bool = False) -> PolySymbol:
    """
    Formal partial derivative.

    Args:
        p: Symbol to differentiate
        j: Mode index
        conjugate: Differentiate in z*_j instead of z_j

    Returns:
        The derivative as a new symbol
    """
    if not 0 <= j < p.n_modes:
        raise ValueError(f"Mode index {j} out of range for {p.n_modes} modes")
    terms: Dict[TermKey, Coefficient] = {}
    for (beta, alpha), coeff in p.terms.items():
        exps = beta if conjugate else alpha
        if exps[j] == 0:
            continue
        lowered = tuple(e - 1 if i == j else e for i, e in enumerate(exps))
        key = (lowered, alpha) if conjugate else (beta, lowered)
        terms[key] = terms.get(key, 0) + exps[j] * coeff
    return PolySymbol(p.n_modes, terms)


def laplacian(p: PolySymbol) -> PolySymbol:
    """Trace operator sum_j d_z*_j d_z_j applied once."""
    terms: Dict[TermKey, Coefficient] = {}
    for (beta, alpha), coeff in p.terms.items():
        for j in range(p.n_modes):
            if beta[j] and alpha[j]:
                key = (
                    tuple(e - (i == j) for i, e in enumerate(beta)),
                    tuple(e - (i == j) for i, e in enumerate(alpha)),
                )
                terms[key] = terms.get(key, 0) + beta[j] * alpha[j] * coeff
    return PolySymbol(p.n_modes, terms)


def weierstrass_transform(p: PolySymbol, t: Union[int, Fraction, float]) -> PolySymbol:
    """
    Heat-type transform exp(t * laplacian) on a polynomial.

    The series terminates after deg(p) / 2 terms.

    Args:
        p: Symbol to transform
        t: Transform time; int and Fraction keep rational coefficients exact

    Returns:
        sum_m t^m / m! laplacian^m p
    """
    if t == 0:
        return PolySymbol(p.n_modes, p.terms)
    result = p
    current = p
    m = 0
    while not current.is_zero():
        m += 1
        factor = t / m if not isinstance(t, int) else Fraction(t, m)
        current = laplacian(current).scale(factor)
        result = result + current
    return result


def convert_ordering(
    p: PolySymbol, source: Union[OrderingTag, str], target: Union[OrderingTag, str]
) -> PolySymbol:
    """
    Rewrite the symbol of an operator from one ordering to another.

    Args:
        p: Symbol in the source ordering
        source: Ordering p is written in
        target: Ordering to convert to

    Returns:
        Symbol of the same operator in the target ordering

    Raises:
        ValueError: If either ordering tag is unknown
    """
    source, target = OrderingTag(source), OrderingTag(target)
    if source == target:
        return PolySymbol(p.n_modes, p.terms)
    return weierstrass_transform(p, _TRANSFORM_TIMES[(source, target)])


def _mode_contractions(
    b2: int, a2: int, b1: int, a1: int, w_plus: Fraction, w_minus: Fraction
) -> List[Tuple[int, int, Coefficient]]:
    """Single-mode terms (z* exponent, z exponent, factor) of a weighted star product."""
    out = []
    for mu in range(min(a2, b1) + 1):
        if mu and w_plus == 0:
            break
        f_mu = w_plus**mu * perm(a2, mu) * perm(b1, mu) / factorial(mu)
        for nu in range(min(b2, a1) + 1):
            if nu and w_minus == 0:
                break
            f_nu = w_minus**nu * perm(b2, nu) * perm(a1, nu) / factorial(nu)
            out.append((b2 - nu + b1 - mu, a2 - mu + a1 - nu, f_mu * f_nu))
    return out


def star_product(p2: PolySymbol, p1: PolySymbol, ordering: Union[OrderingTag, str]) -> PolySymbol:
    """
    Symbol of the operator product Q2 Q1 in the given ordering.

    Args:
        p2: Symbol of the left factor
        p1: Symbol of the right factor
        ordering: Ordering both inputs and the output are written in

    Returns:
        Star product of p2 and p1
    """
    p2._check_modes(p1)
    w_plus, w_minus = _STAR_WEIGHTS[OrderingTag(ordering)]
    terms: Dict[TermKey, Coefficient] = {}
    for (b2, a2), c2 in p2.terms.items():
        for (b1, a1), c1 in p1.terms.items():
            per_mode = [
                _mode_contractions(b2[j], a2[j], b1[j], a1[j], w_plus, w_minus)
                for j in range(p2.n_modes)
            ]
            base = c2 * c1
            for combo in itertools.product(*per_mode):
                beta = tuple(item[0] for item in combo)
                alpha = tuple(item[1] for item in combo)
                factor = 1
                for item in combo:
                    factor = factor * item[2]
                key = (beta, alpha)
                terms[key] = terms.get(key, 0) + _exact_product(factor, base)
    return PolySymbol(p2.n_modes, terms)


def _exact_product(factor: Fraction, coeff: Coefficient) -> Coefficient:
    if isinstance(coeff, (int, Fraction)):
        result = factor * coeff
        return int(result) if result.denominator == 1 else result
    return float(factor) * coeff


def star_normal(p2: PolySymbol, p1: PolySymbol) -> PolySymbol:
    """Normal-ordered composition: sum_m 1/m! d_z^m p2 d_z*^m p1."""
    return star_product(p2, p1, OrderingTag.NORMAL)


def star_antinormal(p2: PolySymbol, p1: PolySymbol) -> PolySymbol:
    """Anti-normal composition: sum_m (-1)^m/m! d_z*^m p2 d_z^m p1."""
    return star_product(p2, p1, OrderingTag.ANTINORMAL)


def star_weyl(p2: PolySymbol, p1: PolySymbol) -> PolySymbol:
    """
    Weyl (Moyal) composition exp(Omega) on the doubled variables, restricted to the diagonal.

    Omega = (1/2)(d_z2 d_z1* - d_z2* d_z1); both halves commute, so the
    exponential factors into the weighted contraction above.
    """
    return star_product(p2, p1, OrderingTag.WEYL)


def restrict_modes(p: PolySymbol, keep: Iterable[int]) -> PolySymbol:
    """
    Cylindrical pullback: set z_j = z*_j = 0 for dropped modes.

    Args:
        p: Symbol to restrict
        keep: Modes to keep; the result is indexed in this order

    Returns:
        Symbol on len(keep) modes
    """
    keep = list(keep)
    for j in keep:
        if not 0 <= j < p.n_modes:
            raise ValueError(f"Mode index {j} out of range for {p.n_modes} modes")
    dropped = [j for j in range(p.n_modes) if j not in set(keep)]
    terms: Dict[TermKey, Coefficient] = {}
    for (beta, alpha), coeff in p.terms.items():
        if any(beta[j] or alpha[j] for j in dropped):
            continue
        key = (tuple(beta[j] for j in keep), tuple(alpha[j] for j in keep))
        terms[key] = terms.get(key, 0) + coeff
    return PolySymbol(len(keep), terms)


def embed_modes(p: PolySymbol, positions: Sequence[int], n_modes: int) -> PolySymbol:
    """Inverse of restrict_modes: place mode i of p at mode positions[i] of a larger symbol."""
    if len(positions) != p.n_modes:
        raise ValueError(f"Need {p.n_modes} positions, got {len(positions)}")
    terms: Dict[TermKey, Coefficient] = {}
    for (beta, alpha), coeff in p.terms.items():
        big_beta, big_alpha = [0] * n_modes, [0] * n_modes
        for i, j in enumerate(positions):
            big_beta[j], big_alpha[j] = beta[i], alpha[i]
        terms[(tuple(big_beta), tuple(big_alpha))] = coeff
    return PolySymbol(n_modes, terms)


# text format


def _format_index(index: MultiIndex) -> str:
    return ",".join(str(e) for e in index) if index else "-"


def _parse_index(text: str) -> MultiIndex:
    return () if text == "-" else tuple(int(e) for e in text.split(","))


def _format_coefficient(coeff: Coefficient) -> str:
    if isinstance(coeff, Fraction):
        return str(coeff)
    if isinstance(coeff, complex):
        return repr(coeff).replace(" ", "")
    return repr(coeff)


def _parse_coefficient(text: str) -> Coefficient:
    if "/" in text:
        value = Fraction(text)
        return int(value) if value.denominator == 1 else value
    for parse in (int, float, complex):
        try:
            return parse(text)
        except ValueError:
            continue
    raise ValueError(f"Cannot parse coefficient {text!r}")


def dumps_symbol(p: PolySymbol) -> str:
    """
    Serialize to the plain-text term list.

    First line `# n_modes <n>`, then one `coeff beta alpha` line per term,
    sorted by degree and exponents. Multi-indices are comma separated.
    """
    lines = [f"# n_modes {p.n_modes}"]
    for (beta, alpha) in sorted(p.terms, key=lambda k: (sum(k[0]) + sum(k[1]), k[0], k[1])):
        coeff = p.terms[(beta, alpha)]
        lines.append(f"{_format_coefficient(coeff)} {_format_index(beta)} {_format_index(alpha)}")
    return "\n".join(lines) + "\n"


def loads_symbol(text: str) -> PolySymbol:
    """
    Parse the plain-text term list written by dumps_symbol.

    Raises:
        ValueError: On a malformed line or a missing mode count
    """
    n_modes = None
    terms: Dict[TermKey, Coefficient] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            fields = line[1:].split()
            if len(fields) == 2 and fields[0] == "n_modes":
                n_modes = int(fields[1])
            continue
        fields = line.split()
        if len(fields) != 3:
            raise ValueError(f"Line {number}: expected 'coeff beta alpha', got {raw!r}")
        key = (_parse_index(fields[1]), _parse_index(fields[2]))
        terms[key] = terms.get(key, 0) + _parse_coefficient(fields[0])
    if n_modes is None:
        if not terms:
            raise ValueError("Symbol text has no '# n_modes' header and no terms")
        n_modes = len(next(iter(terms))[0])
    return PolySymbol(n_modes, terms)
