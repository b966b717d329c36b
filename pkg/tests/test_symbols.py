"""Tests for polynomial symbols, ordering conversion and star products."""
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ymgap.app.fock import FockBasis
from ymgap.app.models import OrderingTag
from ymgap.app.quantize import quantize
from ymgap.app.symbols import (
    PolySymbol,
    convert_ordering,
    diff,
    dumps_symbol,
    embed_modes,
    laplacian,
    loads_symbol,
    restrict_modes,
    star_antinormal,
    star_normal,
    star_product,
    star_weyl,
    weierstrass_transform,
)

ORDERINGS = [OrderingTag.NORMAL, OrderingTag.WEYL, OrderingTag.ANTINORMAL]


def z(n_modes=1, j=0):
    return PolySymbol.variable(n_modes, j)


def zbar(n_modes=1, j=0):
    return PolySymbol.variable(n_modes, j, conjugate=True)


@st.composite
def symbols(draw, n_modes=2, max_exponent=2):
    exponents = st.tuples(*[st.integers(0, max_exponent)] * n_modes)
    terms = draw(
        st.dictionaries(
            st.tuples(exponents, exponents), st.integers(-3, 3), min_size=1, max_size=4
        )
    )
    return PolySymbol(n_modes, terms)


@st.composite
def real_symbols(draw, n_modes=2, max_degree=4):
    """Real-diagonal symbols of total degree at most max_degree."""
    terms = {}
    for _ in range(draw(st.integers(1, 4))):
        budget = max_degree
        exponents = []
        for _ in range(2 * n_modes):
            e = draw(st.integers(0, budget))
            budget -= e
            exponents.append(e)
        key = (tuple(exponents[:n_modes]), tuple(exponents[n_modes:]))
        terms[key] = terms.get(key, 0) + draw(st.integers(-3, 3))
    p = PolySymbol(n_modes, terms).hermitian_part()
    assume(not p.is_zero())
    return p


class TestArithmetic:
    def test_zero_coefficients_are_pruned(self):
        p = z() + zbar() - z()
        assert p == zbar()
        assert (p - p).is_zero()

    def test_degree_and_homogeneous_parts(self):
        p = zbar() * z() * z() + 3 * z() + 1
        assert p.degree == 3
        assert p.degrees() == [0, 1, 3]
        assert p.homogeneous_part(1) == 3 * z()

    def test_evaluate_on_diagonal(self):
        p = zbar() * z() + 2 * z()
        point = 0.3 - 0.4j
        assert p.evaluate([point]) == pytest.approx(abs(point) ** 2 + 2 * point)

    def test_diff_and_laplacian(self):
        p = zbar() ** 2 * z() ** 3
        assert diff(p, 0) == 3 * zbar() ** 2 * z() ** 2
        assert diff(p, 0, conjugate=True) == 2 * zbar() * z() ** 3
        assert laplacian(p) == 6 * zbar() * z() ** 2

    def test_mode_mismatch(self):
        with pytest.raises(ValueError):
            z(1) + z(2)

    def test_adjoint_and_hermitian_part(self):
        p = PolySymbol.monomial((1, 0), (0, 1), 2 + 1j)
        assert p.adjoint() == PolySymbol.monomial((0, 1), (1, 0), 2 - 1j)
        assert not p.is_real_diagonal()
        assert p.hermitian_part().is_real_diagonal()

    def test_restrict_and_embed(self):
        p = zbar(3, 0) * z(3, 2) + z(3, 1) + 5
        restricted = restrict_modes(p, [2, 0])
        assert restricted == zbar(2, 1) * z(2, 0) + 5
        assert embed_modes(restricted, [2, 0], 3) == zbar(3, 0) * z(3, 2) + 5


class TestOrderingConversion:
    def test_antinormal_number_symbol(self):
        antinormal = zbar() * z()
        assert convert_ordering(antinormal, "antinormal", "normal") == zbar() * z() + 1
        assert convert_ordering(antinormal, "antinormal", "weyl") == zbar() * z() + Fraction(1, 2)

    def test_conversion_keeps_fractions_exact(self):
        weyl = convert_ordering(zbar() ** 2 * z() ** 2, "normal", "weyl")
        for coeff in weyl.terms.values():
            assert isinstance(coeff, (int, Fraction))

    def test_identity_conversion(self):
        p = zbar() * z() + z()
        assert convert_ordering(p, "weyl", "weyl") == p

    def test_unknown_tag(self):
        with pytest.raises(ValueError):
            convert_ordering(z(), "normal", "symmetric")

    @settings(max_examples=50, deadline=None)
    @given(symbols())
    def test_round_trip_is_exact(self, p):
        for source in ORDERINGS:
            for target in ORDERINGS:
                back = convert_ordering(convert_ordering(p, source, target), target, source)
                assert back == p

    @settings(max_examples=50, deadline=None)
    @given(symbols())
    def test_conversions_compose(self, p):
        through_weyl = convert_ordering(convert_ordering(p, "normal", "weyl"), "weyl", "antinormal")
        assert through_weyl == convert_ordering(p, "normal", "antinormal")

    def test_weierstrass_with_zero_time(self):
        p = zbar() * z()
        assert weierstrass_transform(p, 0) == p


class TestStarProducts:
    def test_normal_commutator(self):
        # a a^dagger = a^dagger a + 1
        assert star_normal(z(), zbar()) == zbar() * z() + 1
        assert star_normal(zbar(), z()) == zbar() * z()

    def test_antinormal_commutator(self):
        # a^dagger a = a a^dagger - 1
        assert star_antinormal(zbar(), z()) == zbar() * z() - 1
        assert star_antinormal(z(), zbar()) == zbar() * z()

    def test_weyl_commutator(self):
        commutator = star_weyl(z(), zbar()) - star_weyl(zbar(), z())
        assert commutator == 1

    @settings(max_examples=40, deadline=None)
    @given(symbols(), symbols())
    def test_adjoint_reverses_products(self, p2, p1):
        for ordering in ORDERINGS:
            left = star_product(p2, p1, ordering).adjoint()
            right = star_product(p1.adjoint(), p2.adjoint(), ordering)
            assert left.allclose(right)

    @settings(max_examples=50, deadline=None)
    @given(real_symbols(), real_symbols())
    def test_star_product_matches_matrix_product(self, p2, p1):
        # Columns of degree <= D - deg p1 never leave the block before p2 acts.
        D = 10
        basis = FockBasis(2, D)
        safe = FockBasis(2, D - p1.degree).dim
        for ordering in ORDERINGS:
            product = (quantize(p2, ordering, basis) @ quantize(p1, ordering, basis)).toarray()
            expected = product[:safe, :safe]
            actual = quantize(star_product(p2, p1, ordering), ordering, basis).toarray()[:safe, :safe]
            scale = max(1.0, float(np.abs(expected).max()))
            assert np.allclose(actual, expected, rtol=0.0, atol=1e-10 * scale)

    def test_associativity(self):
        a, b, c = zbar() * z() ** 2, z() + zbar() ** 2, zbar() * z() + 2
        for ordering in ORDERINGS:
            left = star_product(star_product(a, b, ordering), c, ordering)
            right = star_product(a, star_product(b, c, ordering), ordering)
            assert left == right


class TestTextFormat:
    def test_golden_normal_symbol(self, golden):
        normal = convert_ordering(zbar() ** 2 * z() ** 2, "antinormal", "normal")
        assert dumps_symbol(normal) == golden("number_squared_normal.txt")
        assert loads_symbol(golden("number_squared_normal.txt")) == normal

    def test_golden_weyl_symbol(self, golden):
        weyl = convert_ordering(zbar() * z(), "antinormal", "weyl")
        assert dumps_symbol(weyl) == golden("number_weyl.txt")

    def test_mixed_coefficients(self):
        p = PolySymbol(2, {((1, 0), (0, 1)): 0.25, ((0, 0), (0, 0)): 1 - 2j, ((0, 1), (1, 0)): 3})
        assert loads_symbol(dumps_symbol(p)) == p

    def test_malformed_line(self):
        with pytest.raises(ValueError):
            loads_symbol("# n_modes 1\n1 0\n")
