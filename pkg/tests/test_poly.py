import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparse_bsos.poly import (ONE, Polynomial, add, enumerate_monomials, evaluate, expo_from_dense,
                              expo_to_dense, grlex_key, mul, num_monomials, pow, support_vars)


def x(n, i):
    return Polynomial.var(n, i)


def one(n, c=1.0):
    return Polynomial.constant(n, c)


@st.composite
def polys(draw, n=3, max_terms=5, max_deg=3):
    k = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(k):
        powers = draw(st.lists(st.integers(0, max_deg), min_size=n, max_size=n))
        c = draw(st.floats(-5, 5, allow_nan=False).filter(lambda v: abs(v) > 1e-3))
        terms[expo_from_dense(powers)] = c
    return Polynomial(n, terms)


def horner_eval(p, point):
    # independent evaluator: dense exponent vectors and math.prod
    total = 0.0
    for e, c in p.terms.items():
        dense = expo_to_dense(e, p.num_vars)
        total += c * math.prod(v ** k for v, k in zip(point, dense))
    return total


class TestConstruction:
    def test_drops_zero_coefficients(self):
        p = Polynomial(2, {ONE: 0.0, ((0, 1),): 2.0})
        assert len(p) == 1

    def test_rejects_out_of_range_variable(self):
        with pytest.raises(ValueError):
            Polynomial(2, {((2, 1),): 1.0})

    def test_rejects_zero_power(self):
        with pytest.raises(ValueError):
            Polynomial(2, {((0, 0),): 1.0})

    def test_zero_polynomial_degree(self):
        assert Polynomial(3).degree == 0
        assert Polynomial(3).is_zero()

    def test_degree_is_max_total(self):
        p = Polynomial.from_dense_terms(3, [((1, 1, 1), 1.0), ((2, 0, 0), 1.0)])
        assert p.degree == 3

    def test_dense_roundtrip(self):
        e = expo_from_dense([0, 2, 0, 1])
        assert e == ((1, 2), (3, 1))
        assert expo_to_dense(e, 4) == [0, 2, 0, 1]

    def test_num_vars_mismatch(self):
        with pytest.raises(ValueError):
            x(2, 0) + x(3, 0)


class TestArithmetic:
    def test_add_cancellation(self):
        p = add(x(1, 0) ** 2 + 1, one(1, -1.0))
        assert p == x(1, 0) ** 2

    def test_add_identity(self):
        p = x(2, 0) * x(2, 1) + 3
        assert add(p, Polynomial(2)) == p

    def test_add_cancels_terms(self):
        assert add(x(2, 0) + x(2, 1), x(2, 0) - x(2, 1)) == 2 * x(2, 0)

    def test_mul_square(self):
        p = mul(x(1, 0) + 1, x(1, 0) + 1)
        assert p == x(1, 0) ** 2 + 2 * x(1, 0) + 1

    def test_mul_identity(self):
        p = x(2, 0) - 4 * x(2, 1) ** 3
        assert mul(p, one(2)) == p

    def test_difference_of_squares(self):
        assert mul(x(2, 0) - x(2, 1), x(2, 0) + x(2, 1)) == x(2, 0) ** 2 - x(2, 1) ** 2

    def test_pow_zero(self):
        assert pow(x(1, 0), 0) == one(1)

    def test_pow_square(self):
        assert pow(1 - x(1, 0), 2) == 1 - 2 * x(1, 0) + x(1, 0) ** 2

    def test_pow_binomial(self):
        p = pow(x(2, 0) + x(2, 1), 3)
        assert len(p) == 4
        assert sorted(p.terms.values()) == [1.0, 1.0, 3.0, 3.0]

    def test_negative_power_rejected(self):
        with pytest.raises(ValueError):
            pow(x(1, 0), -1)

    @given(polys(), polys(), polys())
    @settings(max_examples=50, deadline=None)
    def test_ring_laws(self, p, q, r):
        assert (p * (q + r)).allclose(p * q + p * r, atol=1e-8)
        assert (p + q) == (q + p)
        assert (p * q).allclose(q * p, atol=1e-10)

    @given(polys(), polys())
    @settings(max_examples=50, deadline=None)
    def test_mul_degree(self, p, q):
        if not (p.is_zero() or q.is_zero()):
            assert (p * q).degree <= p.degree + q.degree


class TestEvaluate:
    def test_square_at_one(self):
        assert evaluate(x(1, 0) ** 2 + 2 * x(1, 0) + 1, [1.0]) == 4.0

    def test_zero_polynomial(self):
        assert evaluate(Polynomial(3), [0.3, -1.0, 2.0]) == 0.0

    @given(polys(), st.lists(st.floats(-2, 2), min_size=3, max_size=3))
    @settings(max_examples=100, deadline=None)
    def test_matches_independent_evaluator(self, p, point):
        assert evaluate(p, point) == pytest.approx(horner_eval(p, point), rel=1e-9, abs=1e-9)

    def test_substitute(self):
        p = x(2, 0) * x(2, 1) + x(2, 1)
        q = p.substitute({0: 2.0})
        assert q == 3 * x(2, 1)


class TestSupport:
    def test_support(self):
        assert support_vars(x(3, 0) * x(3, 2) + x(3, 2) ** 2) == {0, 2}

    def test_constant(self):
        assert support_vars(one(3, 5.0)) == set()

    @given(polys(), polys())
    @settings(max_examples=50, deadline=None)
    def test_support_of_product(self, p, q):
        assert support_vars(p * q) <= support_vars(p) | support_vars(q)


class TestEnumerate:
    @pytest.mark.parametrize("n,d,count", [(2, 2, 6), (4, 2, 15), (1, 0, 1), (3, 4, 35)])
    def test_counts(self, n, d, count):
        mons = enumerate_monomials(n, d)
        assert len(mons) == count == num_monomials(n, d)

    def test_constant_only(self):
        assert enumerate_monomials(1, 0) == [ONE]

    def test_grlex_order(self):
        mons = enumerate_monomials(2, 2)
        dense = [tuple(expo_to_dense(e, 2)) for e in mons]
        assert dense[0] == (0, 0)
        degs = [sum(e) for e in dense]
        assert degs == sorted(degs)
        assert mons == sorted(mons, key=grlex_key)
        assert len(set(mons)) == len(mons)

    def test_variable_subset(self):
        mons = enumerate_monomials(2, 1, [3, 7])
        assert mons == [ONE, ((3, 1),), ((7, 1),)]


class TestRecords:
    def test_roundtrip(self):
        p = 3 * x(3, 0) ** 2 * x(3, 2) - 0.5 * x(3, 1) + 2
        assert Polynomial.from_records(3, p.to_records()) == p

    def test_evaluate_vectorized_input(self):
        p = x(2, 0) * x(2, 1)
        assert evaluate(p, np.array([2.0, 3.0])) == 6.0
