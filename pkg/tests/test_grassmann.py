"""Grassmann algebra arithmetic: fixed values, algebra laws, serialization."""

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from superteich.grassmann import (
    GrassmannNumber,
    format_grassmann,
    parse_grassmann,
    random_element,
)

RANK = 6
N = 1 << RANK


def gen(i, rank=RANK):
    return GrassmannNumber.generator(i, rank)


def scal(x, rank=RANK):
    return GrassmannNumber.scalar(x, rank)


# strategy: a handful of (mask, coeff) pairs, optionally parity-restricted
def _element(masks):
    @st.composite
    def build(draw):
        g = GrassmannNumber(RANK)
        pairs = draw(
            st.lists(
                st.tuples(
                    st.sampled_from(masks),
                    st.floats(-2, 2, allow_nan=False, allow_infinity=False, width=32),
                ),
                max_size=6,
            )
        )
        for mask, c in pairs:
            g.coeffs[mask] += c
        return g

    return build()


ALL_MASKS = list(range(N))
EVEN_MASKS = [m for m in ALL_MASKS if bin(m).count("1") % 2 == 0]
ODD_MASKS = [m for m in ALL_MASKS if bin(m).count("1") % 2 == 1]

any_element = _element(ALL_MASKS)
even_element = _element(EVEN_MASKS)
odd_element = _element(ODD_MASKS)


class TestFixedValues:
    def test_add_doubles_generator(self):
        assert (gen(1) + gen(1)).isclose(2 * gen(1))

    def test_add_cancels_soul(self):
        a = 1 + gen(1) * gen(2)
        b = 1 - gen(1) * gen(2)
        assert (a + b).isclose(scal(2))

    def test_generators_anticommute(self):
        t12 = gen(1) * gen(2)
        assert (gen(2) * gen(1)).isclose(-t12)
        assert t12.extract_coefficient([1, 2]) == 1.0

    def test_generator_squares_to_zero(self):
        assert (gen(1) * gen(1)).max_abs() == 0.0

    def test_product_of_conjugates_is_one(self):
        a = 1 + gen(1) * gen(2)
        assert (a * (1 - gen(1) * gen(2))).isclose(scal(1))

    def test_inverse_of_scalar(self):
        assert scal(2).inverse().isclose(scal(0.5))

    def test_inverse_of_unipotent(self):
        a = 1 + gen(1) * gen(2)
        assert a.inverse().isclose(1 - gen(1) * gen(2))
        assert (a * a.inverse()).isclose(scal(1))

    def test_inverse_with_scale(self):
        # t(1+pq) for t=3 inverts to (1/3)(1-pq)
        t = 3.0
        a = t * (1 + gen(3) * gen(4))
        assert a.inverse().isclose((1 - gen(3) * gen(4)) * (1 / t))
        assert (a * a.inverse()).isclose(scal(1))

    def test_sqrt_of_scalar(self):
        assert scal(4).sqrt().isclose(scal(2))

    def test_sqrt_of_even_element(self):
        a = 1 + 2 * gen(1) * gen(2)
        r = a.sqrt()
        assert r.isclose(1 + gen(1) * gen(2))
        assert (r * r).isclose(a)

    def test_parity_classification(self):
        assert scal(3).parity() == "even"
        assert gen(1).parity() == "odd"
        assert (1 + gen(1)).parity() == "mixed"
        assert GrassmannNumber(RANK).parity() == "even"

    def test_extract_coefficient(self):
        a = 2 * gen(1) * gen(2)
        assert a.extract_coefficient([1, 2]) == 2.0
        assert scal(5).extract_coefficient([]) == 5.0
        assert gen(1).extract_coefficient([2]) == 0.0

    def test_nilpotence_of_full_product(self):
        # any product of more than RANK odd generators vanishes identically
        prod = scal(1)
        for i in range(1, RANK + 1):
            prod = prod * gen(i)
        assert prod.max_abs() == 1.0  # top monomial survives
        assert (prod * gen(1)).max_abs() == 0.0


class TestErrors:
    def test_rank_mismatch_rejected(self):
        with pytest.raises(ValueError):
            gen(1, 4) + gen(1, 5)
        with pytest.raises(ValueError):
            gen(1, 4) * gen(1, 5)

    def test_zero_body_not_invertible(self):
        with pytest.raises(ZeroDivisionError):
            gen(1).inverse()

    def test_sqrt_domain(self):
        with pytest.raises(ValueError):
            scal(-1).sqrt()
        with pytest.raises(ValueError):
            gen(1).sqrt()
        with pytest.raises(ValueError):
            (1 + gen(1)).sqrt()

    def test_generator_index_range(self):
        with pytest.raises(ValueError):
            GrassmannNumber.generator(0, 4)
        with pytest.raises(ValueError):
            GrassmannNumber.generator(5, 4)


@settings(max_examples=150, deadline=None)
@given(any_element, any_element)
def test_body_is_linear(a, b):
    assert np.isclose((a + b).body, a.body + b.body, atol=1e-12)


@settings(max_examples=150, deadline=None)
@given(any_element, any_element, any_element)
def test_mul_associative_and_distributive(a, b, c):
    assert ((a * b) * c).isclose(a * (b * c), 1e-10)
    assert (a * (b + c)).isclose(a * b + a * c, 1e-10)


@settings(max_examples=150, deadline=None)
@given(
    st.sampled_from(["even", "odd"]),
    st.sampled_from(["even", "odd"]),
    st.data(),
)
def test_graded_commutativity(pa, pb, data):
    a = data.draw(even_element if pa == "even" else odd_element)
    b = data.draw(even_element if pb == "even" else odd_element)
    sign = -1.0 if (pa == "odd" and pb == "odd") else 1.0
    assert (a * b).isclose(b * a * sign, 1e-10)


@settings(max_examples=100, deadline=None)
@given(even_element)
def test_inverse_round_trip(a):
    a.coeffs[0] = 1.0 + abs(a.coeffs[0])  # force an order-1 body
    assert (a * a.inverse()).isclose(GrassmannNumber.scalar(1, RANK), 1e-12)


@settings(max_examples=100, deadline=None)
@given(even_element)
def test_sqrt_round_trip(a):
    a.coeffs[0] = 1.0 + abs(a.coeffs[0])
    r = a.sqrt()
    assert (r * r).isclose(a, 1e-12)
    assert r.body > 0


@settings(max_examples=100, deadline=None)
@given(even_element)
def test_fourth_root_consistency(a):
    a.coeffs[0] = 1.0 + abs(a.coeffs[0])
    q = a.sqrt().sqrt()
    assert (q * q * q * q).isclose(a, 1e-11)


@settings(max_examples=100, deadline=None)
@given(any_element)
def test_serialization_round_trip(a):
    text = format_grassmann(a)
    back = parse_grassmann(text, RANK)
    assert back.isclose(a, 1e-12)


class TestSerialization:
    def test_known_forms(self):
        a = 0.5 + 2 * gen(1) * gen(2)
        assert format_grassmann(a) == "0.5 + 2.0*g{1,2}"
        assert parse_grassmann("0.5 + 2*g{1,2}", RANK).isclose(a)

    def test_zero(self):
        assert format_grassmann(GrassmannNumber(RANK)) == "0"
        assert parse_grassmann("0", RANK).is_zero()

    def test_leading_minus_and_bare_monomial(self):
        a = parse_grassmann("-g{1} + g{2,3}", RANK)
        assert a.isclose(-gen(1) + gen(2) * gen(3))

    def test_exponent_notation(self):
        a = parse_grassmann("1e-05 - 2E+00*g{1}", RANK)
        assert np.isclose(a.body, 1e-5)
        assert np.isclose(a.extract_coefficient([1]), -2.0)

    def test_bad_input_rejected(self):
        for bad in ["", "g{0}", "g{1,1}", "2**g{1}", "g{%d}" % (RANK + 1), "1 +"]:
            with pytest.raises(ValueError):
                parse_grassmann(bad, RANK)


def test_random_element_parity_restriction():
    rng = np.random.default_rng(3)
    for parity in ("even", "odd"):
        for _ in range(10):
            a = random_element(rng, rank=RANK, parity=parity)
            assert a.parity() in (parity, "even")  # zero draws classify as even
            assert (a.is_even() if parity == "even" else a.is_odd())
