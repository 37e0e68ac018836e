import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as hst

from sizetypes.poly import (
    Polynomial, PolynomialSyntaxError, UnboundSizeVariable, ZERO, parse_polynomial,
)

n = Polynomial.variable("n")
m = Polynomial.variable("m")


def random_poly(rng: random.Random, variables=("n", "m", "k"), degree=3,
                terms=4) -> Polynomial:
    out = ZERO
    for _ in range(rng.randint(0, terms)):
        coeff = Fraction(rng.randint(-9, 9), rng.randint(1, 9))
        mono = Polynomial.constant(coeff)
        budget = rng.randint(0, degree)
        for _ in range(budget):
            mono = mono * Polynomial.variable(rng.choice(variables))
        out = out + mono
    return out


coeffs = hst.fractions(min_value=-20, max_value=20, max_denominator=12)
var_names = hst.sampled_from(["n", "m", "k"])
monomials = hst.dictionaries(var_names, hst.integers(min_value=1, max_value=4), max_size=3)
polynomials = hst.builds(
    lambda ts: Polynomial({tuple(sorted(mono.items())): c for mono, c in ts}),
    hst.lists(hst.tuples(monomials, coeffs), max_size=5),
)
points = hst.fixed_dictionaries(
    {v: hst.integers(min_value=-6, max_value=6) for v in ("n", "m", "k")})


def test_examples_from_worked_sizes():
    # (n - m)^2 expands with the cross term.
    sq = (n - m) * (n - m)
    assert sq == n * n - 2 * n * m + m * m
    # The triangular-number polynomial at 3.
    tri = parse_polynomial("1/2*n^2 + 1/2*n")
    assert tri.evaluate({"n": 3}) == 6
    assert (n * m).evaluate({"n": 2, "m": 1}) == 2
    assert ZERO.evaluate({"n": 123}) == 0


def test_equality_is_canonical():
    assert n * m == m + (n - 1) * m
    assert n * n != n * n * n
    assert n + 0 == n
    assert (n - n) == ZERO
    assert Polynomial.constant(Fraction(2, 4)) == Polynomial.constant(Fraction(1, 2))


def test_substitution_examples():
    assert (n + m).substitute({"n": n - 1}) == n - 1 + m
    p = random_poly(random.Random(7))
    assert p.substitute({}) == p
    expanded = (n + 1) * (n + 1)
    assert (n * n).substitute({"n": n + 1}) == expanded


def test_evaluate_missing_variable():
    with pytest.raises(UnboundSizeVariable):
        (n + m).evaluate({"n": 1})


def test_ring_laws_randomized():
    rng = random.Random(2024)
    for _ in range(1000):
        a, b, c = (random_poly(rng) for _ in range(3))
        assert a + b == b + a
        assert a * b == b * a
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a - a == ZERO


@settings(max_examples=200)
@given(polynomials, polynomials, points)
def test_evaluate_is_a_ring_homomorphism(a, b, point):
    assert (a + b).evaluate(point) == a.evaluate(point) + b.evaluate(point)
    assert (a - b).evaluate(point) == a.evaluate(point) - b.evaluate(point)
    assert (a * b).evaluate(point) == a.evaluate(point) * b.evaluate(point)


@settings(max_examples=200)
@given(polynomials, points)
def test_substitute_then_evaluate_composes(p, point):
    subst = {"n": m + 1, "m": n * n, "k": Polynomial.constant(3)}
    composed = p.substitute(subst)
    shifted = {v: q.evaluate(point) for v, q in subst.items()}
    assert composed.evaluate(point) == p.evaluate(shifted)


def test_construction_order_is_irrelevant():
    rng = random.Random(99)
    for _ in range(200):
        parts = [random_poly(rng, terms=2) for _ in range(4)]
        left = ((parts[0] + parts[1]) + parts[2]) + parts[3]
        right = parts[3] + (parts[2] + (parts[1] + parts[0]))
        assert left == right
        assert left.terms == right.terms


def test_parse_and_print_round_trip():
    rng = random.Random(5)
    for _ in range(300):
        p = random_poly(rng)
        assert parse_polynomial(str(p)) == p


def test_parse_examples():
    assert parse_polynomial("1/2*n^2 + 1/2*n") == \
        Polynomial.constant(Fraction(1, 2)) * n * n + Polynomial.constant(Fraction(1, 2)) * n
    assert parse_polynomial("n*m") == n * m
    assert parse_polynomial("-n + 3") == 3 - n
    assert parse_polynomial("(n - 1)*(n + 1)") == n * n - 1
    with pytest.raises(PolynomialSyntaxError):
        parse_polynomial("n +")
    with pytest.raises(PolynomialSyntaxError):
        parse_polynomial("n ? m")


def test_printing_is_deterministic():
    p = n * n - 2 * n * m + m * m
    assert str(p) == str(m * m + n * n - m * n - m * n)
    assert str(ZERO) == "0"
    assert str(n * m) == "m*n"
    assert str(Polynomial.constant(Fraction(-1, 2))) == "-1/2"


def test_var_minus_const_recognition():
    assert (n - 2).linear_var_minus_const() == ("n", 2)
    assert n.linear_var_minus_const() == ("n", 0)
    assert (n + m).linear_var_minus_const() is None
    assert (2 * n - 2).linear_var_minus_const() is None
    assert (n * n).linear_var_minus_const() is None
    assert Polynomial.constant(4).linear_var_minus_const() is None


def test_total_degree_and_variables():
    p = n * n * m + 3
    assert p.total_degree() == 3
    assert p.variables() == {"n", "m"}
    assert ZERO.total_degree() == 0
    assert Polynomial.constant(5).is_constant
