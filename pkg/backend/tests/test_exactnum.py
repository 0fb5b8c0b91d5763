from fractions import Fraction

import numpy as np
import pytest
import sympy

from backend.app.services.exactnum import (
    Interval,
    Polynomial,
    format_rational,
    interval_eval,
    isolate_real_roots,
    pi_enclosure,
    poly_eval,
    root_enclosure,
    sqrt_enclosure,
    sturm_count,
    to_rational,
)
from backend.app.utils.error_handling import ConfigParseError, EndpointRootError, ZeroPolynomialError


def test_to_rational_parses_ints_and_fraction_strings():
    assert to_rational(3) == 3
    assert to_rational("6/4") == Fraction(3, 2)
    assert format_rational(to_rational("-6/4")) == "-3/2"
    assert format_rational(Fraction(5)) == "5/1"


@pytest.mark.parametrize("bad", [0.5, True, "1/0", "abc", None])
def test_to_rational_rejects(bad):
    with pytest.raises(ConfigParseError):
        to_rational(bad)


def test_polynomial_terms_are_normalized():
    x, y = Polynomial.variables(2)
    p = (x + y) ** 2 - x * x - y * y
    assert p == 2 * x * y
    assert hash(p) == hash(x * y * 2)
    assert p.degree == 2
    assert (x - x).is_zero
    assert Polynomial.zero(2).degree == 0


def test_evaluate_and_specialize():
    T, x, y = Polynomial.variables(3)
    p = x * x + y * y - T * T
    assert p.evaluate([5, 3, 4]) == 0
    q = p.specialize({0: 5})
    assert q.arity == 2
    assert q.evaluate([3, 4]) == 0
    assert q.constant_term == -25


def test_restrict_to_line_keeps_other_coordinates_in_order():
    x, y, z = Polynomial.variables(3)
    p = x + 10 * y + 100 * z
    line = p.restrict_to_line(1, [2, 3])
    assert line.univariate_coefficients() == [302, 10]


def test_linear_substitution_pulls_back():
    x, y = Polynomial.variables(2)
    p = x * x + y
    q = p.linear_substitution([[2, 0], [1, 1]])
    # q(u, v) = p(2u, u + v)
    assert q.evaluate([1, 2]) == p.evaluate([2, 3]) == 7


def test_interval_powers_and_products():
    iv = Interval(-2, 1)
    assert iv ** 2 == Interval(0, 4)
    assert iv ** 3 == Interval(-8, 1)
    assert iv * iv == Interval(-2, 4)
    assert abs(Interval(-3, 1)) == Interval(0, 3)


def test_interval_division_by_interval_containing_zero():
    with pytest.raises(ZeroDivisionError):
        Interval(1, 2) / Interval(-1, 1)
    assert Interval(1, 2) / Interval(2, 4) == Interval(Fraction(1, 4), 1)


def test_interval_intersect_disjoint():
    assert Interval(0, 1).intersect(Interval(2, 3)) is None
    assert Interval(0, 2).intersect(Interval(1, 3)) == Interval(1, 2)


def test_interval_eval_of_separable_polynomial_is_the_range():
    x, y = Polynomial.variables(2)
    box = (Interval(-1, 1), Interval(2, 3))
    assert interval_eval(x * x + y, box) == Interval(2, 4)


def test_sturm_count_on_open_interval():
    p = Polynomial.from_univariate([-2, 0, 1])
    assert sturm_count(p, Interval(0, 2)) == 1
    assert sturm_count(p, Interval(-3, 3)) == 2
    with pytest.raises(EndpointRootError):
        sturm_count(Polynomial.from_univariate([-1, 0, 1]), Interval(1, 2))


def test_isolate_real_roots_of_repeated_factor():
    x = Polynomial.from_univariate([0, 1])
    p = (x - 1) ** 2 * (x + 2)
    roots = isolate_real_roots(p)
    assert len(roots) == 2
    assert roots[0].compare(-2) == 0
    assert roots[1].compare(1) == 0
    assert roots[0].compare(0) == -1
    assert roots[0].sign_of(p) == 0
    assert roots[1].sign_of(x) == 1


def test_irrational_root_refines_inside_its_interval():
    (root,) = [r for r in isolate_real_roots(Polynomial.from_univariate([-2, 0, 1])) if r.compare(0) > 0]
    fine = root.refined_to(Fraction(1, 10 ** 6))
    assert fine.hi - fine.lo <= Fraction(1, 10 ** 6)
    assert fine.lo ** 2 < 2 < fine.hi ** 2


def test_zero_polynomial_has_no_isolation():
    with pytest.raises(ZeroPolynomialError):
        isolate_real_roots(Polynomial.zero(1))


def test_pi_enclosure():
    pi = pi_enclosure()
    assert pi.lo > Fraction(3141592653589793, 10 ** 15)
    assert pi.hi < Fraction(3141592653589794, 10 ** 15)
    assert pi.width <= Fraction(1, 10 ** 50)


def test_root_enclosures():
    assert root_enclosure(Fraction(9, 4), 2) == Interval.point(Fraction(3, 2))
    assert root_enclosure(27, 3) == Interval.point(3)
    two = sqrt_enclosure(2)
    assert two.lo ** 2 < 2 < two.hi ** 2
    assert two.width == Fraction(1, 2 ** 64)


@pytest.mark.parametrize("coeffs", [[1, -3, 0, 0, 0, 1], [-6, 11, -6, 1], [2, 0, -7, 0, 1], [1, 0, 1]])
def test_root_isolation_matches_sympy(coeffs):
    t = sympy.Symbol("t")
    expected = sympy.Poly(list(reversed(coeffs)), t).real_roots()
    distinct = sorted(set(expected), key=lambda r: float(r))
    roots = isolate_real_roots(Polynomial.from_univariate(coeffs))
    assert len(roots) == len(distinct)
    for alpha, r in zip(roots, distinct):
        value = float(r)
        assert float(alpha.lo) <= value <= float(alpha.hi)


def test_chart_at_infinity_of_the_disc():
    x, y = Polynomial.variables(2)
    disc = x * x + y * y - 4
    # x = 1/u, y = w/u: u^2 * p = 1 + w^2 - 4u^2
    assert disc.chart_at_infinity(0, 1).as_dict() == {(0, 2): 1, (0, 0): 1, (2, 0): -4}
    shifted = (x + 3) * (x + 3) + y * y - 4
    # x = -1/u: u^2 * p = (3u - 1)^2 + w^2 - 4u^2
    chart = shifted.chart_at_infinity(0, -1)
    assert chart.evaluate([Fraction(1, 3), 0]) == Fraction(-4, 9)
    assert chart.evaluate([Fraction(1, 2), 1]) == Fraction(1, 4)


def _random_poly(rng: np.random.Generator, arity: int, degree: int) -> Polynomial:
    terms = {}
    for _ in range(int(rng.integers(1, 6))):
        exps = [0] * arity
        for _ in range(int(rng.integers(0, degree + 1))):
            exps[int(rng.integers(0, arity))] += 1
        terms[tuple(exps)] = int(rng.integers(-5, 6))
    return Polynomial.from_dict(arity, terms)


def _random_box(rng: np.random.Generator, arity: int) -> list[Interval]:
    box = []
    for _ in range(arity):
        a, b = sorted(Fraction(int(v), 4) for v in rng.integers(-12, 13, size=2))
        box.append(Interval(a, b))
    return box


def _point_in(rng: np.random.Generator, box) -> list[Fraction]:
    return [iv.lo + iv.width * Fraction(int(rng.integers(0, 101)), 100) for iv in box]


def test_interval_eval_encloses_point_values():
    rng = np.random.default_rng(11)
    for _ in range(500):
        arity = int(rng.integers(1, 4))
        p = _random_poly(rng, arity, 4)
        box = _random_box(rng, arity)
        assert interval_eval(p, box).contains(poly_eval(p, _point_in(rng, box)))


def test_interval_eval_nests_under_subdivision():
    rng = np.random.default_rng(12)
    for _ in range(200):
        arity = int(rng.integers(1, 4))
        p = _random_poly(rng, arity, 4)
        box = _random_box(rng, arity)
        inner = [Interval(*sorted(_point_in(rng, [iv])[0] for _ in range(2))) for iv in box]
        assert interval_eval(p, box).contains_interval(interval_eval(p, inner))


def test_root_isolation_on_random_polynomials():
    rng = np.random.default_rng(13)
    t = sympy.Symbol("t")
    for _ in range(100):
        degree = int(rng.integers(1, 7))
        coeffs = [int(c) for c in rng.integers(-6, 7, size=degree)] + [int(rng.choice([-3, -2, -1, 1, 2, 3]))]
        roots = isolate_real_roots(Polynomial.from_univariate(coeffs))
        expected = sorted(set(sympy.Poly(list(reversed(coeffs)), t).real_roots()), key=lambda r: float(r))
        assert len(roots) == len(expected)
        for alpha, r in zip(roots, expected):
            value = r if r.is_Rational else r.evalf(40)
            assert sympy.Rational(alpha.lo.numerator, alpha.lo.denominator) <= value
            assert value <= sympy.Rational(alpha.hi.numerator, alpha.hi.denominator)
        for left, right in zip(roots, roots[1:]):
            assert left.hi <= right.lo
