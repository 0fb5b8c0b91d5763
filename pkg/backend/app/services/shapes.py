"""
Builders for the standard families and fibers used by the sample payloads and tests.
"""
from fractions import Fraction
from typing import Sequence

from .exactnum import Polynomial, RationalLike, to_rational
from .semialg import And, Atom, FiberSet, Formula, Or, Relation, SemialgebraicFamily, fiber


def _sum_of_squares(xs: Sequence[Polynomial], centre: Sequence[Fraction] = ()) -> Polynomial:
    total = Polynomial.zero(xs[0].arity)
    for i, x in enumerate(xs):
        d = x - centre[i] if centre else x
        total = total + d * d
    return total


def ball_family(n: int, strict: bool = False) -> SemialgebraicFamily:
    """{(T, x) : |x|² ≤ T²}, or < for the open ball."""
    T, *xs = Polynomial.variables(n + 1)
    rel = Relation.LT if strict else Relation.LE
    return SemialgebraicFamily(m=1, n=n, formula=Atom(_sum_of_squares(xs) - T * T, rel))


def disc_family() -> SemialgebraicFamily:
    return ball_family(2)


def ball(n: int, radius: RationalLike) -> FiberSet:
    return fiber(ball_family(n), [radius])


def disc(radius: RationalLike) -> FiberSet:
    return ball(2, radius)


def open_disc(radius: RationalLike) -> FiberSet:
    return fiber(ball_family(2, strict=True), [radius])


def box(half_widths: Sequence[RationalLike], centre: Sequence[RationalLike] = ()) -> FiberSet:
    """Axis-parallel box as 2n linear atoms."""
    n = len(half_widths)
    centre = [to_rational(c) for c in centre] or [Fraction(0)] * n
    xs = Polynomial.variables(n)
    parts: list[Formula] = []
    for x, c, w in zip(xs, centre, half_widths):
        w = to_rational(w)
        parts.append(Atom(x - (c + w), Relation.LE))
        parts.append(Atom(c - w - x, Relation.LE))
    return FiberSet(n=n, formula=And(tuple(parts)))


def annulus(inner: RationalLike, outer: RationalLike) -> FiberSet:
    """inner² ≤ x² + y² ≤ outer²."""
    x, y = Polynomial.variables(2)
    r = x * x + y * y
    a, b = to_rational(inner), to_rational(outer)
    return FiberSet(n=2, formula=And((Atom(r - b * b, Relation.LE), Atom(r - a * a, Relation.GE))))


def ellipsoid(axes: Sequence[RationalLike], centre: Sequence[RationalLike] = ()) -> FiberSet:
    """Σ ((x_i - c_i) / a_i)² ≤ 1, cleared of denominators."""
    n = len(axes)
    axes = [to_rational(a) for a in axes]
    centre = [to_rational(c) for c in centre] or [Fraction(0)] * n
    xs = Polynomial.variables(n)
    total = Polynomial.zero(n)
    for x, c, a in zip(xs, centre, axes):
        total = total + (x - c) * (x - c) * (1 / (a * a))
    return FiberSet(n=n, formula=Atom(total - 1, Relation.LE))


def two_discs(radius: RationalLike, separation: RationalLike) -> FiberSet:
    """Union of two discs centred at (±separation/2, 0)."""
    x, y = Polynomial.variables(2)
    r, s = to_rational(radius), to_rational(separation) / 2
    left = Atom((x + s) * (x + s) + y * y - r * r, Relation.LE)
    right = Atom((x - s) * (x - s) + y * y - r * r, Relation.LE)
    return FiberSet(n=2, formula=Or((left, right)))


def segment(half_length: RationalLike) -> FiberSet:
    """{y = 0, x² ≤ a²}: a set of volume zero in the plane."""
    x, y = Polynomial.variables(2)
    a = to_rational(half_length)
    return FiberSet(n=2, formula=And((Atom(y, Relation.EQ), Atom(x * x - a * a, Relation.LE))))


def half_plane() -> FiberSet:
    """{x ≥ 0}; unbounded."""
    x, _ = Polynomial.variables(2)
    return FiberSet(n=2, formula=Atom(x, Relation.GE))


def parabola_family() -> SemialgebraicFamily:
    """{(T, x, z) : x - T - z² = 0}; its projection along z is {x ≥ T}."""
    T, x, z = Polynomial.variables(3)
    return SemialgebraicFamily(m=1, n=2, formula=Atom(x - T - z * z, Relation.EQ))
