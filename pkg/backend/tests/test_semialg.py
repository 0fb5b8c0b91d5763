from fractions import Fraction

import numpy as np
import pytest

from backend.app.services import shapes
from backend.app.services.exactnum import Interval, Polynomial
from backend.app.services.semialg import (
    And,
    Atom,
    Const,
    FiberSet,
    Not,
    Or,
    Relation,
    SemialgebraicFamily,
    axis_line_restriction,
    bounding_radius,
    contains,
    evaluate,
    fiber,
    interval_decomposition,
    outside_refuted,
    projection_box_status,
    projection_membership,
    simplify,
)
from backend.app.utils.error_handling import ArityMismatchError, UnboundedFiberError


def test_relation_three_valued_on_intervals():
    assert Relation.LE.holds_on(Interval(-2, 0)) is True
    assert Relation.LT.holds_on(Interval(-2, 0)) is None
    assert Relation.GT.holds_on(Interval(1, 2)) is True
    assert Relation.EQ.holds_on(Interval(1, 2)) is False
    assert Relation.NE.holds_on(Interval(0, 0)) is False


def test_family_arity_is_checked():
    x, y = Polynomial.variables(2)
    with pytest.raises(ArityMismatchError):
        SemialgebraicFamily(m=1, n=2, formula=Atom(x * y, Relation.LE))
    with pytest.raises(ArityMismatchError):
        fiber(shapes.disc_family(), [1, 2])


def test_fiber_membership_closed_and_open():
    assert contains(shapes.disc(5), [3, 4])
    assert not contains(shapes.disc(5), [4, 4])
    assert not contains(shapes.open_disc(5), [3, 4])
    assert contains(shapes.open_disc(5), [Fraction(5, 2), 4])
    with pytest.raises(ArityMismatchError):
        contains(shapes.disc(5), [1, 2, 3])


def test_simplify_folds_constants():
    x, _ = Polynomial.variables(2)
    atom = Atom(x, Relation.GE)
    assert simplify(And((Const(True), atom))) == atom
    assert simplify(Or((atom, Const(True)))) == Const(True)
    assert simplify(Atom(Polynomial.constant(2, -1), Relation.LT)) == Const(True)


def test_annulus_line_through_the_hole_has_two_intervals():
    pieces = interval_decomposition(axis_line_restriction(shapes.annulus(3, 6), 0, [0]))
    assert len(pieces) == 2
    assert all(p.lo_closed and p.hi_closed for p in pieces)
    assert pieces[0].contains(-6) and pieces[0].contains(-3)
    assert pieces[1].contains(Fraction(9, 2))
    assert not any(p.contains(0) for p in pieces)
    assert not pieces[1].contains(Fraction(61, 10))


def test_open_disc_line_is_one_open_interval():
    (piece,) = interval_decomposition(axis_line_restriction(shapes.open_disc(5), 1, [3]))
    assert not piece.lo_closed and not piece.hi_closed
    assert piece.contains(Fraction(39, 10))
    assert not piece.contains(4)


def test_line_missing_the_set_is_empty_and_constant_true_is_the_line():
    assert interval_decomposition(axis_line_restriction(shapes.disc(2), 0, [3])) == []
    (whole,) = interval_decomposition(Const(True))
    assert whole.lo is None and whole.hi is None


def test_tangent_line_gives_a_single_point():
    (piece,) = interval_decomposition(axis_line_restriction(shapes.disc(2), 0, [2]))
    assert piece.contains(0)
    assert not piece.contains(Fraction(1, 100))


def test_syntactic_bounding_radius():
    assert bounding_radius(shapes.disc(5)).radius == 5
    box = bounding_radius(shapes.box([4, 2]))
    assert (box.radius, box.source, box.certification) == (4, "syntactic", "certified")
    assert bounding_radius(shapes.ellipsoid([5, 3])).radius >= 5


def test_declared_radius():
    wide = bounding_radius(FiberSet(2, shapes.disc(2).formula, declared_radius=3))
    assert (wide.radius, wide.source, wide.certification) == (3, "declared", "certified")
    tight = bounding_radius(FiberSet(2, shapes.disc(2).formula, declared_radius=1))
    assert (tight.radius, tight.source) == (2, "syntactic")


def test_union_needs_a_declared_radius_and_is_certified_outside_the_box():
    with pytest.raises(UnboundedFiberError):
        bounding_radius(shapes.two_discs(2, 8))
    s = FiberSet(2, shapes.two_discs(2, 8).formula, declared_radius=7)
    assert bounding_radius(s).certification == "certified"


def test_unbounded_fiber():
    with pytest.raises(UnboundedFiberError):
        bounding_radius(shapes.half_plane())


def test_projection_membership_of_the_parabola():
    s = fiber(shapes.parabola_family(), [0])
    inside = projection_membership(s, (0,), [4], radius=Fraction(4))
    assert inside.status == "inside"
    assert contains(s, inside.witness)
    assert projection_membership(s, (0,), [-1], radius=Fraction(4)).status == "outside"


def test_projection_box_status_of_the_disc():
    s = shapes.disc(1)
    half = (Interval(Fraction(-1, 2), Fraction(1, 2)),)
    assert projection_box_status(s, (0,), half) == "inside"
    assert projection_box_status(s, (1,), (Interval(2, 3),), radius=Fraction(3)) == "outside"


def test_outside_of_the_box_is_refuted_for_a_contained_disc():
    assert outside_refuted(shapes.disc(2), Fraction(3), depth=4)
    assert outside_refuted(shapes.ellipsoid([5, 3], centre=[1, -1]), Fraction(8), depth=6)


def test_fiber_reaching_past_the_declared_radius_is_uncertified():
    x, y = Polynomial.variables(2)
    # complement of {x^2 + y^2 > 100}: the disc of radius 10
    big = FiberSet(2, Not(Atom(x * x + y * y - 100, Relation.GT)), declared_radius=5)
    assert not outside_refuted(big, Fraction(5), depth=6)
    assert bounding_radius(big).certification == "uncertified"

    shifted = FiberSet(2, shapes.two_discs(2, 8).formula, declared_radius=5)
    assert bounding_radius(shifted).certification == "uncertified"


def test_fiber_touching_the_box_face_is_not_certified():
    assert not outside_refuted(shapes.disc(2), Fraction(2), depth=6)


def _random_atom(rng: np.random.Generator, arity: int, max_degree: int) -> Atom:
    terms = {}
    for _ in range(int(rng.integers(1, 5))):
        exps = [0] * arity
        for _ in range(int(rng.integers(0, max_degree + 1))):
            exps[int(rng.integers(0, arity))] += 1
        terms[tuple(exps)] = int(rng.integers(-4, 5))
    # a nonconstant term keeps the atom from folding away
    lead = [0] * arity
    lead[int(rng.integers(0, arity))] = int(rng.integers(1, max_degree + 1))
    terms[tuple(lead)] = int(rng.choice([-2, -1, 1, 2]))
    return Atom(Polynomial.from_dict(arity, terms), Relation(str(rng.choice([r.value for r in Relation]))))


def _random_formula(rng: np.random.Generator, arity: int, max_degree: int):
    first, second = _random_atom(rng, arity, max_degree), _random_atom(rng, arity, max_degree)
    shape = int(rng.integers(0, 4))
    if shape == 0:
        return first
    if shape == 1:
        return And((first, second))
    if shape == 2:
        return Or((first, second))
    return Not(And((first, second)))


def _random_rational(rng: np.random.Generator, bound: int) -> Fraction:
    return Fraction(int(rng.integers(-bound * 8, bound * 8 + 1)), 8)


def test_interval_decomposition_agrees_with_pointwise_membership():
    rng = np.random.default_rng(21)
    for _ in range(100):
        f = _random_formula(rng, 1, 4)
        pieces = interval_decomposition(f)
        for _ in range(25):
            t = _random_rational(rng, 6)
            assert any(piece.contains(t) for piece in pieces) == evaluate(f, [t])
        assert sum(piece.contains(0) for piece in pieces) <= 1


def test_line_restriction_agrees_with_fiber_membership():
    rng = np.random.default_rng(22)
    for _ in range(100):
        s = FiberSet(2, _random_formula(rng, 2, 3))
        axis = int(rng.integers(0, 2))
        offset, t = _random_rational(rng, 5), _random_rational(rng, 5)
        point = [t, offset] if axis == 0 else [offset, t]
        restricted = axis_line_restriction(s, axis, [offset])
        assert evaluate(restricted, [t]) == contains(s, point)
        pieces = interval_decomposition(restricted)
        assert any(piece.contains(t) for piece in pieces) == contains(s, point)


def test_projection_membership_is_sound_on_random_ellipses():
    rng = np.random.default_rng(23)
    for _ in range(40):
        a, b = (int(v) for v in rng.integers(1, 7, size=2))
        s = shapes.ellipsoid([a, b])
        radius = Fraction(max(a, b))
        for axis, half in ((0, a), (1, b)):
            y = _random_rational(rng, 8)
            result = projection_membership(s, (axis,), [y], radius=radius)
            if result.status == "inside":
                assert abs(y) <= half
                assert contains(s, result.witness)
                assert result.witness[axis] == y
            elif result.status == "outside":
                assert abs(y) > half
