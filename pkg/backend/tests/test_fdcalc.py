import random

import pytest

from backend.app.services.exactnum import Polynomial
from backend.app.services.fdcalc import (
    CLOSURE_KINDS,
    Complement,
    ExistentialDescriptor,
    FDPair,
    Flavor,
    Intersection,
    Leaf,
    Permute,
    PfaffianSpec,
    PolynomialFamily,
    PositivitySet,
    ProductWithLine,
    Projection,
    Union_,
    ZeroSet,
    ambient_of,
    check_pfaffian,
    closure_family_expr,
    closure_family_fd,
    components_bound,
    pfaffian_fd,
    rexp_restrict_pipeline,
    run_rexp_pipeline,
    semi_pfaffian_fd,
    star_conversion,
    track,
    track_with_trace,
)
from backend.app.utils.error_handling import (
    ArityMismatchError,
    ConfigParseError,
    MalformedExpressionError,
    MissingPolynomialFamilyError,
    NonExistentialFormulaError,
)

x, y, z = Polynomial.variables(3)
PARABOLA = ZeroSet(x - y - z * z, 3)


def test_zero_set_and_its_projection():
    assert track(PARABOLA) == FDPair(3, 2)
    assert track(Projection(PARABOLA)) == FDPair(3, 2)
    assert track(Projection(PARABOLA), Flavor.WEAKLY_SHARP) == FDPair(4, 2)
    assert track(Projection(PARABOLA), Flavor.EFFECTIVE) == FDPair(4, 0)


def test_intersection_of_two_declared_leaves():
    e = Intersection((Leaf(FDPair(6, 2), 3, "a"), Leaf(FDPair(6, 2), 3, "b")))
    assert track(e) == FDPair(6, 4)
    assert track(e, Flavor.WEAKLY_SHARP) == FDPair(7, 4)
    assert track(Union_(e.children), Flavor.WEAKLY_SHARP) == FDPair(6, 4)


def test_presharp_folds_left():
    leaves = tuple(Leaf(FDPair(2, 1), 2, str(i)) for i in range(3))
    assert track(Union_(leaves), Flavor.PRESHARP) == FDPair(4, 3)
    assert track(Intersection(leaves), Flavor.PRESHARP) == FDPair(4, 3)


def test_product_with_line_and_permutation():
    leaf = Leaf(FDPair(2, 3), 2)
    assert track(ProductWithLine(leaf)) == FDPair(3, 3)
    assert track(Permute(leaf, (1, 0))) == FDPair(2, 3)


def test_leaf_is_raised_to_its_ambient_dimension():
    assert track(Leaf(FDPair(1, 5), 4)) == FDPair(4, 5)


def test_positivity_set_goes_through_a_fresh_square():
    x1 = Polynomial.variable(1, 0)
    assert track(PositivitySet(x1, 1)) == FDPair(2, 2)
    assert track(PositivitySet(x1, 1), Flavor.WEAKLY_SHARP) == FDPair(4, 2)


def test_trace_records_rules_and_shares_repeated_nodes():
    result = track_with_trace(Projection(PARABOLA))
    assert [s.rule for s in result.trace] == ["S7", "S4"]
    assert result.trace[1].children == (0,)

    leaf = Leaf(FDPair(3, 1), 3)
    shared = track_with_trace(Intersection((leaf, leaf)))
    assert len(shared.trace) == 2
    assert shared.trace[-1].children == (0, 0)
    assert shared.fd == FDPair(3, 2)


def test_malformed_expressions():
    leaf = Leaf(FDPair(1, 1), 2)
    with pytest.raises(MalformedExpressionError):
        ambient_of(Union_((leaf,)))
    with pytest.raises(MalformedExpressionError):
        ambient_of(Intersection((leaf, Leaf(FDPair(1, 1), 3))))
    with pytest.raises(MalformedExpressionError):
        ambient_of(Permute(leaf, (0, 0)))
    with pytest.raises(MalformedExpressionError):
        ambient_of(Projection(Leaf(FDPair(0, 0), 0)))
    with pytest.raises(ArityMismatchError):
        ambient_of(ZeroSet(Polynomial.variable(2, 0), 3))


def test_negative_pairs_are_rejected():
    with pytest.raises(ConfigParseError):
        FDPair(-1, 0)


def _random_expr(rng: random.Random, depth: int, ambient: int):
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.5:
            return Leaf(FDPair(rng.randint(0, 4), rng.randint(0, 3)), ambient, str(rng.random()))
        xs = Polynomial.variables(ambient)
        return ZeroSet(xs[0] * xs[-1] - rng.randint(1, 3), ambient)
    kind = rng.choice(["union", "intersection", "complement", "product", "projection", "permute"])
    if kind in ("union", "intersection"):
        kids = tuple(_random_expr(rng, depth - 1, ambient) for _ in range(rng.randint(2, 3)))
        return Union_(kids) if kind == "union" else Intersection(kids)
    if kind == "product" and ambient >= 2:
        return ProductWithLine(_random_expr(rng, depth - 1, ambient - 1))
    if kind == "projection" and ambient <= 3:
        return Projection(_random_expr(rng, depth - 1, ambient + 1))
    if kind == "permute":
        return Permute(_random_expr(rng, depth - 1, ambient), tuple(reversed(range(ambient))))
    return Complement(_random_expr(rng, depth - 1, ambient))


def test_flavors_are_ordered_on_random_expressions():
    rng = random.Random(2024)
    for _ in range(500):
        e = _random_expr(rng, 4, rng.randint(1, 3))
        sharp = track_with_trace(e, Flavor.SHARP)
        weak = track_with_trace(e, Flavor.WEAKLY_SHARP)
        pre = track_with_trace(e, Flavor.PRESHARP)
        assert weak.fd.dominates(sharp.fd)
        assert pre.fd.dominates(weak.fd)
        assert sharp.fd.degree == weak.fd.degree == pre.fd.degree
        assert track(e, Flavor.EFFECTIVE).degree == 0
        for result in (sharp, weak, pre):
            assert all(step.fd.format >= step.ambient for step in result.trace)


def test_larger_leaves_never_give_smaller_pairs():
    rng = random.Random(7)
    for _ in range(30):
        a, b = rng.randint(0, 3), rng.randint(0, 3)
        small = Leaf(FDPair(a, b), 2, "s")
        big = Leaf(FDPair(a + rng.randint(0, 2), b + rng.randint(0, 2)), 2, "s")
        other = Leaf(FDPair(rng.randint(0, 3), rng.randint(0, 3)), 2, "o")
        for wrap in (
            lambda leaf: Union_((leaf, other)),
            lambda leaf: Projection(ProductWithLine(Complement(leaf))),
            lambda leaf: Intersection((Complement(leaf), other)),
        ):
            for flavor in Flavor:
                assert track(wrap(big), flavor).dominates(track(wrap(small), flavor))


def test_complement_family_of_one_fiber_coordinate():
    for fd in (FDPair(1, 1), FDPair(3, 2), FDPair(5, 7)):
        assert closure_family_fd(fd, "complement", m=0, n=1) == FDPair(fd.format + 1, 2 * fd.degree)


@pytest.mark.parametrize("which", CLOSURE_KINDS)
def test_closure_constructions_stay_in_the_filtration(which):
    z_fd = FDPair(2, 2)
    for flavor in Flavor:
        fd = closure_family_fd(z_fd, which, flavor, m=1, n=1)
        assert fd.format >= 2
        if flavor is not Flavor.EFFECTIVE:
            assert fd.dominates(z_fd)


def test_closure_expression_lives_in_the_family_ambient():
    leaf = Leaf(FDPair(2, 2), 3)
    for which in CLOSURE_KINDS:
        assert ambient_of(closure_family_expr(leaf, which, 1, 2)) == 3
    with pytest.raises(ConfigParseError):
        closure_family_expr(leaf, "frontier", 1, 2)
    with pytest.raises(MalformedExpressionError):
        closure_family_expr(leaf, "interior", 0, 2)


def test_polynomial_families():
    assert components_bound(FDPair(2, 3), PolynomialFamily.of((1, 1, 2))) == 18
    assert star_conversion(FDPair(2, 3), PolynomialFamily.of((1, 0, "F"))) == FDPair(2, 9)
    half = PolynomialFamily.of(("1/2", 0, 1))
    assert components_bound(FDPair(1, 3), half) == 1
    assert star_conversion(FDPair(1, 3), half) == FDPair(1, 2)
    assert track_with_trace(PARABOLA, family=PolynomialFamily.identity()).components == 2
    with pytest.raises(MissingPolynomialFamilyError):
        components_bound(FDPair(1, 1), None)
    with pytest.raises(MissingPolynomialFamilyError):
        star_conversion(FDPair(1, 1), None)


def test_pfaffian_pairs():
    check = check_pfaffian(PfaffianSpec.exp_on_interval())
    assert check.fd == FDPair(2, 2)
    assert check.flagged
    assert check.discrepancies == ("format: n + k = 2, stated 1",)
    assert not check_pfaffian(PfaffianSpec.polynomial(2, 3)).flagged
    assert pfaffian_fd(PfaffianSpec.polynomial(2, 3)) == FDPair(2, 3)
    with pytest.raises(ConfigParseError):
        PfaffianSpec(n=2, k=1, chain_degrees=(1,), poly_degree=1)


def test_semi_pfaffian_sets():
    assert semi_pfaffian_fd([FDPair(2, 2), FDPair(3, 1)]) == FDPair(3, 3)
    with pytest.raises(MalformedExpressionError):
        semi_pfaffian_fd([])


GRAPH_OF_EXP = ExistentialDescriptor(free_vars=1, quantified_vars=1, exp_occurrences=1, atom_degrees=(1, 1))


def test_restriction_pipeline_does_not_depend_on_the_bound():
    assert {rexp_restrict_pipeline(GRAPH_OF_EXP, M) for M in (1, 10, 1000)} == {FDPair(3, 4)}


def test_restriction_pipeline_rejects_bad_input():
    with pytest.raises(ConfigParseError):
        rexp_restrict_pipeline(GRAPH_OF_EXP, 0)
    universal = ExistentialDescriptor(1, 1, 1, (1,), existential=False)
    with pytest.raises(NonExistentialFormulaError):
        rexp_restrict_pipeline(universal, 1)


def test_rexp_projections_are_tracked():
    report = run_rexp_pipeline(GRAPH_OF_EXP, 10)
    assert report.pfaffian == FDPair(3, 4)
    assert report.star is None
    assert report.projected.fd == FDPair(4, 4)

    converted = run_rexp_pipeline(GRAPH_OF_EXP, 10, PolynomialFamily.of((1, 0, "F")), Flavor.SHARP)
    assert converted.star == FDPair(3, 64)
    assert converted.projected.fd == FDPair(3, 64)
