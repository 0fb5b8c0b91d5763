from fractions import Fraction

import pytest

from backend.app.services import shapes
from backend.app.services.lattice import Lattice, reduced_basis
from backend.app.services.measure import (
    CERTIFIED_GRID,
    MONTE_CARLO,
    image_fiber,
    image_volume,
    projection_volumes,
    unit_ball_volume,
    volume,
    vprime_lower_estimate,
)
from backend.app.services.semialg import contains
from backend.app.utils.error_handling import ArityMismatchError

PI_LO = Fraction(314159, 100000)
PI_HI = Fraction(314160, 100000)


def test_unit_ball_volumes():
    assert unit_ball_volume(0).describe() == "1"
    assert unit_ball_volume(1).describe() == "2"
    b2, b3, b4 = unit_ball_volume(2), unit_ball_volume(3), unit_ball_volume(4)
    assert (b2.coeff, b2.pi_power) == (1, 1)
    assert (b3.coeff, b3.pi_power) == (Fraction(4, 3), 1)
    assert (b4.coeff, b4.pi_power) == (Fraction(1, 2), 2)
    assert b2.enclosure().lo < PI_HI and b2.enclosure().hi > PI_LO


def test_certified_grid_encloses_pi():
    est = volume(shapes.disc(1), CERTIFIED_GRID, depth=8)
    assert est.certified
    assert est.lower <= PI_LO and est.upper >= PI_HI
    assert est.upper - est.lower <= Fraction(15, 100)


def test_certified_grid_box_volume_is_exact_from_below():
    est = volume(shapes.box([4, 2]), depth=8)
    assert est.lower == 32
    assert est.upper <= 33


def test_segment_has_zero_volume_lower_bound():
    est = volume(shapes.segment(1), depth=6)
    assert est.lower == 0
    assert est.upper <= Fraction(1, 4)


def test_monte_carlo_is_reproducible_and_brackets_pi():
    first = volume(shapes.disc(1), MONTE_CARLO, samples=4000, seed=7)
    second = volume(shapes.disc(1), MONTE_CARLO, samples=4000, seed=7)
    assert first == second
    assert not first.certified
    assert first.lower <= PI_LO and first.upper >= PI_HI
    assert first.mc_stderr > 0


def test_projection_volumes_of_the_disc():
    zero = projection_volumes(shapes.disc(1), 0)
    assert zero.total.lower == zero.total.upper == 1

    one = projection_volumes(shapes.disc(1), 1, depth=6)
    assert set(one.per_subset) == {(0,), (1,)}
    assert one.total.lower <= 4 <= one.total.upper
    assert one.total.lower >= 3


def test_projection_dimension_range():
    with pytest.raises(ArityMismatchError):
        projection_volumes(shapes.disc(1), 2)


def test_image_fiber_under_the_normalizing_map():
    nmap = reduced_basis(Lattice.diagonal([2, 3]))
    image, bound = image_fiber(shapes.disc(2), nmap)
    assert bound == 1
    assert contains(image, [1, 0])
    assert contains(image, [0, Fraction(2, 3)])
    assert not contains(image, [0, 1])


def test_vprime_estimate_stays_below_the_true_width():
    est = vprime_lower_estimate(shapes.disc(1), 1, samples=2000, seed=0)
    assert est.label == "lower-estimate"
    assert 1.5 < est.value <= 2 + 1e-9


def test_image_volume_is_the_volume_over_the_determinant():
    nmap = reduced_basis(Lattice.diagonal([2, 3]))
    est = image_volume(shapes.disc(2), nmap, depth=7)
    assert est.certified
    # Vol(disc(2)) / 6 = 2 pi / 3
    assert est.lower <= PI_LO * 2 / 3
    assert est.upper >= PI_HI * 2 / 3


def test_monte_carlo_bounds_cover_the_true_volume():
    covered = 0
    for seed in range(20):
        est = volume(shapes.disc(1), MONTE_CARLO, samples=2000, seed=seed)
        covered += est.lower <= PI_LO and est.upper >= PI_HI
    assert covered >= 19


@pytest.mark.parametrize("s", [shapes.disc(3), shapes.annulus(1, 3), shapes.ellipsoid([3, 2]), shapes.box([2, 1])])
def test_certified_grid_bounds_tighten_with_depth(s):
    estimates = [volume(s, depth=d) for d in range(2, 7)]
    for coarse, fine in zip(estimates, estimates[1:]):
        assert coarse.lower <= fine.lower
        assert fine.upper <= coarse.upper


def test_projection_bounds_tighten_with_depth():
    totals = [projection_volumes(shapes.disc(2), 1, depth=d).total for d in range(2, 5)]
    for coarse, fine in zip(totals, totals[1:]):
        assert coarse.lower <= fine.lower
        assert fine.upper <= coarse.upper
    assert totals[-1].lower <= 8 <= totals[-1].upper
