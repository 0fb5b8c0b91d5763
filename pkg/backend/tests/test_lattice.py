from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from backend.app.services.lattice import (
    Lattice,
    apply_map,
    determinant,
    enumerate_ball,
    identity_matrix,
    lll_reduce,
    mat_det,
    mat_mul,
    minkowski_second_check,
    norm_sq,
    reduced_basis,
    successive_minima,
    transpose,
)
from backend.app.utils.error_handling import ConfigParseError, DimensionGuardError


def _lattice(rows) -> Lattice:
    return Lattice(tuple(tuple(r) for r in rows))


def test_singular_basis_is_rejected():
    with pytest.raises(ConfigParseError):
        _lattice([[1, 2], [2, 4]])


def test_non_square_basis_is_rejected():
    with pytest.raises(ConfigParseError):
        _lattice([[1, 0, 0], [0, 1, 0]])


def test_lll_reduces_a_skewed_basis_of_z2():
    reduced = lll_reduce(((1, 0), (100, 1)))
    assert sorted(norm_sq(b) for b in reduced) == [1, 1]
    assert abs(mat_det(reduced)) == 1


def test_enumerate_ball_counts_short_vectors():
    z2 = Lattice.identity(2)
    assert len(enumerate_ball(z2, 2)) == 8
    assert len(enumerate_ball(z2, 2, include_zero=True)) == 9
    assert len(enumerate_ball(Lattice.identity(3), 1)) == 6


@pytest.mark.parametrize(
    "rows, expected",
    [
        ([[1, 0], [0, 1]], [1, 1]),
        ([[2, 0], [0, 3]], [4, 9]),
        ([[2, 0], [1, 2]], [4, 5]),
        ([[1, 0], [Fraction(1, 2), Fraction(1, 2)]], [Fraction(1, 2), Fraction(1, 2)]),
    ],
)
def test_successive_minima(rows, expected):
    profile = successive_minima(_lattice(rows))
    assert list(profile.sq_minima) == expected
    assert [norm_sq(v) for v in profile.achieving_vectors] == expected


def test_achieving_vectors_have_canonical_sign():
    profile = successive_minima(_lattice([[2, 0], [1, 2]]))
    assert profile.achieving_vectors == ((2, 0), (1, 2))


def test_minima_dimension_guard():
    with pytest.raises(DimensionGuardError):
        successive_minima(Lattice.identity(7))


@pytest.mark.parametrize("rows", [[[2, 0], [0, 3]], [[2, 0], [1, 2]], [[3, 1, 0], [1, 2, 1], [0, 1, 4]]])
def test_normalizing_map_sends_reduced_basis_to_unit_vectors(rows):
    lattice = _lattice(rows)
    profile = successive_minima(lattice)
    nmap = reduced_basis(lattice, profile)
    n = lattice.dim

    assert mat_mul(nmap.matrix, transpose(nmap.reduced_basis)) == identity_matrix(n)
    assert abs(mat_det(nmap.change_of_basis)) == 1
    for i, v in enumerate(nmap.reduced_basis, start=1):
        assert norm_sq(v) <= i * i * profile.sq_minima[i - 1]
    # lattice vectors land on integer points
    for coefficients in ([1, 0, 0], [1, -1, 2], [0, 3, 1]):
        image = apply_map(nmap.matrix, lattice.vector(coefficients[:n]))
        assert all(x.denominator == 1 for x in image)


def test_determinant_and_minkowski_second_theorem():
    lattice = _lattice([[1, 0], [Fraction(1, 2), Fraction(1, 2)]])
    assert determinant(lattice) == Fraction(1, 2)
    assert minkowski_second_check(lattice) == "verified"
    assert minkowski_second_check(Lattice.identity(1)) == "verified"


def _random_lattice(rng: np.random.Generator) -> Lattice:
    n = int(rng.integers(2, 4))
    while True:
        rows = tuple(
            tuple(Fraction(int(rng.integers(-4, 5)), int(rng.choice([1, 1, 2]))) for _ in range(n))
            for _ in range(n)
        )
        if mat_det(rows) != 0:
            return Lattice(rows)


def test_successive_minima_on_random_lattices():
    rng = np.random.default_rng(31)
    for _ in range(50):
        lattice = _random_lattice(rng)
        n = lattice.dim
        profile = successive_minima(lattice)
        nmap = reduced_basis(lattice, profile)
        sq = profile.sq_minima

        assert list(sq) == sorted(sq)
        assert [norm_sq(v) for v in profile.achieving_vectors] == list(sq)
        assert mat_det(profile.achieving_vectors) != 0
        # Psi maps the lattice onto Z^n, so lattice vectors have integral images
        for v in profile.achieving_vectors:
            assert all(x.denominator == 1 for x in apply_map(nmap.matrix, v))
        shortest = min(norm_sq(lattice.vector(c)) for c in product(range(-2, 3), repeat=n) if any(c))
        assert sq[0] <= shortest
        assert sq[0] <= min(norm_sq(b) for b in lattice.basis)
        assert minkowski_second_check(lattice, profile) == "verified"


def test_normalizing_map_on_random_lattices():
    rng = np.random.default_rng(32)
    for _ in range(25):
        lattice = _random_lattice(rng)
        n = lattice.dim
        profile = successive_minima(lattice)
        nmap = reduced_basis(lattice, profile)

        assert mat_mul(nmap.matrix, transpose(nmap.reduced_basis)) == identity_matrix(n)
        assert abs(mat_det(nmap.change_of_basis)) == 1
        assert abs(mat_det(nmap.reduced_basis)) == determinant(lattice)
        for i, v in enumerate(nmap.reduced_basis, start=1):
            assert norm_sq(v) <= i * i * profile.sq_minima[i - 1]
        for _ in range(5):
            coefficients = [int(c) for c in rng.integers(-3, 4, size=n)]
            image = apply_map(nmap.matrix, lattice.vector(coefficients))
            assert all(x.denominator == 1 for x in image)
