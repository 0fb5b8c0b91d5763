"""
Exact lattices.

Bases are square matrices of Fractions whose rows are the basis vectors. The
module provides exact LLL reduction, Fincke-Pohst enumeration of lattice
vectors in a ball, successive minima with achieving vectors, a basis with
|v_i| <= i * lambda_i, and the normalizing map sending that basis to the
standard basis.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from ..config import get_settings
from ..utils.error_handling import (
    ArityMismatchError,
    ConfigParseError,
    DimensionGuardError,
    LatticeValidator,
    OlatError,
)
from .exactnum import RationalLike, sqrt_enclosure, to_rational

logger = logging.getLogger(__name__)
settings = get_settings()

Vector = tuple[Fraction, ...]
Matrix = tuple[Vector, ...]


# ---------------------------------------------------------------------------
# Exact linear algebra
# ---------------------------------------------------------------------------

def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    if len(u) != len(v):
        raise ArityMismatchError(f"Cannot dot vectors of length {len(u)} and {len(v)}")
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def norm_sq(v: Sequence[Fraction]) -> Fraction:
    return dot(v, v)


def as_matrix(rows: Sequence[Sequence[RationalLike]]) -> Matrix:
    return tuple(tuple(to_rational(x) for x in row) for row in rows)


def transpose(m: Matrix) -> Matrix:
    return tuple(zip(*m)) if m else ()


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    bt = transpose(b)
    return tuple(tuple(dot(row, col) for col in bt) for row in a)


def identity_matrix(n: int) -> Matrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def mat_det(m: Matrix) -> Fraction:
    """Determinant by fraction-exact Gaussian elimination."""
    a = [list(row) for row in m]
    n = len(a)
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        det *= a[col][col]
        for r in range(col + 1, n):
            factor = a[r][col] / a[col][col]
            if factor:
                for c in range(col, n):
                    a[r][c] -= factor * a[col][c]
    return det


def mat_inverse(m: Matrix) -> Matrix:
    n = len(m)
    a = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise ConfigParseError("Matrix is singular")
        a[col], a[pivot] = a[pivot], a[col]
        lead = a[col][col]
        a[col] = [x / lead for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col]
                a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
    return tuple(tuple(row[n:]) for row in a)


def rank(vectors: Sequence[Sequence[Fraction]]) -> int:
    rows = [list(v) for v in vectors]
    if not rows:
        return 0
    r = 0
    for col in range(len(rows[0])):
        pivot = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        for i in range(r + 1, len(rows)):
            factor = rows[i][col] / rows[r][col]
            if factor:
                rows[i] = [x - factor * y for x, y in zip(rows[i], rows[r])]
        r += 1
    return r


def apply_map(m: Sequence[Sequence[RationalLike]], point: Sequence[RationalLike]) -> Vector:
    """Exact matrix-vector product, the vector taken as a column."""
    if any(len(row) != len(point) for row in m):
        raise ArityMismatchError(f"Matrix with {len(m[0]) if m else 0} columns applied to a vector of length {len(point)}")
    xs = [to_rational(x) for x in point]
    return tuple(dot([to_rational(a) for a in row], xs) for row in m)


def gram_schmidt(basis: Sequence[Sequence[Fraction]]) -> tuple[list[list[Fraction]], list[list[Fraction]]]:
    """Orthogonalized rows and the coefficients mu[i][j] = <b_i, b*_j> / |b*_j|^2."""
    n = len(basis)
    ortho: list[list[Fraction]] = []
    mu = [[Fraction(0)] * n for _ in range(n)]
    for i, b in enumerate(basis):
        v = list(b)
        for j in range(i):
            bj = ortho[j]
            denom = norm_sq(bj)
            mu[i][j] = dot(b, bj) / denom if denom else Fraction(0)
            v = [x - mu[i][j] * y for x, y in zip(v, bj)]
        ortho.append(v)
    return ortho, mu


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lattice:
    basis: Matrix

    def __post_init__(self):
        rows = [list(r) for r in self.basis]
        is_valid, message = LatticeValidator.validate_basis(rows)
        if not is_valid:
            raise ConfigParseError(message)
        basis = as_matrix(rows)
        if mat_det(basis) == 0:
            raise ConfigParseError("Lattice basis is singular")
        object.__setattr__(self, "basis", basis)

    @classmethod
    def identity(cls, n: int) -> "Lattice":
        return cls(identity_matrix(n))

    @classmethod
    def diagonal(cls, entries: Sequence[RationalLike]) -> "Lattice":
        n = len(entries)
        return cls(tuple(tuple(to_rational(entries[i]) if i == j else Fraction(0) for j in range(n)) for i in range(n)))

    @property
    def dim(self) -> int:
        return len(self.basis)

    def vector(self, coefficients: Sequence[int]) -> Vector:
        return tuple(
            sum((c * b[k] for c, b in zip(coefficients, self.basis)), Fraction(0))
            for k in range(self.dim)
        )


@dataclass(frozen=True)
class MinimaProfile:
    sq_minima: tuple[Fraction, ...]
    achieving_vectors: tuple[Vector, ...]


@dataclass(frozen=True)
class NormalizingMap:
    """``matrix`` is Psi with Psi v_i = e_i; ``change_of_basis`` expresses v_i in the input basis."""
    matrix: Matrix
    reduced_basis: Matrix
    change_of_basis: Matrix

    @property
    def inverse(self) -> Matrix:
        return transpose(self.reduced_basis)


def determinant(lattice: Lattice) -> Fraction:
    return abs(mat_det(lattice.basis))


# ---------------------------------------------------------------------------
# Reduction and enumeration
# ---------------------------------------------------------------------------

def lll_reduce(basis: Sequence[Sequence[RationalLike]], delta: Fraction = Fraction(3, 4)) -> Matrix:
    """Exact LLL reduction of the rows of ``basis``."""
    b = [list(row) for row in as_matrix(basis)]
    n = len(b)
    ortho, mu = gram_schmidt(b)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            q = round(mu[k][j])
            if q:
                b[k] = [x - q * y for x, y in zip(b[k], b[j])]
                ortho, mu = gram_schmidt(b)
        if norm_sq(ortho[k]) >= (delta - mu[k][k - 1] ** 2) * norm_sq(ortho[k - 1]):
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            ortho, mu = gram_schmidt(b)
            k = max(k - 1, 1)
    return as_matrix(b)


def enumerate_ball(lattice: Lattice, radius_sq: RationalLike, include_zero: bool = False) -> list[Vector]:
    """All lattice vectors v with |v|^2 <= radius_sq (Fincke-Pohst), sorted by norm."""
    radius_sq = to_rational(radius_sq)
    if radius_sq < 0:
        return []
    basis = lll_reduce(lattice.basis)
    n = len(basis)
    ortho, mu = gram_schmidt(basis)
    weights = [norm_sq(b) for b in ortho]
    coeffs = [0] * n
    found: list[Vector] = []

    def descend(i: int, remaining: Fraction):
        center = -sum((mu[j][i] * coeffs[j] for j in range(i + 1, n)), Fraction(0))
        reach = sqrt_enclosure(remaining / weights[i]).hi
        for x in range(math.floor(center - reach), math.ceil(center + reach) + 1):
            used = weights[i] * (x - center) ** 2
            if used > remaining:
                continue
            coeffs[i] = x
            if i == 0:
                found.append(tuple(
                    sum((c * b[k] for c, b in zip(coeffs, basis)), Fraction(0)) for k in range(n)
                ))
            else:
                descend(i - 1, remaining - used)
        coeffs[i] = 0

    descend(n - 1, radius_sq)
    if not include_zero:
        found = [v for v in found if any(v)]
    found.sort(key=lambda v: (norm_sq(v), tuple(-x for x in v)))
    return found


def _canonical_sign(v: Vector) -> Vector:
    first = next(x for x in v if x != 0)
    return v if first > 0 else tuple(-x for x in v)


def successive_minima(lattice: Lattice) -> MinimaProfile:
    """Exact squared successive minima with linearly independent achieving vectors."""
    n = lattice.dim
    if n > settings.MINIMA_MAX_DIM:
        raise DimensionGuardError(f"Lattice dimension {n} exceeds the enumeration guard {settings.MINIMA_MAX_DIM}")
    reduced = lll_reduce(lattice.basis)
    norms = [norm_sq(b) for b in reduced]
    radius_sq, ceiling = min(norms), max(norms)

    while True:
        candidates = []
        seen = set()
        for v in enumerate_ball(lattice, radius_sq):
            v = _canonical_sign(v)
            if v not in seen:
                seen.add(v)
                candidates.append(v)
        candidates.sort(key=lambda v: (norm_sq(v), tuple(-x for x in v)))

        chosen: list[Vector] = []
        for v in candidates:
            if rank(chosen + [v]) == len(chosen) + 1:
                chosen.append(v)
                if len(chosen) == n:
                    break
        if len(chosen) == n:
            break
        if radius_sq >= ceiling:
            raise OlatError(f"Enumeration up to the longest reduced basis vector found only {len(chosen)} of {n} minima")
        radius_sq = min(4 * radius_sq, ceiling)

    profile = MinimaProfile(
        sq_minima=tuple(norm_sq(v) for v in chosen),
        achieving_vectors=tuple(chosen),
    )
    logger.debug(f"Successive minima (squared): {[str(q) for q in profile.sq_minima]}")
    return profile


def _lower_hermite_form(rows: list[list[int]]) -> list[list[int]]:
    """Lower-triangular integer basis of the row lattice of a full-rank square integer matrix."""
    n = len(rows)
    pending = [list(r) for r in rows]
    result: list[Optional[list[int]]] = [None] * n
    for col in range(n - 1, -1, -1):
        while True:
            active = [r for r in pending if r[col] != 0]
            if len(active) <= 1:
                break
            pivot = min(active, key=lambda r: abs(r[col]))
            for r in active:
                if r is not pivot:
                    q = r[col] // pivot[col]
                    for k in range(n):
                        r[k] -= q * pivot[k]
        pivot = next(r for r in pending if r[col] != 0)
        pending.remove(pivot)
        if pivot[col] < 0:
            pivot = [-x for x in pivot]
        result[col] = pivot
    for i in range(n):
        for j in range(i - 1, -1, -1):
            q = round(Fraction(result[i][j], result[j][j]))
            if q:
                result[i] = [a - q * b for a, b in zip(result[i], result[j])]
    return result


def reduced_basis(lattice: Lattice, profile: Optional[MinimaProfile] = None) -> NormalizingMap:
    """Basis v_1..v_n of the lattice with |v_i|^2 <= i^2 lambda_i^2, and Psi = (V^T)^-1."""
    profile = profile or successive_minima(lattice)
    n = lattice.dim
    achieving = as_matrix(profile.achieving_vectors)

    # Coordinates t with t . U in the lattice form the row lattice of A^-1, A = U B^-1.
    a = mat_mul(achieving, mat_inverse(lattice.basis))
    a_inv = mat_inverse(a)
    denom = math.lcm(*(x.denominator for row in a_inv for x in row))
    scaled = [[int(x * denom) for x in row] for row in a_inv]
    triangular = _lower_hermite_form(scaled)
    t = [[Fraction(x, denom) for x in row] for row in triangular]

    vs = mat_mul(as_matrix(t), achieving)
    change = mat_mul(vs, mat_inverse(lattice.basis))

    for i, v in enumerate(vs, start=1):
        if norm_sq(v) > i * i * profile.sq_minima[i - 1]:
            raise OlatError(f"Reduced basis vector {i} violates |v_i|^2 <= i^2 lambda_i^2")
    if any(x.denominator != 1 for row in change for x in row) or abs(mat_det(change)) != 1:
        raise OlatError("Reduced basis is not a unimodular change of the input basis")

    psi = mat_inverse(transpose(vs))
    logger.debug(f"Reduced basis for dimension {n}: {[[str(x) for x in v] for v in vs]}")
    return NormalizingMap(matrix=psi, reduced_basis=vs, change_of_basis=change)


def minkowski_second_check(lattice: Lattice, profile: Optional[MinimaProfile] = None) -> str:
    """Squared Minkowski second theorem (prod lambda_i^2) B_n^2 <= (2^n det)^2.

    Returns "verified", "indeterminate" or "violated" against a certified pi enclosure.
    """
    from .measure import unit_ball_volume

    profile = profile or successive_minima(lattice)
    n = lattice.dim
    product = math.prod(profile.sq_minima, start=Fraction(1))
    ball_sq = unit_ball_volume(n).enclosure() ** 2
    rhs = (2 ** n * determinant(lattice)) ** 2
    if product * ball_sq.hi <= rhs:
        return "verified"
    if product * ball_sq.lo > rhs:
        return "violated"
    return "indeterminate"
