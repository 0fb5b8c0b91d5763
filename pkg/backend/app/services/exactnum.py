"""
Exact numeric kernel.

Rationals are ``fractions.Fraction`` (always in lowest terms, positive
denominator). On top of them this module provides sparse multivariate
polynomials, Sturm-sequence real root isolation for univariate polynomials,
algebraic numbers given by an isolating interval, and interval arithmetic with
exact rational endpoints. Nothing here uses floating point.
"""
import logging
import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Optional, Sequence, Union

import mpmath

from ..config import get_settings
from ..utils.error_handling import (
    ArityMismatchError,
    ConfigParseError,
    EndpointRootError,
    ZeroPolynomialError,
)

logger = logging.getLogger(__name__)
settings = get_settings()

Rational = Fraction
RationalLike = Union[int, Fraction, str]
Exponent = tuple[int, ...]


def to_rational(value: RationalLike) -> Fraction:
    """Parse an int, Fraction or "num/den" string. Floats are rejected."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ConfigParseError(f"Invalid rational value: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigParseError(f"Invalid rational literal: {value!r}") from exc
    raise ConfigParseError(f"Rationals must be given as integers or 'num/den' strings, got {value!r}")


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def render_decimal(q: Fraction, digits: int = 12) -> str:
    """Decimal rendering for humans. Non-normative."""
    with localcontext() as ctx:
        ctx.prec = digits
        return str(Decimal(q.numerator) / Decimal(q.denominator))


def sign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Polynomial:
    """Sparse polynomial with exact rational coefficients.

    ``terms`` is normalized on construction: exponent vectors are merged,
    zero coefficients dropped and the tuple sorted, so equal polynomials compare
    and hash equal.
    """
    arity: int
    terms: tuple[tuple[Exponent, Fraction], ...] = ()

    def __post_init__(self):
        if self.arity < 0:
            raise ArityMismatchError(f"Polynomial arity must be nonnegative, got {self.arity}")
        merged: dict[Exponent, Fraction] = {}
        for exps, coeff in self.terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.arity:
                raise ArityMismatchError(
                    f"Exponent vector {exps} has length {len(exps)}, polynomial arity is {self.arity}"
                )
            if any(e < 0 for e in exps):
                raise ConfigParseError(f"Negative exponent in {exps}")
            merged[exps] = merged.get(exps, Fraction(0)) + to_rational(coeff)
        normalized = tuple(sorted((e, c) for e, c in merged.items() if c != 0))
        object.__setattr__(self, "terms", normalized)

    # -- constructors --------------------------------------------------------

    @classmethod
    def from_dict(cls, arity: int, mapping: Mapping[Exponent, RationalLike]) -> "Polynomial":
        return cls(arity, tuple((tuple(e), to_rational(c)) for e, c in mapping.items()))

    @classmethod
    def constant(cls, arity: int, value: RationalLike) -> "Polynomial":
        return cls(arity, (((0,) * arity, to_rational(value)),))

    @classmethod
    def zero(cls, arity: int) -> "Polynomial":
        return cls(arity, ())

    @classmethod
    def variable(cls, arity: int, index: int) -> "Polynomial":
        if not 0 <= index < arity:
            raise ArityMismatchError(f"Variable index {index} out of range for arity {arity}")
        exps = tuple(1 if i == index else 0 for i in range(arity))
        return cls(arity, ((exps, Fraction(1)),))

    @classmethod
    def variables(cls, arity: int) -> list["Polynomial"]:
        return [cls.variable(arity, i) for i in range(arity)]

    @classmethod
    def from_univariate(cls, coeffs: Sequence[RationalLike]) -> "Polynomial":
        """Coefficients low to high."""
        return cls(1, tuple(((k,), to_rational(c)) for k, c in enumerate(coeffs)))

    # -- inspection ----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        """Total degree; the zero polynomial has degree 0."""
        return max((sum(e) for e, _ in self.terms), default=0)

    @property
    def is_constant(self) -> bool:
        return self.degree == 0

    @property
    def constant_term(self) -> Fraction:
        return dict(self.terms).get((0,) * self.arity, Fraction(0))

    def as_dict(self) -> dict[Exponent, Fraction]:
        return dict(self.terms)

    def degree_in(self, index: int) -> int:
        return max((e[index] for e, _ in self.terms), default=0)

    def univariate_coefficients(self) -> list[Fraction]:
        """Dense coefficients low to high, trailing zeros trimmed."""
        if self.arity != 1:
            raise ArityMismatchError(f"Expected a univariate polynomial, got arity {self.arity}")
        coeffs = [Fraction(0)] * (self.degree + 1)
        for (k,), c in self.terms:
            coeffs[k] = c
        return _trim(coeffs)

    # -- arithmetic ----------------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.arity != self.arity:
                raise ArityMismatchError(f"Cannot combine polynomials of arity {self.arity} and {other.arity}")
            return other
        return Polynomial.constant(self.arity, other)

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        return Polynomial(self.arity, self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.arity, tuple((e, -c) for e, c in self.terms))

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Polynomial":
        other = self._coerce(other)
        terms = []
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                terms.append((tuple(a + b for a, b in zip(e1, e2)), c1 * c2))
        return Polynomial(self.arity, tuple(terms))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if k < 0:
            raise ValueError("Negative powers are not polynomials")
        result = Polynomial.constant(self.arity, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- evaluation and substitution ----------------------------------------

    def evaluate(self, point: Sequence[RationalLike]) -> Fraction:
        if len(point) != self.arity:
            raise ArityMismatchError(f"Point has {len(point)} coordinates, polynomial arity is {self.arity}")
        xs = [to_rational(x) for x in point]
        total = Fraction(0)
        for exps, c in self.terms:
            term = c
            for x, e in zip(xs, exps):
                if e:
                    term *= x ** e
            total += term
        return total

    def specialize(self, values: Mapping[int, RationalLike]) -> "Polynomial":
        """Substitute rationals for some variables; remaining variables keep their order."""
        for i in values:
            if not 0 <= i < self.arity:
                raise ArityMismatchError(f"Variable index {i} out of range for arity {self.arity}")
        fixed = {i: to_rational(v) for i, v in values.items()}
        keep = [i for i in range(self.arity) if i not in fixed]
        terms = []
        for exps, c in self.terms:
            coeff = c
            for i, v in fixed.items():
                if exps[i]:
                    coeff *= v ** exps[i]
            terms.append((tuple(exps[i] for i in keep), coeff))
        return Polynomial(len(keep), tuple(terms))

    def restrict_to_line(self, axis: int, offsets: Sequence[RationalLike]) -> "Polynomial":
        """Univariate restriction to the axis-parallel line through ``offsets``.

        ``offsets`` gives the other coordinates in increasing index order.
        """
        if not 0 <= axis < self.arity:
            raise ArityMismatchError(f"Axis {axis} out of range for arity {self.arity}")
        if len(offsets) != self.arity - 1:
            raise ArityMismatchError(f"Expected {self.arity - 1} offsets, got {len(offsets)}")
        others = [i for i in range(self.arity) if i != axis]
        return self.specialize(dict(zip(others, offsets)))

    def extend(self, extra: int) -> "Polynomial":
        """Same polynomial viewed in ``arity + extra`` variables (new ones trailing)."""
        return Polynomial(self.arity + extra, tuple((e + (0,) * extra, c) for e, c in self.terms))

    def chart_at_infinity(self, axis: int, direction: int) -> "Polynomial":
        """u^d * p(x) under x_axis = direction / u and x_j = w_j / u, d the total degree.

        For u > 0 the result has the sign of p, so the region where x_axis has
        the largest magnitude and sign ``direction`` becomes the bounded box
        u in (0, 1/R], w in [-1, 1]^(n-1).
        """
        if not 0 <= axis < self.arity:
            raise ArityMismatchError(f"Axis {axis} out of range for arity {self.arity}")
        d = self.degree
        terms = []
        for exps, c in self.terms:
            new = list(exps)
            new[axis] = d - sum(exps)
            terms.append((tuple(new), c * direction ** exps[axis]))
        return Polynomial(self.arity, tuple(terms))

    def compose(self, substitutions: Sequence["Polynomial"]) -> "Polynomial":
        """Replace variable i by ``substitutions[i]`` (all of one common arity)."""
        if len(substitutions) != self.arity:
            raise ArityMismatchError(f"Expected {self.arity} substitutions, got {len(substitutions)}")
        if not substitutions:
            return self
        target = substitutions[0].arity
        if any(s.arity != target for s in substitutions):
            raise ArityMismatchError("Substitutions must share one arity")
        powers: dict[tuple[int, int], Polynomial] = {}

        def power(i: int, e: int) -> Polynomial:
            if (i, e) not in powers:
                powers[(i, e)] = substitutions[i] ** e
            return powers[(i, e)]

        result = Polynomial.zero(target)
        for exps, c in self.terms:
            term = Polynomial.constant(target, c)
            for i, e in enumerate(exps):
                if e:
                    term = term * power(i, e)
            result = result + term
        return result

    def linear_substitution(self, matrix: Sequence[Sequence[RationalLike]]) -> "Polynomial":
        """The polynomial y -> p(M y)."""
        cols = len(matrix[0]) if matrix else 0
        ys = Polynomial.variables(cols)
        forms = []
        for row in matrix:
            form = Polynomial.zero(cols)
            for a, y in zip(row, ys):
                a = to_rational(a)
                if a:
                    form = form + y * a
            forms.append(form)
        return self.compose(forms)


def poly_eval(p: Polynomial, point: Sequence[RationalLike]) -> Fraction:
    """Exact value of ``p`` at ``point``."""
    return p.evaluate(point)


# ---------------------------------------------------------------------------
# Dense univariate helpers (coefficients low to high)
# ---------------------------------------------------------------------------

def _trim(coeffs: list[Fraction]) -> list[Fraction]:
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs


def uv_eval(coeffs: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def uv_derivative(coeffs: Sequence[Fraction]) -> list[Fraction]:
    return _trim([k * c for k, c in enumerate(coeffs)][1:])


def uv_divmod(a: Sequence[Fraction], b: Sequence[Fraction]) -> tuple[list[Fraction], list[Fraction]]:
    b = _trim(list(b))
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    rem = _trim(list(a))
    if len(rem) < len(b):
        return [], rem
    quot = [Fraction(0)] * (len(rem) - len(b) + 1)
    lead = b[-1]
    while len(rem) >= len(b) and rem:
        shift = len(rem) - len(b)
        factor = rem[-1] / lead
        quot[shift] = factor
        for i, c in enumerate(b):
            rem[shift + i] -= factor * c
        rem.pop()
        _trim(rem)
    return _trim(quot), rem


def uv_monic(coeffs: Sequence[Fraction]) -> list[Fraction]:
    coeffs = _trim(list(coeffs))
    if not coeffs:
        return coeffs
    lead = coeffs[-1]
    return [c / lead for c in coeffs]


def uv_gcd(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        _, r = uv_divmod(a, b)
        a, b = b, r
    return uv_monic(a)


def square_free_part(coeffs: Sequence[Fraction]) -> list[Fraction]:
    """Monic square-free part p / gcd(p, p')."""
    coeffs = _trim(list(coeffs))
    if not coeffs:
        raise ZeroPolynomialError()
    if len(coeffs) == 1:
        return [Fraction(1)]
    g = uv_gcd(coeffs, uv_derivative(coeffs))
    q, _ = uv_divmod(coeffs, g)
    return uv_monic(q)


def sturm_sequence(coeffs: Sequence[Fraction]) -> list[list[Fraction]]:
    p0 = _trim(list(coeffs))
    if not p0:
        raise ZeroPolynomialError()
    seq = [p0]
    p1 = uv_derivative(p0)
    while p1:
        seq.append(p1)
        _, r = uv_divmod(seq[-2], seq[-1])
        p1 = [-c for c in r]
    return seq


def _variations(seq: Sequence[Sequence[Fraction]], x: Fraction) -> int:
    signs = [sign(uv_eval(p, x)) for p in seq]
    signs = [s for s in signs if s != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def cauchy_bound(coeffs: Sequence[Fraction]) -> Fraction:
    """Every real root lies strictly inside (-B, B)."""
    coeffs = _trim(list(coeffs))
    lead = coeffs[-1]
    return 1 + max((abs(c / lead) for c in coeffs[:-1]), default=Fraction(0))


def _coefficients_of(p: Union[Polynomial, Sequence[Fraction]]) -> list[Fraction]:
    if isinstance(p, Polynomial):
        return p.univariate_coefficients()
    return _trim([to_rational(c) for c in p])


# ---------------------------------------------------------------------------
# Intervals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] with exact rational endpoints."""
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo, hi = to_rational(self.lo), to_rational(self.hi)
        if lo > hi:
            raise ValueError(f"Interval lower end {lo} exceeds upper end {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x: RationalLike) -> "Interval":
        x = to_rational(x)
        return cls(x, x)

    @classmethod
    def symmetric(cls, radius: RationalLike) -> "Interval":
        r = to_rational(radius)
        return cls(-r, r)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def magnitude(self) -> Fraction:
        return max(abs(self.lo), abs(self.hi))

    def contains(self, x: RationalLike) -> bool:
        x = to_rational(x)
        return self.lo <= x <= self.hi

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def overlaps(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        if not self.overlaps(other):
            return None
        return Interval(max(self.lo, other.lo), min(self.hi, other.hi))

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def bisect(self) -> tuple["Interval", "Interval"]:
        m = self.midpoint
        return Interval(self.lo, m), Interval(m, self.hi)

    def _coerce(self, other) -> "Interval":
        return other if isinstance(other, Interval) else Interval.point(other)

    def __add__(self, other) -> "Interval":
        other = self._coerce(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other) -> "Interval":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Interval":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Interval":
        other = self._coerce(other)
        products = [self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi]
        return Interval(min(products), max(products))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Interval":
        other = self._coerce(other)
        if other.lo <= 0 <= other.hi:
            raise ZeroDivisionError(f"Interval division by {other}, which contains zero")
        return self * Interval(1 / other.hi, 1 / other.lo)

    def __rtruediv__(self, other) -> "Interval":
        return self._coerce(other) / self

    def __pow__(self, k: int) -> "Interval":
        if k < 0:
            raise ValueError("Negative interval powers are not supported")
        if k == 0:
            return Interval.point(1)
        if k % 2 == 1 or self.lo >= 0:
            return Interval(self.lo ** k, self.hi ** k)
        if self.hi <= 0:
            return Interval(self.hi ** k, self.lo ** k)
        return Interval(Fraction(0), max(self.lo ** k, self.hi ** k))

    def __abs__(self) -> "Interval":
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Interval(Fraction(0), self.magnitude)

    def render(self, digits: int = 12) -> str:
        return f"[{render_decimal(self.lo, digits)}, {render_decimal(self.hi, digits)}]"


def interval_max(intervals: Iterable[Interval]) -> Interval:
    """Enclosure of the maximum of the enclosed values."""
    intervals = list(intervals)
    return Interval(max(i.lo for i in intervals), max(i.hi for i in intervals))


def interval_eval(p: Polynomial, box: Sequence[Interval]) -> Interval:
    """Sound (not tight) enclosure of the range of ``p`` over ``box``."""
    if len(box) != p.arity:
        raise ArityMismatchError(f"Box has {len(box)} coordinates, polynomial arity is {p.arity}")
    total = Interval.point(0)
    for exps, c in p.terms:
        term = Interval.point(c)
        for iv, e in zip(box, exps):
            if e:
                term = term * (iv ** e)
        total = total + term
    return total


# ---------------------------------------------------------------------------
# Root counting and isolation
# ---------------------------------------------------------------------------

def sturm_count(p: Union[Polynomial, Sequence[Fraction]], iv: Interval) -> int:
    """Number of distinct real roots of ``p`` in the open interval (iv.lo, iv.hi)."""
    coeffs = _coefficients_of(p)
    if not coeffs:
        raise ZeroPolynomialError("Sturm count of the zero polynomial is undefined")
    if uv_eval(coeffs, iv.lo) == 0 or uv_eval(coeffs, iv.hi) == 0:
        raise EndpointRootError(f"Polynomial vanishes at an endpoint of {iv}; perturb the endpoints")
    if iv.lo == iv.hi:
        return 0
    seq = sturm_sequence(coeffs)
    return _variations(seq, iv.lo) - _variations(seq, iv.hi)


def _split_point(coeffs: Sequence[Fraction], a: Fraction, b: Fraction) -> Fraction:
    """A rational strictly between a and b where the polynomial does not vanish."""
    d = 2
    while True:
        for j in range(1, d):
            if math.gcd(j, d) != 1:
                continue
            m = a + (b - a) * Fraction(j, d)
            if uv_eval(coeffs, m) != 0:
                return m
        d += 1


@dataclass(frozen=True)
class AlgebraicNumber:
    """A real root of a square-free polynomial, isolated by an interval.

    If ``lo == hi`` the root is that rational. Otherwise it is the unique root of
    ``coeffs`` in the open interval (lo, hi) and ``coeffs`` is nonzero at both ends.
    """
    coeffs: tuple[Fraction, ...]
    lo: Fraction
    hi: Fraction

    @property
    def is_rational(self) -> bool:
        return self.lo == self.hi

    @property
    def enclosure(self) -> Interval:
        return Interval(self.lo, self.hi)

    @property
    def certificate(self) -> dict:
        return {
            "poly": [format_rational(c) for c in self.coeffs],
            "interval": [format_rational(self.lo), format_rational(self.hi)],
            "sturm_count": 1,
        }

    def refine(self) -> "AlgebraicNumber":
        if self.is_rational:
            return self
        m = (self.lo + self.hi) / 2
        v = uv_eval(self.coeffs, m)
        if v == 0:
            return AlgebraicNumber(self.coeffs, m, m)
        if sign(v) == sign(uv_eval(self.coeffs, self.lo)):
            return AlgebraicNumber(self.coeffs, m, self.hi)
        return AlgebraicNumber(self.coeffs, self.lo, m)

    def refined_to(self, width: Fraction) -> "AlgebraicNumber":
        alpha = self
        while alpha.hi - alpha.lo > width:
            alpha = alpha.refine()
        return alpha

    def compare(self, x: RationalLike) -> int:
        """sign(alpha - x)."""
        x = to_rational(x)
        if self.is_rational:
            return sign(self.lo - x)
        if x <= self.lo:
            return 1
        if x >= self.hi:
            return -1
        v = uv_eval(self.coeffs, x)
        if v == 0:
            return 0
        return 1 if sign(v) == sign(uv_eval(self.coeffs, self.lo)) else -1

    def sign_of(self, p: Union[Polynomial, Sequence[Fraction]]) -> int:
        """Exact sign of polynomial ``p`` at this algebraic number."""
        coeffs = _coefficients_of(p)
        if not coeffs:
            return 0
        if self.is_rational:
            return sign(uv_eval(coeffs, self.lo))
        g = uv_gcd(self.coeffs, coeffs)
        if len(g) > 1 and sturm_count(g, self.enclosure) > 0:
            return 0
        alpha = self
        while True:
            if alpha.is_rational:
                return sign(uv_eval(coeffs, alpha.lo))
            v_lo, v_hi = uv_eval(coeffs, alpha.lo), uv_eval(coeffs, alpha.hi)
            if v_lo != 0 and v_hi != 0 and sturm_count(coeffs, alpha.enclosure) == 0:
                return sign(v_lo)
            alpha = alpha.refine()

    def __lt__(self, other: "AlgebraicNumber") -> bool:
        return (self.lo, self.hi) < (other.lo, other.hi)


def isolate_real_roots(p: Union[Polynomial, Sequence[Fraction]]) -> list[AlgebraicNumber]:
    """Pairwise disjoint isolating intervals for the distinct real roots of ``p``, ordered."""
    coeffs = _coefficients_of(p)
    if not coeffs:
        raise ZeroPolynomialError()
    q = square_free_part(coeffs)
    if len(q) == 1:
        return []
    seq = sturm_sequence(q)
    bound = cauchy_bound(q)
    qt = tuple(q)
    roots: list[AlgebraicNumber] = []
    stack = [(-bound, bound)]
    while stack:
        a, b = stack.pop()
        k = _variations(seq, a) - _variations(seq, b)
        if k == 0:
            continue
        if k == 1:
            roots.append(AlgebraicNumber(qt, a, b))
            continue
        m = _split_point(q, a, b)
        stack.append((m, b))
        stack.append((a, m))
    roots.sort()
    logger.debug(f"Isolated {len(roots)} real roots of a degree {len(coeffs) - 1} polynomial")
    return roots


# ---------------------------------------------------------------------------
# Certified constants and roots
# ---------------------------------------------------------------------------

@lru_cache
def pi_enclosure(digits: Optional[int] = None) -> Interval:
    """Rational enclosure of pi of width 2 * 10^-digits."""
    digits = digits or settings.PI_DIGITS
    with mpmath.workdps(digits + 10):
        text = mpmath.nstr(mpmath.pi, digits + 5)
    mid = Fraction(text)
    eps = Fraction(1, 10 ** digits)
    return Interval(mid - eps, mid + eps)


def iroot(n: int, k: int) -> int:
    """floor(n ** (1/k)) for n >= 0."""
    if n < 0:
        raise ValueError("iroot of a negative integer")
    if n < 2:
        return n
    lo, hi = 0, 1 << (n.bit_length() // k + 1)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid ** k <= n:
            lo = mid
        else:
            hi = mid - 1
    return lo


def root_enclosure(q: RationalLike, k: int, bits: Optional[int] = None) -> Interval:
    """Enclosure of the k-th root of q >= 0; a point when the root is rational."""
    q = to_rational(q)
    if q < 0:
        raise ValueError(f"Cannot take a real {k}-th root of {q}")
    num_root, den_root = iroot(q.numerator, k), iroot(q.denominator, k)
    if num_root ** k == q.numerator and den_root ** k == q.denominator:
        return Interval.point(Fraction(num_root, den_root))
    scale = 1 << (bits or settings.SQRT_BITS)
    t = q * scale ** k
    base = iroot(t.numerator // t.denominator, k)
    return Interval(Fraction(base, scale), Fraction(base + 1, scale))


def sqrt_enclosure(q: RationalLike, bits: Optional[int] = None) -> Interval:
    return root_enclosure(q, 2, bits)


def root_upper_bound(q: RationalLike, k: int) -> Fraction:
    return root_enclosure(q, k).hi
