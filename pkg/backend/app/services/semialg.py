"""
Semialgebraic families and their fibers.

A family is a boolean formula over polynomial sign conditions in the variables
(T_1..T_m, x_1..x_n). Fibers substitute a rational parameter vector T. On a
fiber we provide exact membership, axis-parallel line restrictions with their
exact interval decompositions, a certified bounding box, and sound-but-
incomplete projection membership by interval refutation and witness search.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import Callable, Iterator, Optional, Sequence, Union

from ..config import get_settings
from ..utils.error_handling import ArityMismatchError, FormulaValidator, UnboundedFiberError
from .exactnum import (
    AlgebraicNumber,
    Interval,
    Polynomial,
    RationalLike,
    interval_eval,
    isolate_real_roots,
    poly_eval,
    root_upper_bound,
    sign,
    to_rational,
)

logger = logging.getLogger(__name__)
settings = get_settings()

Box = tuple[Interval, ...]


class Relation(str, Enum):
    LE = "le"
    LT = "lt"
    GE = "ge"
    GT = "gt"
    EQ = "eq"
    NE = "ne"

    def holds(self, s: int) -> bool:
        return {
            Relation.LE: s <= 0,
            Relation.LT: s < 0,
            Relation.GE: s >= 0,
            Relation.GT: s > 0,
            Relation.EQ: s == 0,
            Relation.NE: s != 0,
        }[self]

    def holds_on(self, iv: Interval) -> Optional[bool]:
        """True/False when the relation is decided on every value in ``iv``, else None."""
        lo, hi = iv.lo, iv.hi
        if self is Relation.LE:
            return True if hi <= 0 else False if lo > 0 else None
        if self is Relation.LT:
            return True if hi < 0 else False if lo >= 0 else None
        if self is Relation.GE:
            return True if lo >= 0 else False if hi < 0 else None
        if self is Relation.GT:
            return True if lo > 0 else False if hi <= 0 else None
        if self is Relation.EQ:
            return True if lo == hi == 0 else False if lo > 0 or hi < 0 else None
        return True if lo > 0 or hi < 0 else False if lo == hi == 0 else None


# ---------------------------------------------------------------------------
# Formula AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    poly: Polynomial
    relation: Relation


@dataclass(frozen=True)
class And:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class Const:
    value: bool


Formula = Union[Atom, And, Or, Not, Const]


def atoms(f: Formula) -> list[Atom]:
    if isinstance(f, Atom):
        return [f]
    if isinstance(f, (And, Or)):
        return [a for arg in f.args for a in atoms(arg)]
    if isinstance(f, Not):
        return atoms(f.arg)
    return []


def map_atoms(f: Formula, fn: Callable[[Atom], Formula]) -> Formula:
    if isinstance(f, Atom):
        return fn(f)
    if isinstance(f, And):
        return And(tuple(map_atoms(a, fn) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(map_atoms(a, fn) for a in f.args))
    if isinstance(f, Not):
        return Not(map_atoms(f.arg, fn))
    return f


def evaluate_with(f: Formula, atom_value: Callable[[Atom], bool]) -> bool:
    if isinstance(f, Atom):
        return atom_value(f)
    if isinstance(f, And):
        return all(evaluate_with(a, atom_value) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate_with(a, atom_value) for a in f.args)
    if isinstance(f, Not):
        return not evaluate_with(f.arg, atom_value)
    return f.value


def evaluate(f: Formula, point: Sequence[RationalLike]) -> bool:
    return evaluate_with(f, lambda a: a.relation.holds(sign(poly_eval(a.poly, point))))


def evaluate_box(f: Formula, box: Sequence[Interval]) -> Optional[bool]:
    """Three-valued evaluation: True (every point satisfies f), False (none does) or None."""
    if isinstance(f, Atom):
        return f.relation.holds_on(interval_eval(f.poly, box))
    if isinstance(f, And):
        values = [evaluate_box(a, box) for a in f.args]
        if any(v is False for v in values):
            return False
        return True if all(v is True for v in values) else None
    if isinstance(f, Or):
        values = [evaluate_box(a, box) for a in f.args]
        if any(v is True for v in values):
            return True
        return False if all(v is False for v in values) else None
    if isinstance(f, Not):
        v = evaluate_box(f.arg, box)
        return None if v is None else not v
    return f.value


def simplify(f: Formula) -> Formula:
    """Fold constant atoms (zero or constant polynomials) and constant connectives."""
    if isinstance(f, Atom):
        if f.poly.is_constant:
            return Const(f.relation.holds(sign(f.poly.constant_term)))
        return f
    if isinstance(f, Not):
        inner = simplify(f.arg)
        return Const(not inner.value) if isinstance(inner, Const) else Not(inner)
    if isinstance(f, (And, Or)):
        absorbing = isinstance(f, Or)
        args = []
        for arg in (simplify(a) for a in f.args):
            if isinstance(arg, Const):
                if arg.value is absorbing:
                    return Const(absorbing)
                continue
            args.append(arg)
        if not args:
            return Const(not absorbing)
        if len(args) == 1:
            return args[0]
        return type(f)(tuple(args))
    return f


def conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return [c for a in f.args for c in conjuncts(a)]
    return [f]


# ---------------------------------------------------------------------------
# Families and fibers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SemialgebraicFamily:
    m: int
    n: int
    formula: Formula

    def __post_init__(self):
        if self.m < 0 or self.n < 1:
            raise ArityMismatchError(f"Family needs m >= 0 and n >= 1, got m={self.m}, n={self.n}")
        is_valid, message = FormulaValidator.validate_arity([a.poly.arity for a in atoms(self.formula)], self.m + self.n)
        if not is_valid:
            raise ArityMismatchError(message)


@dataclass(frozen=True)
class FiberSet:
    n: int
    formula: Formula
    declared_radius: Optional[Fraction] = None

    def __post_init__(self):
        is_valid, message = FormulaValidator.validate_arity([a.poly.arity for a in atoms(self.formula)], self.n)
        if not is_valid:
            raise ArityMismatchError(message)
        if self.declared_radius is not None:
            r = to_rational(self.declared_radius)
            if r <= 0:
                raise ArityMismatchError(f"Declared radius must be positive, got {r}")
            object.__setattr__(self, "declared_radius", r)


def fiber(family: SemialgebraicFamily, params: Sequence[RationalLike], declared_radius: Optional[RationalLike] = None) -> FiberSet:
    if len(params) != family.m:
        raise ArityMismatchError(f"Expected {family.m} parameters, got {len(params)}")
    values = {i: to_rational(t) for i, t in enumerate(params)}
    formula = map_atoms(family.formula, lambda a: Atom(a.poly.specialize(values), a.relation))
    return FiberSet(
        n=family.n,
        formula=formula,
        declared_radius=to_rational(declared_radius) if declared_radius is not None else None,
    )


def contains(s: FiberSet, point: Sequence[RationalLike]) -> bool:
    if len(point) != s.n:
        raise ArityMismatchError(f"Point has {len(point)} coordinates, fiber arity is {s.n}")
    return evaluate(s.formula, [to_rational(x) for x in point])


def axis_line_restriction(s: FiberSet, axis: int, offsets: Sequence[RationalLike]) -> Formula:
    """Univariate formula on the line parallel to ``axis`` through ``offsets`` (other coordinates, in order)."""
    return map_atoms(s.formula, lambda a: Atom(a.poly.restrict_to_line(axis, offsets), a.relation))


# ---------------------------------------------------------------------------
# Interval decompositions on a line
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RealInterval:
    """Maximal interval of a univariate solution set. ``None`` endpoints are infinite."""
    lo: Optional[AlgebraicNumber]
    hi: Optional[AlgebraicNumber]
    lo_closed: bool
    hi_closed: bool

    @property
    def is_point(self) -> bool:
        return self.lo is not None and self.lo is self.hi

    def contains(self, x: RationalLike) -> bool:
        x = to_rational(x)
        if self.lo is not None:
            c = self.lo.compare(x)
            if c > 0 or (c == 0 and not self.lo_closed):
                return False
        if self.hi is not None:
            c = self.hi.compare(x)
            if c < 0 or (c == 0 and not self.hi_closed):
                return False
        return True

    def describe(self) -> str:
        left = "(-inf" if self.lo is None else ("[" if self.lo_closed else "(") + _endpoint_text(self.lo)
        right = "+inf)" if self.hi is None else _endpoint_text(self.hi) + ("]" if self.hi_closed else ")")
        return f"{left}, {right}"


def _endpoint_text(alpha: AlgebraicNumber) -> str:
    if alpha.is_rational:
        return str(alpha.lo)
    return f"root in ({alpha.lo}, {alpha.hi})"


def interval_decomposition(f: Formula) -> list[RealInterval]:
    """Exact maximal intervals of the solution set of a univariate formula."""
    f = simplify(f)
    if isinstance(f, Const):
        return [RealInterval(None, None, False, False)] if f.value else []
    polys = [a.poly for a in atoms(f)]
    if any(p.arity != 1 for p in polys):
        raise ArityMismatchError("Interval decomposition needs a univariate formula")
    combined = Polynomial.constant(1, 1)
    for p in polys:
        combined = combined * p
    roots = isolate_real_roots(combined)

    def truth_at_root(alpha: AlgebraicNumber) -> bool:
        return evaluate_with(f, lambda a: a.relation.holds(alpha.sign_of(a.poly)))

    def truth_at(x: Fraction) -> bool:
        return evaluate(f, [x])

    if not roots:
        return [RealInterval(None, None, False, False)] if truth_at(Fraction(0)) else []

    # pieces alternate gap, root, gap, ..., root, gap
    samples = [roots[0].lo - 1] + [r.hi for r in roots[:-1]] + [roots[-1].hi + 1]
    pieces: list[tuple[str, int, bool]] = []
    for i, sample in enumerate(samples):
        pieces.append(("gap", i, truth_at(sample)))
        if i < len(roots):
            pieces.append(("root", i, truth_at_root(roots[i])))

    result = []
    k = 0
    while k < len(pieces):
        if not pieces[k][2]:
            k += 1
            continue
        start = k
        while k + 1 < len(pieces) and pieces[k + 1][2]:
            k += 1
        kind_lo, i_lo, _ = pieces[start]
        kind_hi, i_hi, _ = pieces[k]
        if kind_lo == "root":
            lo, lo_closed = roots[i_lo], True
        else:
            lo, lo_closed = (roots[i_lo - 1], False) if i_lo > 0 else (None, False)
        if kind_hi == "root":
            hi, hi_closed = roots[i_hi], True
        else:
            hi, hi_closed = (roots[i_hi], False) if i_hi < len(roots) else (None, False)
        result.append(RealInterval(lo, hi, lo_closed, hi_closed))
        k += 1
    return result


# ---------------------------------------------------------------------------
# Bounding boxes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundingBox:
    radius: Fraction
    source: str          # "syntactic" or "declared"
    certification: str   # "certified" or "uncertified"


def _even_power_bounds(p: Polynomial) -> Optional[dict[int, Fraction]]:
    """For p = sum a_i x_i^(2k_i) + c with a_i > 0, the bounds |x_i| <= (-c/a_i)^(1/2k_i) of {p <= 0}."""
    c = p.constant_term
    per_var: dict[int, tuple[int, Fraction]] = {}
    for exps, coeff in p.terms:
        if not any(exps):
            continue
        nonzero = [(i, e) for i, e in enumerate(exps) if e]
        if len(nonzero) != 1 or coeff <= 0:
            return None
        i, e = nonzero[0]
        if e % 2 or i in per_var:
            return None
        per_var[i] = (e, coeff)
    if not per_var:
        return None
    if c > 0:
        # {p <= 0} is empty
        return {i: Fraction(0) for i in per_var}
    return {i: root_upper_bound(-c / a, e) for i, (e, a) in per_var.items()}


def _linear_bound(p: Polynomial) -> Optional[tuple[int, str, Fraction]]:
    """For p = a x_i + c, the one-sided bound of {p <= 0} on x_i."""
    linear = [(exps, coeff) for exps, coeff in p.terms if any(exps)]
    if len(linear) != 1 or sum(linear[0][0]) != 1:
        return None
    exps, a = linear[0]
    i = exps.index(1)
    value = -p.constant_term / a
    return (i, "upper", value) if a > 0 else (i, "lower", value)


def syntactic_radius(s: FiberSet) -> Optional[Fraction]:
    """Radius extracted from the top-level conjuncts, or None."""
    abs_bounds: dict[int, Fraction] = {}
    lower: dict[int, Fraction] = {}
    upper: dict[int, Fraction] = {}

    def absorb(p: Polynomial):
        bounds = _even_power_bounds(p)
        if bounds:
            for i, b in bounds.items():
                abs_bounds[i] = min(b, abs_bounds.get(i, b))
            return
        lin = _linear_bound(p)
        if lin:
            i, side, value = lin
            if side == "upper":
                upper[i] = min(value, upper.get(i, value))
            else:
                lower[i] = max(value, lower.get(i, value))

    for c in conjuncts(simplify(s.formula)):
        if not isinstance(c, Atom):
            continue
        if c.relation in (Relation.LE, Relation.LT, Relation.EQ):
            absorb(c.poly)
        if c.relation in (Relation.GE, Relation.GT, Relation.EQ):
            absorb(-c.poly)

    radius = Fraction(0)
    for i in range(s.n):
        candidates = []
        if i in abs_bounds:
            candidates.append(abs_bounds[i])
        if i in lower and i in upper:
            candidates.append(max(abs(lower[i]), abs(upper[i])))
        if not candidates:
            return None
        radius = max(radius, min(candidates))
    return radius if radius > 0 else Fraction(1)


def subdivide(box: Sequence[Interval]) -> list[Box]:
    """The 2^k children obtained by bisecting every coordinate."""
    return [tuple(parts) for parts in product(*(iv.bisect() for iv in box))]


def _refuted(formula: Formula, root: Box, depth: int) -> bool:
    """Interval refutation of ``formula`` on every point of ``root``."""
    stack: list[tuple[Box, int]] = [(root, 0)]
    while stack:
        box, level = stack.pop()
        value = evaluate_box(formula, box)
        if value is False:
            continue
        if value is True or level >= depth:
            return False
        stack.extend((child, level + 1) for child in subdivide(box))
    return True


def outside_refuted(s: FiberSet, radius: Fraction, depth: int) -> bool:
    """True when no point of the fiber has a coordinate of magnitude >= R.

    The outside of the box is covered by 2n charts: in chart (i, ±) the
    coordinate x_i dominates, and x_i = ±1/u, x_j = w_j/u maps it onto
    u in [0, 1/R], w in [-1, 1]^(n-1). Each atom becomes u^d p, which has the
    sign of p for u > 0, so refuting the closed chart box refutes the region.
    """
    for axis in range(s.n):
        root = tuple(
            Interval(0, 1 / radius) if j == axis else Interval.symmetric(1) for j in range(s.n)
        )
        for direction in (1, -1):
            chart = map_atoms(s.formula, lambda a: Atom(a.poly.chart_at_infinity(axis, direction), a.relation))
            if not _refuted(chart, root, depth):
                logger.debug(f"Outside refutation failed in chart x{axis} {'+' if direction > 0 else '-'}")
                return False
    return True


def bounding_radius(s: FiberSet, depth: Optional[int] = None) -> BoundingBox:
    depth = depth if depth is not None else settings.WITNESS_DEPTH
    syntactic = syntactic_radius(s)
    if s.declared_radius is None:
        if syntactic is None:
            raise UnboundedFiberError("No bounding radius could be extracted from the fiber and none was declared")
        return BoundingBox(syntactic, "syntactic", "certified")

    declared = s.declared_radius
    if syntactic is not None and syntactic <= declared:
        return BoundingBox(declared, "declared", "certified")
    if syntactic is not None:
        logger.warning(f"Declared radius {declared} is smaller than the extracted radius {syntactic}; using the latter")
        return BoundingBox(syntactic, "syntactic", "certified")
    if outside_refuted(s, declared, depth):
        return BoundingBox(declared, "declared", "certified")
    logger.warning(f"Declared radius {declared} could not be certified at depth {depth}")
    return BoundingBox(declared, "declared", "uncertified")


def radius_box(n: int, radius: Fraction) -> Box:
    return tuple(Interval.symmetric(radius) for _ in range(n))


# ---------------------------------------------------------------------------
# Projections
# ---------------------------------------------------------------------------

def _assemble(n: int, coords: Sequence[int], fixed: Sequence[Interval], free: Sequence[Interval]) -> Box:
    out: list[Optional[Interval]] = [None] * n
    for i, iv in zip(coords, fixed):
        out[i] = iv
    it = iter(free)
    return tuple(iv if iv is not None else next(it) for iv in out)


def _fiber_boxes(n: int, coords: Sequence[int], radius: Fraction) -> Box:
    return tuple(Interval.symmetric(radius) for _ in range(n - len(coords)))


@dataclass(frozen=True)
class ProjectionResult:
    status: str                      # "inside", "outside" or "unknown"
    witness: Optional[tuple[Fraction, ...]] = None


def _corners_and_center(box: Box) -> Iterator[tuple[Fraction, ...]]:
    yield tuple(iv.midpoint for iv in box)
    for corner in product(*((iv.lo, iv.hi) for iv in box)):
        yield corner


def projection_membership(
    s: FiberSet,
    coords: Sequence[int],
    y: Sequence[RationalLike],
    depth: Optional[int] = None,
    radius: Optional[Fraction] = None,
) -> ProjectionResult:
    """Is y in the projection of s onto the coordinates ``coords``?

    "inside" comes with a rational witness in the fiber over y, "outside" means
    interval arithmetic refuted every box of the fiber over y.
    """
    depth = depth if depth is not None else settings.WITNESS_DEPTH
    radius = radius if radius is not None else bounding_radius(s).radius
    if len(coords) != len(y):
        raise ArityMismatchError(f"{len(coords)} coordinates but {len(y)} values")
    fixed = [Interval.point(to_rational(v)) for v in y]
    if len(coords) == s.n:
        point = _assemble(s.n, coords, fixed, ())
        witness = tuple(iv.lo for iv in point)
        return ProjectionResult("inside", witness) if contains(s, witness) else ProjectionResult("outside")

    level_boxes = [_fiber_boxes(s.n, coords, radius)]
    seen: set[tuple[Fraction, ...]] = set()
    for level in range(depth + 1):
        survivors = []
        for box in level_boxes:
            full = _assemble(s.n, coords, fixed, box)
            value = evaluate_box(s.formula, full)
            if value is False:
                continue
            for candidate in _corners_and_center(full):
                if candidate not in seen:
                    seen.add(candidate)
                    if evaluate(s.formula, candidate):
                        return ProjectionResult("inside", candidate)
            survivors.append(box)
        if not survivors:
            return ProjectionResult("outside")
        if level < depth:
            level_boxes = [child for box in survivors for child in subdivide(box)]
    return ProjectionResult("unknown")


def projection_box_status(
    s: FiberSet,
    coords: Sequence[int],
    cell: Sequence[Interval],
    depth: Optional[int] = None,
    radius: Optional[Fraction] = None,
) -> str:
    """Classify a box of the coordinate subspace as "inside", "outside" or "boundary" of the projection.

    "inside" when some fiber box makes the formula true on cell x box, "outside"
    when every fiber box is refuted.
    """
    depth = depth if depth is not None else settings.PROJECTION_DEPTH
    radius = radius if radius is not None else bounding_radius(s).radius
    stack: list[tuple[Box, int]] = [(_fiber_boxes(s.n, coords, radius), 0)]
    unresolved = False
    while stack:
        box, level = stack.pop()
        value = evaluate_box(s.formula, _assemble(s.n, coords, cell, box))
        if value is True:
            return "inside"
        if value is False:
            continue
        if level >= depth:
            unresolved = True
            continue
        stack.extend((child, level + 1) for child in subdivide(box))
    return "boundary" if unresolved else "outside"
