"""
Format/degree calculus.

Set expressions are small DAGs over zero sets, positivity sets and declared
leaves, combined by union, intersection, complement, products with a line,
projection along the last coordinate and coordinate permutations. ``track``
propagates (format, degree) pairs bottom-up under one of four flavors of the
axioms and records which rule fired at every node.

The module also replays the constructions that show complements, interiors,
closures and boundaries of definable families stay in the filtration, the
Pfaffian format/degree bookkeeping, and the restriction pipeline for
existential formulas over the real exponential field.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence, Union

from ..utils.error_handling import (
    ArityMismatchError,
    ConfigParseError,
    MalformedExpressionError,
    MissingPolynomialFamilyError,
    NonExistentialFormulaError,
    log_stage,
    log_stage_result,
)
from .exactnum import Polynomial, RationalLike, to_rational

logger = logging.getLogger(__name__)


class Flavor(str, Enum):
    SHARP = "sharp"
    WEAKLY_SHARP = "weakly-sharp"
    PRESHARP = "presharp"
    EFFECTIVE = "effective"


@dataclass(frozen=True, order=True)
class FDPair:
    format: int
    degree: int

    def __post_init__(self):
        if self.format < 0 or self.degree < 0:
            raise ConfigParseError(f"format and degree must be nonnegative, got ({self.format}, {self.degree})")

    def floor(self, ambient: int) -> "FDPair":
        return FDPair(max(self.format, ambient), self.degree)

    def dominates(self, other: "FDPair") -> bool:
        return self.format >= other.format and self.degree >= other.degree

    def as_list(self) -> list[int]:
        return [self.format, self.degree]

    def __str__(self) -> str:
        return f"({self.format}, {self.degree})"


# -- set expressions ----------------------------------------------------------

class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class ZeroSet:
    poly: Polynomial
    ambient: int


@dataclass(frozen=True)
class PositivitySet:
    """{poly > 0}, tracked through the zero set of -poly - z² with a fresh z."""
    poly: Polynomial
    ambient: int


@dataclass(frozen=True)
class Leaf:
    fd: FDPair
    ambient: int
    label: str = ""


@dataclass(frozen=True)
class Union_:
    children: tuple["SetExpr", ...]


@dataclass(frozen=True)
class Intersection:
    children: tuple["SetExpr", ...]


@dataclass(frozen=True)
class Complement:
    child: "SetExpr"


@dataclass(frozen=True)
class ProductWithLine:
    child: "SetExpr"
    side: Side = Side.RIGHT


@dataclass(frozen=True)
class Projection:
    """Drops the last coordinate."""
    child: "SetExpr"


@dataclass(frozen=True)
class Permute:
    """Coordinate i of the result is coordinate ``permutation[i]`` of the child."""
    child: "SetExpr"
    permutation: tuple[int, ...]


SetExpr = Union[ZeroSet, PositivitySet, Leaf, Union_, Intersection, Complement, ProductWithLine, Projection, Permute]

NODE_KINDS = {
    ZeroSet: "zero_set",
    PositivitySet: "positivity_set",
    Leaf: "leaf",
    Union_: "union",
    Intersection: "intersection",
    Complement: "complement",
    ProductWithLine: "product_with_line",
    Projection: "projection",
    Permute: "permute",
}


def node_kind(e: SetExpr) -> str:
    try:
        return NODE_KINDS[type(e)]
    except KeyError:
        raise MalformedExpressionError(f"Unknown set expression node {type(e).__name__}") from None


def children_of(e: SetExpr) -> tuple[SetExpr, ...]:
    if isinstance(e, (Union_, Intersection)):
        return e.children
    if isinstance(e, (Complement, ProductWithLine, Projection, Permute)):
        return (e.child,)
    return ()


def positivity_expansion(e: PositivitySet) -> SetExpr:
    """{P > 0} = complement of the projection of {-P - z² = 0}."""
    z = Polynomial.variable(e.ambient + 1, e.ambient)
    return Complement(Projection(ZeroSet(-e.poly.extend(1) - z * z, e.ambient + 1)))


def ambient_of(e: SetExpr, _cache: Optional[dict] = None) -> int:
    """Ambient dimension of an expression, validating arity rules on the way down."""
    cache = {} if _cache is None else _cache
    if e in cache:
        return cache[e]
    if isinstance(e, (ZeroSet, PositivitySet)):
        if e.ambient < 1:
            raise MalformedExpressionError(f"{node_kind(e)} needs ambient dimension >= 1, got {e.ambient}")
        if e.poly.arity != e.ambient:
            raise ArityMismatchError(
                f"{node_kind(e)} polynomial has arity {e.poly.arity}, ambient dimension is {e.ambient}"
            )
        if e.poly.is_zero and isinstance(e, ZeroSet):
            logger.debug("zero set of the zero polynomial is the whole space")
        result = e.ambient
    elif isinstance(e, Leaf):
        if e.ambient < 0:
            raise MalformedExpressionError(f"leaf ambient dimension must be nonnegative, got {e.ambient}")
        result = e.ambient
    elif isinstance(e, (Union_, Intersection)):
        if len(e.children) < 2:
            raise MalformedExpressionError(f"{node_kind(e)} needs at least two children, got {len(e.children)}")
        dims = {ambient_of(c, cache) for c in e.children}
        if len(dims) != 1:
            raise MalformedExpressionError(f"{node_kind(e)} children live in different ambients {sorted(dims)}")
        result = dims.pop()
    elif isinstance(e, Complement):
        result = ambient_of(e.child, cache)
    elif isinstance(e, ProductWithLine):
        result = ambient_of(e.child, cache) + 1
    elif isinstance(e, Projection):
        inner = ambient_of(e.child, cache)
        if inner < 1:
            raise MalformedExpressionError("cannot project a subset of R^0")
        result = inner - 1
    elif isinstance(e, Permute):
        inner = ambient_of(e.child, cache)
        if sorted(e.permutation) != list(range(inner)):
            raise MalformedExpressionError(f"{list(e.permutation)} is not a permutation of 0..{inner - 1}")
        result = inner
    else:
        raise MalformedExpressionError(f"Unknown set expression node {type(e).__name__}")
    cache[e] = result
    return result


# -- tracking -------------------------------------------------------------------

@dataclass(frozen=True)
class DerivationStep:
    index: int
    kind: str
    rule: str
    ambient: int
    fd: FDPair
    children: tuple[int, ...] = ()


@dataclass
class TrackResult:
    fd: FDPair
    flavor: Flavor
    trace: list[DerivationStep] = field(default_factory=list)
    components: Optional[int] = None


def _fold(pairs: Sequence[FDPair], bump: int) -> FDPair:
    acc = pairs[0]
    for p in pairs[1:]:
        acc = FDPair(max(acc.format, p.format) + bump, acc.degree + p.degree)
    return acc


def _combine(e: SetExpr, kids: Sequence[FDPair], flavor: Flavor) -> tuple[FDPair, str]:
    effective = flavor is Flavor.EFFECTIVE

    if isinstance(e, (Union_, Intersection)):
        if effective:
            return _fold(kids, 1), "E2"
        union = isinstance(e, Union_)
        if flavor is Flavor.PRESHARP:
            return _fold(kids, 1), "P5" if union else "P6"
        top = FDPair(max(k.format for k in kids), sum(k.degree for k in kids))
        if union:
            return top, "S5"
        if flavor is Flavor.WEAKLY_SHARP:
            return FDPair(top.format + 1, top.degree), "W6"
        return top, "S6"

    (kid,) = kids
    if isinstance(e, Permute):
        return kid, "PERM"
    if effective:
        return FDPair(kid.format + 1, kid.degree), "E2"
    if isinstance(e, ProductWithLine):
        return FDPair(kid.format + 1, kid.degree), "S3"
    # complement or projection
    if flavor is Flavor.SHARP:
        return kid, "S4"
    return FDPair(kid.format + 1, kid.degree), "W4"


class _Tracker:
    def __init__(self, flavor: Flavor):
        self.flavor = flavor
        self.memo: dict[SetExpr, tuple[int, FDPair]] = {}
        self.ambients: dict[SetExpr, int] = {}
        self.trace: list[DerivationStep] = []

    def _record(self, e: SetExpr, rule: str, fd: FDPair, ambient: int, children: tuple[int, ...]) -> tuple[int, FDPair]:
        step = DerivationStep(len(self.trace), node_kind(e), rule, ambient, fd, children)
        self.trace.append(step)
        self.memo[e] = (step.index, fd)
        return step.index, fd

    def visit(self, e: SetExpr) -> tuple[int, FDPair]:
        if e in self.memo:
            return self.memo[e]
        ambient = ambient_of(e, self.ambients)
        effective = self.flavor is Flavor.EFFECTIVE

        if isinstance(e, ZeroSet):
            fd = FDPair(ambient, 0 if effective else e.poly.degree)
            return self._record(e, "S7", fd, ambient, ())
        if isinstance(e, Leaf):
            fd = FDPair(e.fd.format, 0 if effective else e.fd.degree).floor(ambient)
            return self._record(e, "LEAF", fd, ambient, ())
        if isinstance(e, PositivitySet):
            idx, fd = self.visit(positivity_expansion(e))
            return self._record(e, "POS", fd.floor(ambient), ambient, (idx,))

        visited = [self.visit(c) for c in children_of(e)]
        fd, rule = _combine(e, [fd for _, fd in visited], self.flavor)
        return self._record(e, rule, fd.floor(ambient), ambient, tuple(i for i, _ in visited))


def track_with_trace(e: SetExpr, flavor: Flavor = Flavor.SHARP, family: Optional["PolynomialFamily"] = None) -> TrackResult:
    """Track (F, D) through ``e`` and keep the per-node derivation trace."""
    flavor = Flavor(flavor)
    tracker = _Tracker(flavor)
    _, fd = tracker.visit(e)
    components = components_bound(fd, family) if family is not None else None
    logger.debug(f"tracked {node_kind(e)} under {flavor.value}: {fd} in {len(tracker.trace)} nodes")
    return TrackResult(fd=fd, flavor=flavor, trace=tracker.trace, components=components)


def track(e: SetExpr, flavor: Flavor = Flavor.SHARP, family: Optional["PolynomialFamily"] = None) -> FDPair:
    return track_with_trace(e, flavor, family).fd


# -- polynomial families ----------------------------------------------------------

FORMAT_EXPONENT = "F"


@dataclass(frozen=True)
class FamilyTerm:
    """coeff · F^format_exp · D^degree_exp; degree_exp may be the literal format F."""
    coeff: Fraction
    format_exp: int = 0
    degree_exp: Union[int, str] = 0

    def __post_init__(self):
        object.__setattr__(self, "coeff", to_rational(self.coeff))
        if self.coeff < 0:
            raise ConfigParseError(f"polynomial family coefficients must be nonnegative, got {self.coeff}")
        if self.format_exp < 0:
            raise ConfigParseError(f"negative format exponent {self.format_exp}")
        if self.degree_exp != FORMAT_EXPONENT and (not isinstance(self.degree_exp, int) or self.degree_exp < 0):
            raise ConfigParseError(f"degree exponent must be a nonnegative integer or 'F', got {self.degree_exp!r}")

    def evaluate(self, F: int, D: int) -> Fraction:
        d_exp = F if self.degree_exp == FORMAT_EXPONENT else self.degree_exp
        return self.coeff * Fraction(F) ** self.format_exp * Fraction(D) ** d_exp


@dataclass(frozen=True)
class PolynomialFamily:
    """P_F(D) = Σ c · F^a · D^b, one polynomial in D for every format F."""
    terms: tuple[FamilyTerm, ...]
    name: str = ""

    def __post_init__(self):
        if not self.terms:
            raise ConfigParseError("polynomial family needs at least one term")

    @classmethod
    def identity(cls) -> "PolynomialFamily":
        return cls((FamilyTerm(Fraction(1), 0, 1),), name="D")

    @classmethod
    def of(cls, *terms: tuple[RationalLike, int, Union[int, str]], name: str = "") -> "PolynomialFamily":
        return cls(tuple(FamilyTerm(to_rational(c), a, b) for c, a, b in terms), name=name)

    def __call__(self, F: int, D: int) -> Fraction:
        return sum((t.evaluate(F, D) for t in self.terms), Fraction(0))

    def describe(self) -> str:
        if self.name:
            return self.name
        parts = []
        for t in self.terms:
            factors = [str(t.coeff)] if t.coeff != 1 else []
            if t.format_exp:
                factors.append("F" if t.format_exp == 1 else f"F^{t.format_exp}")
            if t.degree_exp:
                factors.append("D" if t.degree_exp == 1 else f"D^{t.degree_exp}")
            parts.append("*".join(factors) or "1")
        return " + ".join(parts)


def components_bound(fd: FDPair, family: Optional[PolynomialFamily]) -> int:
    """Bound on the number of connected components, ⌊P_F(D)⌋."""
    if family is None:
        raise MissingPolynomialFamilyError("components_bound needs the structure's polynomial family P_F")
    return math.floor(family(fd.format, fd.degree))


def star_conversion(pf: FDPair, conv: Optional[PolynomialFamily]) -> FDPair:
    """Pfaffian (F, D) to ★-format/★-degree (F, ⌈conv_F(D)⌉)."""
    if conv is None:
        raise MissingPolynomialFamilyError("star_conversion needs a conversion family conv_F")
    return FDPair(pf.format, math.ceil(conv(pf.format, pf.degree)))


# -- closure-family replays ---------------------------------------------------------

CLOSURE_KINDS = ("complement", "interior", "closure", "boundary")


def complement_family(z: SetExpr, m: int, n: int) -> SetExpr:
    """{(T, x) : x ∉ Z_T} as (π_x(Z) × ℝⁿ) ∩ Zᶜ."""
    base = z
    for _ in range(n):
        base = Projection(base)
    for _ in range(n):
        base = ProductWithLine(base, Side.RIGHT)
    return Intersection((base, Complement(z)))


def interior_family(z: SetExpr, m: int, n: int) -> SetExpr:
    """{(T, x) : x ∈ int(Z_T)} through the ε-ball construction.

    Coordinates of the auxiliary space are (T, x, ε, y). The pairs with ε > 0 and
    a point y ∉ Z_T in the closed ε-ball around x are projected along y; the
    remaining ε > 0 are exactly the radii whose ball stays inside Z_T.
    """
    total = m + 2 * n + 1
    eps_at = m + n
    eps = Polynomial.variable(total, eps_at)
    dist = Polynomial.zero(total)
    for i in range(n):
        d = Polynomial.variable(total, m + i) - Polynomial.variable(total, m + n + 1 + i)
        dist = dist + d * d
    ball = Intersection((PositivitySet(eps, total), Complement(PositivitySet(dist - eps * eps, total))))

    outside = complement_family(z, m, n)
    for _ in range(n + 1):
        outside = ProductWithLine(outside, Side.RIGHT)
    # (T, y, x, ε) -> (T, x, ε, y)
    perm = tuple(range(m)) + tuple(m + n + i for i in range(n)) + (m + 2 * n,) + tuple(m + i for i in range(n))
    outside = Permute(outside, perm)

    escapes = Intersection((ball, outside))
    for _ in range(n):
        escapes = Projection(escapes)
    good_radius = Intersection((Complement(escapes), PositivitySet(Polynomial.variable(m + n + 1, eps_at), m + n + 1)))
    return Projection(good_radius)


def closure_family(z: SetExpr, m: int, n: int) -> SetExpr:
    return complement_family(interior_family(complement_family(z, m, n), m, n), m, n)


def boundary_family(z: SetExpr, m: int, n: int) -> SetExpr:
    return Intersection((closure_family(z, m, n), complement_family(interior_family(z, m, n), m, n)))


_CLOSURE_BUILDERS = {
    "complement": complement_family,
    "interior": interior_family,
    "closure": closure_family,
    "boundary": boundary_family,
}


def closure_family_expr(z: SetExpr, which: str, m: int, n: int) -> SetExpr:
    if which not in _CLOSURE_BUILDERS:
        raise ConfigParseError(f"unknown closure construction {which!r}; expected one of {', '.join(CLOSURE_KINDS)}")
    if m < 0 or n < 1:
        raise ConfigParseError(f"closure constructions need m >= 0 and n >= 1, got m={m}, n={n}")
    if ambient_of(z) != m + n:
        raise MalformedExpressionError(f"family lives in R^{ambient_of(z)}, expected R^{m + n}")
    return _CLOSURE_BUILDERS[which](z, m, n)


def closure_family_fd(z_fd: FDPair, which: str, flavor: Flavor = Flavor.SHARP, m: int = 0, n: int = 1) -> FDPair:
    """Tracked (F, D) of the complement/interior/closure/boundary family of a family Z ⊆ ℝ^{m+n} with pair ``z_fd``."""
    return closure_family_trace(z_fd, which, flavor, m, n).fd


def closure_family_trace(z_fd: FDPair, which: str, flavor: Flavor = Flavor.SHARP, m: int = 0, n: int = 1) -> TrackResult:
    expr = closure_family_expr(Leaf(z_fd, m + n, label="Z"), which, m, n)
    result = track_with_trace(expr, flavor)
    logger.debug(f"{which} family of {z_fd} (m={m}, n={n}) under {Flavor(flavor).value}: {result.fd}")
    return result


# -- Pfaffian bookkeeping -----------------------------------------------------------

@dataclass(frozen=True)
class PfaffianSpec:
    """A Pfaffian function f = P(x, f_1, ..., f_k) on a domain in ℝⁿ.

    ``chain_degrees`` lists deg P_{i,j} for ∂f_i/∂x_j = P_{i,j}(x, f_1, ..., f_i),
    row by row (n·k entries). Triangularity of the chain is declared, not checked.
    """
    n: int
    k: int
    chain_degrees: tuple[int, ...]
    poly_degree: int
    name: str = ""
    stated_format: Optional[int] = None
    stated_degree: Optional[int] = None

    def __post_init__(self):
        if self.n < 0 or self.k < 0 or self.poly_degree < 0:
            raise ConfigParseError(f"Pfaffian spec needs nonnegative n, k and degree, got n={self.n}, k={self.k}")
        if any(d < 0 for d in self.chain_degrees):
            raise ConfigParseError(f"negative chain degree in {list(self.chain_degrees)}")
        if len(self.chain_degrees) != self.n * self.k:
            raise ConfigParseError(
                f"chain of length {self.k} in {self.n} variables needs {self.n * self.k} degrees, "
                f"got {len(self.chain_degrees)}"
            )

    @classmethod
    def polynomial(cls, n: int, degree: int) -> "PfaffianSpec":
        return cls(n=n, k=0, chain_degrees=(), poly_degree=degree, name="polynomial")

    @classmethod
    def exp_on_interval(cls) -> "PfaffianSpec":
        # chain f_1 = exp with f_1' = Y_1, and f = Y_1; published as format 1, degree 2
        return cls(n=1, k=1, chain_degrees=(1,), poly_degree=1, name="exp", stated_format=1, stated_degree=2)


def pfaffian_fd(spec: PfaffianSpec) -> FDPair:
    """(n + k, Σ deg P_{i,j} + deg P)."""
    return FDPair(spec.n + spec.k, sum(spec.chain_degrees) + spec.poly_degree)


@dataclass(frozen=True)
class PfaffianCheck:
    fd: FDPair
    stated_format: Optional[int]
    stated_degree: Optional[int]
    discrepancies: tuple[str, ...]

    @property
    def flagged(self) -> bool:
        return bool(self.discrepancies)


def check_pfaffian(spec: PfaffianSpec) -> PfaffianCheck:
    """Compute the pair by definition and compare it with any published values, flagging mismatches."""
    fd = pfaffian_fd(spec)
    notes = []
    if spec.stated_format is not None and spec.stated_format != fd.format:
        notes.append(f"format: n + k = {fd.format}, stated {spec.stated_format}")
    if spec.stated_degree is not None and spec.stated_degree != fd.degree:
        notes.append(f"degree: computed {fd.degree}, stated {spec.stated_degree}")
    for note in notes:
        logger.warning(f"Pfaffian {spec.name or 'function'} {note}")
    return PfaffianCheck(fd, spec.stated_format, spec.stated_degree, tuple(notes))


def semi_pfaffian_fd(functions: Sequence[FDPair]) -> FDPair:
    """Semi-Pfaffian set: maximum of the function formats, sum of their degrees."""
    if not functions:
        raise MalformedExpressionError("a semi-Pfaffian set needs at least one defining function")
    return FDPair(max(f.format for f in functions), sum(f.degree for f in functions))


def sub_pfaffian_fd(semi: FDPair, projected: int = 1) -> FDPair:
    """A projection of a semi-Pfaffian set keeps its Pfaffian format and degree."""
    if projected < 0:
        raise ConfigParseError(f"number of projected coordinates must be nonnegative, got {projected}")
    return semi


# -- exp restriction pipeline -------------------------------------------------------------

@dataclass(frozen=True)
class ExistentialDescriptor:
    """∃y φ(x, y) with φ quantifier-free in polynomials and exp.

    Every atom is counted as a polynomial of degree ``atom_degrees[a]`` in the
    variables and the exp occurrences.
    """
    free_vars: int
    quantified_vars: int
    exp_occurrences: int
    atom_degrees: tuple[int, ...]
    existential: bool = True
    name: str = ""

    def __post_init__(self):
        if self.free_vars < 0 or self.quantified_vars < 0 or self.exp_occurrences < 0:
            raise ConfigParseError("variable and exp-occurrence counts must be nonnegative")
        if not self.atom_degrees:
            raise ConfigParseError("existential descriptor needs at least one atom")
        if any(d < 0 for d in self.atom_degrees):
            raise ConfigParseError(f"negative atom degree in {list(self.atom_degrees)}")

    @property
    def variables(self) -> int:
        return self.free_vars + self.quantified_vars


def atom_pfaffian_specs(phi: ExistentialDescriptor) -> list[PfaffianSpec]:
    """One Pfaffian spec per atom over the shared chain of restricted exp occurrences.

    Each occurrence extends the chain by one function whose derivative along its
    argument is the function itself, contributing degree 1; the other partial
    derivatives vanish.
    """
    N, k = phi.variables, phi.exp_occurrences
    if k and not N:
        raise ConfigParseError("exp occurrences need at least one variable to act on")
    row = (1,) + (0,) * (N - 1) if N else ()
    chain = row * k
    return [
        PfaffianSpec(n=N, k=k, chain_degrees=tuple(chain), poly_degree=d, name=f"atom{a}")
        for a, d in enumerate(phi.atom_degrees)
    ]


def rexp_restrict_pipeline(phi: ExistentialDescriptor, M: int, conv: Optional[PolynomialFamily] = None) -> FDPair:
    """Pfaffian (F, D) of Y_M = ψ(ℝ) ∩ [-M, M]^N, followed by ★-conversion when ``conv`` is given.

    Each restriction of exp to a compact interval is a Pfaffian function of the
    same format and degree, so the result does not depend on M.
    """
    if not phi.existential:
        raise NonExistentialFormulaError()
    if M < 1:
        raise ConfigParseError(f"restriction bound M must be a positive integer, got {M}")
    log_stage("rexp_restrict", {"name": phi.name, "M": M, "atoms": len(phi.atom_degrees)})
    semi = semi_pfaffian_fd([pfaffian_fd(s) for s in atom_pfaffian_specs(phi)])
    fd = sub_pfaffian_fd(semi, phi.quantified_vars)
    if conv is not None:
        fd = star_conversion(fd, conv)
    log_stage_result("rexp_restrict", {"fd": fd.as_list()})
    return fd


def rexp_projection_expr(phi: ExistentialDescriptor, fd: FDPair) -> SetExpr:
    """Y as a declared leaf in ℝ^N followed by one projection per quantified variable."""
    expr: SetExpr = Leaf(fd, phi.variables, label=phi.name or "Y")
    for _ in range(phi.quantified_vars):
        expr = Projection(expr)
    return expr


@dataclass
class RexpReport:
    pfaffian: FDPair
    star: Optional[FDPair]
    projected: TrackResult
    M: int


def run_rexp_pipeline(
    phi: ExistentialDescriptor,
    M: int,
    conv: Optional[PolynomialFamily] = None,
    flavor: Flavor = Flavor.WEAKLY_SHARP,
) -> RexpReport:
    """Restriction, optional ★-conversion, then the quantifier projections tracked under ``flavor``."""
    pfaffian = rexp_restrict_pipeline(phi, M)
    star = star_conversion(pfaffian, conv) if conv is not None else None
    projected = track_with_trace(rexp_projection_expr(phi, star or pfaffian), flavor)
    return RexpReport(pfaffian=pfaffian, star=star, projected=projected, M=M)
