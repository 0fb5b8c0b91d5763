"""
Lattice point counting in fibers and verification of the counting inequality

    | |S ∩ Λ| - Vol(S)/det(Λ) |  <=  c * sum_j V_j(S) / (λ_1 ... λ_j)

together with Davenport's bound for the normalized set Ψ(S), whose lattice
points are those of ℤⁿ.
"""
import logging
import math
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import combinations, product
from math import comb
from typing import Optional, Sequence

import numpy as np

from ..config import get_settings
from ..utils.error_handling import (
    OlatError,
    TheoremViolationError,
    log_stage,
    log_stage_result,
    retry_with_refinement,
    timed,
)
from .exactnum import Interval, RationalLike, interval_max, sqrt_enclosure, to_rational
from .lattice import (
    Lattice,
    MinimaProfile,
    NormalizingMap,
    apply_map,
    determinant,
    enumerate_ball,
    minkowski_second_check,
    reduced_basis,
    successive_minima,
)
from .measure import (
    CERTIFIED_GRID,
    ProjectionVolumes,
    VPrimeEstimate,
    VolumeEstimate,
    image_fiber,
    image_volume,
    projection_volumes,
    unit_ball_volume,
    volume,
    vprime_lower_estimate,
)
from .semialg import (
    BoundingBox,
    FiberSet,
    SemialgebraicFamily,
    atoms,
    axis_line_restriction,
    bounding_radius,
    contains,
    fiber,
    interval_decomposition,
    projection_membership,
    simplify,
)

logger = logging.getLogger(__name__)
settings = get_settings()

VERIFIED = "verified"
INDETERMINATE = "indeterminate"
VIOLATED = "violated"

ZERO_TERM_CONVENTION = "j = 0 term of c_C is M^k * K (2^0/B_0 * C(k,0) * (...)^0 taken as 1)"


def stage_seed(seed: int, stage: int) -> int:
    """Deterministic per-stage seed stretched from the run seed."""
    return int(np.random.SeedSequence([seed, stage]).generate_state(1)[0])


# ---------------------------------------------------------------------------
# Counting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LatticeCount:
    count: int
    points: tuple[tuple[Fraction, ...], ...]


def _radius(s: FiberSet, radius: Optional[Fraction]) -> Fraction:
    return radius if radius is not None else bounding_radius(s).radius


def enumerate_lattice_points(s: FiberSet, lattice: Lattice, radius: Optional[Fraction] = None) -> LatticeCount:
    """Exact |S ∩ Λ| by enumerating lattice vectors of the ball around [-R, R]^n."""
    if lattice.dim != s.n:
        raise OlatError(f"Lattice dimension {lattice.dim} does not match fiber arity {s.n}", exit_code=2)
    r = _radius(s, radius)
    candidates = enumerate_ball(lattice, s.n * r * r, include_zero=True)
    points = tuple(sorted(
        v for v in candidates
        if all(abs(x) <= r for x in v) and contains(s, v)
    ))
    return LatticeCount(len(points), points)


def count_normalized(s: FiberSet, nmap: NormalizingMap, radius: Optional[Fraction] = None) -> int:
    """|Ψ(S) ∩ ℤⁿ| by enumerating integer points of the image box and testing Ψ⁻¹-preimages.

    Preimages are restricted to [-R, R]^n, as in ``enumerate_lattice_points``.
    """
    r = _radius(s, radius)
    bounds = [sum((abs(a) for a in row), Fraction(0)) * r for row in nmap.matrix]
    ranges = [range(-math.floor(b), math.floor(b) + 1) for b in bounds]
    inverse = nmap.inverse
    count = 0
    for y in product(*ranges):
        x = apply_map(inverse, y)
        if all(abs(c) <= r for c in x) and contains(s, x):
            count += 1
    return count


# ---------------------------------------------------------------------------
# Davenport constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DavenportConstant:
    certified: int
    empirical: int
    evidence: dict = field(default_factory=dict)


def certified_h(s: FiberSet) -> int:
    """1 + sum of total degrees of the atoms.

    On any line the atoms have at most sum(d_i) roots together, so the solution
    set has at most that many plus one maximal intervals.
    """
    simplified = simplify(s.formula)
    return 1 + sum(a.poly.degree for a in atoms(simplified))


def _aligned_offsets(
    points: Sequence[tuple[Fraction, ...]], positions: Sequence[int], radius: Fraction, cap: int,
) -> list[tuple[Fraction, ...]]:
    """Offsets of lines through lattice points: the lattice points projected onto ``positions``.

    Only offsets inside [-R, R]^k are kept, thinned evenly to at most ``cap``.
    """
    offsets = sorted({
        tuple(p[i] for i in positions) for p in points
        if all(abs(p[i]) <= radius for i in positions)
    })
    if len(offsets) > cap:
        step = len(offsets) / cap
        offsets = [offsets[int(i * step)] for i in range(cap)]
    return offsets


def _random_offsets(rng: np.random.Generator, count: int, count_axes: int, radius: Fraction) -> list[tuple[Fraction, ...]]:
    scale = 1 << 20
    raw = rng.integers(-scale, scale + 1, size=(count, count_axes))
    return [tuple(Fraction(int(u), scale) * radius for u in row) for row in raw]


def _projection_runs(statuses: Sequence[str]) -> int:
    """Runs of non-outside samples that contain at least one inside sample."""
    runs = 0
    in_run = has_inside = False
    for status in list(statuses) + ["outside"]:
        if status == "outside":
            if in_run and has_inside:
                runs += 1
            in_run = has_inside = False
        else:
            in_run = True
            has_inside = has_inside or status == "inside"
    return runs


def empirical_h(
    s: FiberSet,
    lines: Optional[int] = None,
    seed: Optional[int] = None,
    radius: Optional[Fraction] = None,
    projection_lines: int = 8,
    lattice: Optional[Lattice] = None,
) -> DavenportConstant:
    """Largest number of maximal intervals seen on sampled axis-parallel lines of S and of its projections.

    Aligned lines pass through points of ``lattice`` (ℤⁿ by default); random lines add seeded offsets.
    """
    lines = lines if lines is not None else settings.DEFAULT_LINES
    seed = seed if seed is not None else settings.DEFAULT_SEED
    r = _radius(s, radius)
    rng = np.random.default_rng(seed)
    n = s.n
    best = 0
    evidence: dict = {"kind": "none"}
    lattice = lattice if lattice is not None else Lattice.identity(n)
    if lattice.dim != n:
        raise OlatError(f"Lattice dimension {lattice.dim} does not match fiber arity {n}", exit_code=2)
    points = enumerate_ball(lattice, n * r * r, include_zero=True)

    for axis in range(n):
        positions = [i for i in range(n) if i != axis]
        offsets = _aligned_offsets(points, positions, r, settings.ALIGNED_LINES_CAP)
        offsets += _random_offsets(rng, lines, n - 1, r)
        for offset in offsets:
            count = len(interval_decomposition(axis_line_restriction(s, axis, offset)))
            if count > best:
                best = count
                evidence = {"kind": "line", "axis": axis, "offsets": [str(o) for o in offset], "intervals": count}

    slice_samples = settings.PROJECTION_SLICE_SAMPLES
    ts = [-r + 2 * r * Fraction(2 * k + 1, 2 * slice_samples) for k in range(slice_samples)]
    for size in range(1, n):
        for coords in combinations(range(n), size):
            for axis_pos, axis in enumerate(coords):
                others = size - 1
                if others:
                    positions = [c for c in coords if c != axis]
                    offsets = _aligned_offsets(points, positions, r, projection_lines)
                    offsets += _random_offsets(rng, projection_lines, others, r)
                else:
                    offsets = [()]
                for offset in offsets:
                    statuses = []
                    for t in ts:
                        y = list(offset)
                        y.insert(axis_pos, t)
                        statuses.append(projection_membership(s, coords, y, radius=r).status)
                    count = _projection_runs(statuses)
                    if count > best:
                        best = count
                        evidence = {
                            "kind": "projection",
                            "coords": list(coords),
                            "axis": axis,
                            "offsets": [str(o) for o in offset],
                            "intervals": count,
                        }

    h_cert = certified_h(s)
    return DavenportConstant(certified=h_cert, empirical=max(best, 1), evidence=evidence)


def davenport_rhs(h: int, vs: Sequence[ProjectionVolumes]) -> Interval:
    """sum_{j=0}^{n-1} h^(n-j) V_j, with n = len(vs)."""
    n = len(vs)
    total = Interval.point(0)
    for v in vs:
        total = total + Interval.point(h ** (n - v.j)) * v.total.interval
    return total


# ---------------------------------------------------------------------------
# The assembled constant
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssembledConstant:
    F: int
    M: int
    E: int
    K: Fraction
    c_C: Interval
    c_P: Interval
    c: Interval
    convention: str = ZERO_TERM_CONVENTION


def assemble_constant(F: int, M: int, E: int) -> AssembledConstant:
    if F < 1 or M < 1 or E < 1:
        raise OlatError(f"assemble_constant needs F, M, E >= 1, got {F}, {M}, {E}", exit_code=2)
    K = Fraction(max(comb(k, j) * E for k in range(1, F + 1) for j in range(1, k + 1)))

    terms = []
    for k in range(1, F + 1):
        b_k = unit_ball_volume(k).enclosure()
        inner_base = Interval.point(math.factorial(k) * 2 ** k) / b_k
        terms.append(Interval.point(M ** k * K))
        for j in range(1, k + 1):
            b_j = unit_ball_volume(j).enclosure()
            j_three_halves = Interval.point(j) * sqrt_enclosure(j)
            term = (
                Interval.point(M ** (k - j) * K * comb(k, j) * 2 ** j) / b_j
                * (j_three_halves * inner_base) ** j
            )
            terms.append(term)
    c_c = interval_max(terms)
    c_p = c_c
    return AssembledConstant(F=F, M=M, E=E, K=K, c_C=c_c, c_P=c_p, c=c_c + c_p)


def _lambda_products(sq_minima: Sequence[Fraction]) -> list[Interval]:
    """Enclosures of λ_1 ... λ_j for j = 0..n."""
    products = [Interval.point(1)]
    for q in sq_minima:
        products.append(products[-1] * sqrt_enclosure(q))
    return products


def bw_rhs(c: Interval, sq_minima: Sequence[Fraction], vs: Sequence[ProjectionVolumes]) -> Interval:
    """c * sum_{j=0}^{n-1} V_j / (λ_1 ... λ_j)."""
    products = _lambda_products(sq_minima)
    total = Interval.point(0)
    for v in vs:
        total = total + v.total.interval / products[v.j]
    return c * total


def count_discrepancy(count: int, normalized_volume: Interval) -> Interval:
    """Enclosure of |count - Vol/det|."""
    return abs(Interval.point(count) - normalized_volume)


def compare(lhs: Interval, rhs: Interval) -> str:
    if lhs.hi <= rhs.lo:
        return VERIFIED
    if lhs.lo > rhs.hi:
        return VIOLATED
    return INDETERMINATE


# ---------------------------------------------------------------------------
# End-to-end verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerifyPlan:
    method: str = CERTIFIED_GRID
    depth: int = 8
    samples: int = 100_000
    seed: int = 0
    lines: int = 64
    retry: int = 1
    format_bound: int = 0
    projection_lines: int = 8

    @classmethod
    def from_settings(cls) -> "VerifyPlan":
        return cls(
            depth=settings.DEFAULT_DEPTH,
            samples=settings.DEFAULT_SAMPLES,
            seed=settings.DEFAULT_SEED,
            lines=settings.DEFAULT_LINES,
            retry=settings.RETRY_ATTEMPTS,
            format_bound=settings.FORMAT_BOUND,
        )


@dataclass(frozen=True)
class Measurements:
    """Everything that depends on the subdivision depth."""
    depth: int
    volume: VolumeEstimate
    image_volume: VolumeEstimate
    normalized_volume: Interval
    V: tuple[ProjectionVolumes, ...]
    V_image: tuple[ProjectionVolumes, ...]
    lhs: Interval
    davenport_rhs: Interval
    bw_rhs: Interval
    endomorphism_bounds: tuple[tuple[int, Interval, Interval, str], ...]
    verdicts: dict


@dataclass(frozen=True)
class VerificationReport:
    n: int
    params: tuple[Fraction, ...]
    bounding_box: BoundingBox
    count: int
    count_normalized: int
    det: Fraction
    minima: MinimaProfile
    normalizing_map: NormalizingMap
    minkowski: str
    h: DavenportConstant
    constant: AssembledConstant
    measurements: Measurements
    plan: VerifyPlan
    seeds: dict
    retries: int
    certified: bool
    vprime: tuple[VPrimeEstimate, ...] = ()
    notes: tuple[str, ...] = ()

    @property
    def verdicts(self) -> dict:
        return self.measurements.verdicts

    def dump(self) -> dict:
        """Flat diagnostic view used when a run has to abort."""
        m = self.measurements
        return {
            "count": self.count,
            "count_normalized": self.count_normalized,
            "det": str(self.det),
            "sq_minima": [str(q) for q in self.minima.sq_minima],
            "volume": [str(m.volume.lower), str(m.volume.upper)],
            "image_volume": [str(m.image_volume.lower), str(m.image_volume.upper)],
            "lhs": [str(m.lhs.lo), str(m.lhs.hi)],
            "davenport_rhs": [str(m.davenport_rhs.lo), str(m.davenport_rhs.hi)],
            "bw_rhs": [str(m.bw_rhs.lo), str(m.bw_rhs.hi)],
            "h": [self.h.certified, self.h.empirical],
            "depth": m.depth,
            "seeds": self.seeds,
        }


def _endomorphism_bounds(vs, vs_image, sq_minima) -> tuple:
    """V_j(Ψ(S)) against sum_{|I|=j} 2^j/B_j Vol_j(S^I) / (λ_1 ... λ_j), for j >= 1."""
    products = _lambda_products(sq_minima)
    rows = []
    for v, w in zip(vs, vs_image):
        if v.j == 0:
            continue
        bound = Interval.point(2 ** v.j) / unit_ball_volume(v.j).enclosure() * v.total.interval / products[v.j]
        rows.append((v.j, w.total.interval, bound, compare(w.total.interval, bound)))
    return tuple(rows)


def measure_and_compare(
    s: FiberSet,
    nmap: NormalizingMap,
    radius: Fraction,
    det: Fraction,
    count: int,
    h: int,
    constant: AssembledConstant,
    minima: MinimaProfile,
    plan: VerifyPlan,
    seeds: dict,
    depth: int,
) -> Measurements:
    n = s.n
    common = dict(method=plan.method, depth=depth, samples=plan.samples)
    image, image_bound = image_fiber(s, nmap, radius)
    vol = volume(s, seed=seeds["volume"], radius=radius, **common)
    img = image_volume(s, nmap, seed=seeds["image_volume"], radius=radius, **common)

    normalized = vol.interval / Interval.point(det)
    overlap = normalized.intersect(img.interval)
    if overlap is None:
        message = "Enclosures of Vol(S)/det and Vol(Psi(S)) are disjoint"
        if plan.method == CERTIFIED_GRID:
            raise TheoremViolationError(message, dump={
                "volume": [str(vol.lower), str(vol.upper)],
                "image_volume": [str(img.lower), str(img.upper)],
                "det": str(det),
            })
        logger.warning(message)
        overlap = normalized.hull(img.interval)

    vs = tuple(
        projection_volumes(s, j, seed=seeds["projections"], radius=radius, **common) for j in range(n)
    )
    vs_image = tuple(
        projection_volumes(image, j, seed=seeds["image_projections"], radius=image_bound, **common) for j in range(n)
    )
    lhs = count_discrepancy(count, overlap)
    d_rhs = davenport_rhs(h, vs_image)
    b_rhs = bw_rhs(constant.c, minima.sq_minima, vs)
    verdicts = {"davenport": compare(lhs, d_rhs), "bw": compare(lhs, b_rhs)}
    return Measurements(
        depth=depth,
        volume=vol,
        image_volume=img,
        normalized_volume=overlap,
        V=vs,
        V_image=vs_image,
        lhs=lhs,
        davenport_rhs=d_rhs,
        bw_rhs=b_rhs,
        endomorphism_bounds=_endomorphism_bounds(vs, vs_image, minima.sq_minima),
        verdicts=verdicts,
    )


@timed("verify")
def verify(
    family: SemialgebraicFamily,
    params: Sequence[RationalLike],
    lattice: Lattice,
    plan: Optional[VerifyPlan] = None,
    declared_radius: Optional[RationalLike] = None,
) -> VerificationReport:
    plan = plan or VerifyPlan.from_settings()
    log_stage("verify", {"m": family.m, "n": family.n, "params": [str(p) for p in params], "plan": plan})
    start_time = time.time()

    s = fiber(family, params, declared_radius)
    if lattice.dim != s.n:
        raise OlatError(f"Lattice dimension {lattice.dim} does not match fiber arity {s.n}", exit_code=2)
    bbox = bounding_radius(s)
    radius = bbox.radius
    seeds = {
        name: stage_seed(plan.seed, k)
        for k, name in enumerate(["volume", "image_volume", "projections", "image_projections", "empirical_h", "vprime"])
    }

    minima = successive_minima(lattice)
    nmap = reduced_basis(lattice, minima)
    det = determinant(lattice)

    count = enumerate_lattice_points(s, lattice, radius).count
    normalized_count = count_normalized(s, nmap, radius)
    if count != normalized_count:
        raise TheoremViolationError(
            f"Lattice count {count} differs from the normalized count {normalized_count}",
            dump={"count": count, "count_normalized": normalized_count, "det": str(det)},
        )

    h = empirical_h(
        s,
        lines=plan.lines,
        seed=seeds["empirical_h"],
        radius=radius,
        projection_lines=plan.projection_lines,
        lattice=lattice,
    )
    format_bound = plan.format_bound or family.m + family.n
    constant = assemble_constant(format_bound, h.certified, h.certified)
    vprime = tuple(
        vprime_lower_estimate(s, j, seed=seeds["vprime"], samples=settings.VPRIME_SAMPLES, radius=radius)
        for j in range(1, s.n)
    )

    box_certified = bbox.certification == "certified"
    attempts = {"count": 0}

    def run(depth: int) -> Measurements:
        attempts["count"] += 1
        return measure_and_compare(
            s, nmap, radius, det, count, h.certified, constant, minima, plan, seeds, depth=depth,
        )

    # Refinement cannot repair a box that was never certified.
    measurements = retry_with_refinement(
        run,
        depth=plan.depth,
        max_retries=plan.retry if box_certified else 0,
        max_depth=max(plan.depth, settings.MAX_REFINE_DEPTH),
        should_retry=lambda m: INDETERMINATE in m.verdicts.values(),
    )

    certified = plan.method == CERTIFIED_GRID
    report = VerificationReport(
        n=s.n,
        params=tuple(to_rational(p) for p in params),
        bounding_box=bbox,
        count=count,
        count_normalized=normalized_count,
        det=det,
        minima=minima,
        normalizing_map=nmap,
        minkowski=minkowski_second_check(lattice, minima),
        h=h,
        constant=constant,
        measurements=measurements,
        plan=plan,
        seeds=seeds,
        retries=attempts["count"] - 1,
        certified=certified,
        vprime=vprime,
    )

    verdicts = measurements.verdicts
    if not box_certified:
        note = (
            f"bounding radius {radius} ({bbox.source}) is {bbox.certification}: counts and volumes only "
            f"cover [-R, R]^n, so no verdict is certified"
        )
        logger.warning(f"Bounding radius {radius} is {bbox.certification}; every verdict is indeterminate")
        report = _with_verdicts(report, {k: INDETERMINATE for k in verdicts}, note)
    elif VIOLATED in verdicts.values():
        if certified:
            raise TheoremViolationError(
                f"Certified left-hand side exceeds a certified right-hand side: {verdicts}",
                dump=report.dump(),
            )
        logger.warning(f"Monte Carlo bounds suggest a violation {verdicts}; not certified, reporting indeterminate")
        report = _with_verdicts(
            report,
            {k: INDETERMINATE if v == VIOLATED else v for k, v in verdicts.items()},
            "Monte Carlo bounds suggest a violation; sampled estimates cannot certify it",
        )

    if INDETERMINATE in report.verdicts.values():
        logger.warning(f"Verdicts indeterminate after {report.retries} retries: {report.verdicts}")

    duration_ms = (time.time() - start_time) * 1000
    log_stage_result("verify", {"count": count, "verdicts": report.verdicts}, duration_ms)
    return report


def _with_verdicts(report: VerificationReport, verdicts: dict, note: str) -> VerificationReport:
    return replace(
        report,
        measurements=replace(report.measurements, verdicts=verdicts),
        notes=report.notes + (note,),
    )
