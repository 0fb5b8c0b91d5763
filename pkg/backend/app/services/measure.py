"""
Volumes of fibers and of their coordinate projections.

Certified-grid estimates are unconditional enclosures built from interval
classification of an adaptive box subdivision. Monte Carlo estimates sample
rational points and test membership exactly; their bounds are mean -/+ 4 stderr
and carry no certificate.
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Optional, Sequence

import numpy as np

from ..config import get_settings
from ..utils.error_handling import ArityMismatchError, log_stage_result
from .exactnum import Interval, pi_enclosure, to_rational
from .lattice import NormalizingMap
from .semialg import (
    And,
    Atom,
    Box,
    Const,
    FiberSet,
    Formula,
    Not,
    Or,
    Relation,
    atoms,
    bounding_radius,
    contains,
    evaluate_box,
    map_atoms,
    projection_box_status,
    projection_membership,
    radius_box,
    subdivide,
)

logger = logging.getLogger(__name__)
settings = get_settings()

CERTIFIED_GRID = "certified-grid"
MONTE_CARLO = "monte-carlo"
METHODS = (CERTIFIED_GRID, MONTE_CARLO)

# grid resolution for Monte Carlo coordinates
_MC_BITS = 32


@dataclass(frozen=True)
class VolumeEstimate:
    lower: Fraction
    upper: Fraction
    method: str
    mc_mean: Optional[float] = None
    mc_stderr: Optional[float] = None
    samples: Optional[int] = None
    seed: Optional[int] = None
    depth: Optional[int] = None

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"Volume lower bound {self.lower} exceeds upper bound {self.upper}")

    @classmethod
    def exact(cls, value, method: str = CERTIFIED_GRID) -> "VolumeEstimate":
        value = to_rational(value)
        return cls(value, value, method)

    @property
    def interval(self) -> Interval:
        return Interval(self.lower, self.upper)

    @property
    def certified(self) -> bool:
        return self.method == CERTIFIED_GRID

    def scaled(self, factor: Fraction) -> "VolumeEstimate":
        return VolumeEstimate(self.lower * factor, self.upper * factor, self.method, depth=self.depth,
                              samples=self.samples, seed=self.seed)

    def intersect(self, other: "VolumeEstimate") -> "VolumeEstimate":
        """Both enclose the same quantity, so their intersection does too."""
        lower, upper = max(self.lower, other.lower), min(self.upper, other.upper)
        if lower > upper:
            raise ValueError(f"Enclosures [{self.lower}, {self.upper}] and [{other.lower}, {other.upper}] are disjoint")
        return VolumeEstimate(lower, upper, self.method, depth=self.depth)


@dataclass(frozen=True)
class ProjectionVolumes:
    j: int
    per_subset: dict[tuple[int, ...], VolumeEstimate] = field(default_factory=dict)
    total: Optional[VolumeEstimate] = None

    @classmethod
    def from_subsets(cls, j: int, per_subset: dict[tuple[int, ...], VolumeEstimate], method: str) -> "ProjectionVolumes":
        total = VolumeEstimate(
            sum((v.lower for v in per_subset.values()), Fraction(0)),
            sum((v.upper for v in per_subset.values()), Fraction(0)),
            method,
        )
        return cls(j, per_subset, total)


@dataclass(frozen=True)
class BallVolume:
    """coeff * pi^pi_power."""
    j: int
    coeff: Fraction
    pi_power: int

    def enclosure(self) -> Interval:
        return Interval.point(self.coeff) * pi_enclosure() ** self.pi_power

    def describe(self) -> str:
        if self.pi_power == 0:
            return str(self.coeff)
        return f"{self.coeff}*pi^{self.pi_power}"


def unit_ball_volume(j: int) -> BallVolume:
    """B_0 = 1, B_1 = 2 and B_j = B_{j-2} * 2 pi / j."""
    if j < 0:
        raise ArityMismatchError(f"Unit ball dimension must be nonnegative, got {j}")
    if j == 0:
        return BallVolume(0, Fraction(1), 0)
    if j == 1:
        return BallVolume(1, Fraction(2), 0)
    prev = unit_ball_volume(j - 2)
    return BallVolume(j, prev.coeff * Fraction(2, j), prev.pi_power + 1)


def _box_volume(box: Sequence[Interval]) -> Fraction:
    return math.prod((iv.width for iv in box), start=Fraction(1))


def _grid_enclosure(formula: Formula, root: Box, depth: int) -> tuple[Fraction, Fraction]:
    inside = boundary = Fraction(0)
    stack = [(root, 0)]
    while stack:
        box, level = stack.pop()
        value = evaluate_box(formula, box)
        if value is True:
            inside += _box_volume(box)
        elif value is None:
            if level < depth:
                stack.extend((child, level + 1) for child in subdivide(box))
            else:
                boundary += _box_volume(box)
    return inside, inside + boundary


def _mc_points(rng: np.random.Generator, samples: int, dim: int, radius: Fraction) -> list[tuple[Fraction, ...]]:
    """Uniform points on a fine rational grid of [-R, R]^dim."""
    scale = 1 << _MC_BITS
    raw = rng.integers(0, scale, size=(samples, dim), dtype=np.int64)
    step = 2 * radius / scale
    return [tuple(-radius + step * (int(u) + Fraction(1, 2)) for u in row) for row in raw]


def _mc_estimate(hits: int, samples: int, box_volume: Fraction, seed: int, extra: int = 0) -> VolumeEstimate:
    """Bounds mean -/+ 4 stderr; ``extra`` undecided samples widen the upper bound."""
    p = Fraction(hits, samples)
    mean = p * box_volume
    stderr = box_volume * Fraction(math.sqrt(float(p * (1 - p)) / samples))
    upper_p = Fraction(hits + extra, samples)
    upper_stderr = box_volume * Fraction(math.sqrt(float(upper_p * (1 - upper_p)) / samples))
    return VolumeEstimate(
        lower=max(Fraction(0), mean - 4 * stderr),
        upper=upper_p * box_volume + 4 * upper_stderr,
        method=MONTE_CARLO,
        mc_mean=float(mean),
        mc_stderr=float(stderr),
        samples=samples,
        seed=seed,
    )


def volume(
    s: FiberSet,
    method: str = CERTIFIED_GRID,
    depth: Optional[int] = None,
    samples: Optional[int] = None,
    seed: Optional[int] = None,
    radius: Optional[Fraction] = None,
) -> VolumeEstimate:
    radius = radius if radius is not None else bounding_radius(s).radius
    if method == CERTIFIED_GRID:
        depth = depth if depth is not None else settings.DEFAULT_DEPTH
        lower, upper = _grid_enclosure(s.formula, radius_box(s.n, radius), depth)
        return VolumeEstimate(lower, upper, CERTIFIED_GRID, depth=depth)
    if method == MONTE_CARLO:
        samples = samples or settings.DEFAULT_SAMPLES
        seed = seed if seed is not None else settings.DEFAULT_SEED
        rng = np.random.default_rng(seed)
        hits = sum(1 for x in _mc_points(rng, samples, s.n, radius) if contains(s, x))
        return _mc_estimate(hits, samples, (2 * radius) ** s.n, seed)
    raise ValueError(f"Unknown volume method: {method}")


def _projection_grid(s: FiberSet, coords: tuple[int, ...], radius: Fraction, depth: int) -> tuple[Fraction, Fraction]:
    inside = boundary = Fraction(0)
    stack = [(radius_box(len(coords), radius), 0)]
    while stack:
        cell, level = stack.pop()
        status = projection_box_status(s, coords, cell, radius=radius)
        if status == "inside":
            inside += _box_volume(cell)
        elif status == "boundary":
            if level < depth:
                stack.extend((child, level + 1) for child in subdivide(cell))
            else:
                boundary += _box_volume(cell)
    return inside, inside + boundary


def projection_volumes(
    s: FiberSet,
    j: int,
    method: str = CERTIFIED_GRID,
    depth: Optional[int] = None,
    samples: Optional[int] = None,
    seed: Optional[int] = None,
    radius: Optional[Fraction] = None,
) -> ProjectionVolumes:
    """V_j: the summed j-volumes of the projections onto all j-element coordinate subsets."""
    if not 0 <= j <= s.n - 1:
        raise ArityMismatchError(f"Projection dimension must lie in [0, {s.n - 1}], got {j}")
    if j == 0:
        return ProjectionVolumes.from_subsets(0, {(): VolumeEstimate.exact(1, method)}, method)
    radius = radius if radius is not None else bounding_radius(s).radius
    depth = depth if depth is not None else settings.DEFAULT_DEPTH
    samples = samples or settings.DEFAULT_SAMPLES
    seed = seed if seed is not None else settings.DEFAULT_SEED

    per_subset: dict[tuple[int, ...], VolumeEstimate] = {}
    for coords in combinations(range(s.n), j):
        if method == CERTIFIED_GRID:
            lower, upper = _projection_grid(s, coords, radius, depth)
            per_subset[coords] = VolumeEstimate(lower, upper, CERTIFIED_GRID, depth=depth)
        elif method == MONTE_CARLO:
            rng = np.random.default_rng([seed, *coords])
            hits = unknown = 0
            for y in _mc_points(rng, samples, j, radius):
                status = projection_membership(s, coords, y, radius=radius).status
                hits += status == "inside"
                unknown += status == "unknown"
            per_subset[coords] = _mc_estimate(hits, samples, (2 * radius) ** j, seed, extra=unknown)
        else:
            raise ValueError(f"Unknown volume method: {method}")
    result = ProjectionVolumes.from_subsets(j, per_subset, method)
    log_stage_result("projection_volumes", {"j": j, "lower": str(result.total.lower), "upper": str(result.total.upper)})
    return result


# ---------------------------------------------------------------------------
# Images under the normalizing map
# ---------------------------------------------------------------------------

def image_radius(nmap: NormalizingMap, radius: Fraction) -> Fraction:
    """R' with Psi([-R, R]^n) inside [-R', R']^n."""
    return max(sum((abs(a) for a in row), Fraction(0)) for row in nmap.matrix) * radius


def image_fiber(s: FiberSet, nmap: NormalizingMap, radius: Optional[Fraction] = None) -> tuple[FiberSet, Fraction]:
    """Psi(S) as a fiber, by pulling every atom back through Psi^-1, with a bounding radius."""
    if len(nmap.matrix) != s.n:
        raise ArityMismatchError(f"Normalizing map of dimension {len(nmap.matrix)} applied to a fiber of arity {s.n}")
    radius = radius if radius is not None else bounding_radius(s).radius
    inverse = nmap.inverse
    pulled = map_atoms(s.formula, lambda a: Atom(a.poly.linear_substitution(inverse), a.relation))
    bound = image_radius(nmap, radius)
    return FiberSet(s.n, pulled, declared_radius=bound), bound


def image_volume(
    s: FiberSet,
    nmap: NormalizingMap,
    method: str = CERTIFIED_GRID,
    depth: Optional[int] = None,
    samples: Optional[int] = None,
    seed: Optional[int] = None,
    radius: Optional[Fraction] = None,
) -> VolumeEstimate:
    image, bound = image_fiber(s, nmap, radius)
    return volume(image, method=method, depth=depth, samples=samples, seed=seed, radius=bound)


# ---------------------------------------------------------------------------
# V'_j estimate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VPrimeEstimate:
    j: int
    value: float
    trials: int
    seed: int
    label: str = "lower-estimate"


def _float_member(formula: Formula, pts: np.ndarray) -> np.ndarray:
    values = {}
    for a in atoms(formula):
        acc = np.zeros(len(pts))
        for exps, c in a.poly.terms:
            term = np.full(len(pts), float(c))
            for i, e in enumerate(exps):
                if e:
                    term = term * pts[:, i] ** e
            acc = acc + term
        values[a] = acc

    def atom_mask(a: Atom) -> np.ndarray:
        v = values[a]
        return {
            Relation.LE: v <= 0,
            Relation.LT: v < 0,
            Relation.GE: v >= 0,
            Relation.GT: v > 0,
            Relation.EQ: v == 0,
            Relation.NE: v != 0,
        }[a.relation]

    def walk(f: Formula) -> np.ndarray:
        if isinstance(f, Atom):
            return atom_mask(f)
        if isinstance(f, And):
            return np.logical_and.reduce([walk(x) for x in f.args])
        if isinstance(f, Or):
            return np.logical_or.reduce([walk(x) for x in f.args])
        if isinstance(f, Not):
            return ~walk(f.arg)
        return np.full(len(pts), bool(f.value))

    return walk(formula)


def _covered_length(values: np.ndarray, gap: float) -> float:
    """Total length of the runs of sorted values whose consecutive spacing stays below ``gap``."""
    if len(values) == 0:
        return 0.0
    ordered = np.sort(values)
    steps = np.diff(ordered)
    return float(np.sum(steps[steps <= gap]))


def _occupancy_volume(projected: np.ndarray, extent: float, bins: int) -> float:
    if len(projected) == 0:
        return 0.0
    width = 2 * extent / bins
    cells = np.floor((projected + extent) / width).astype(np.int64)
    cells = np.clip(cells, 0, bins - 1)
    occupied = len({tuple(row) for row in cells})
    return occupied * width ** projected.shape[1]


def vprime_lower_estimate(
    s: FiberSet,
    j: int,
    trials: int = 32,
    seed: Optional[int] = None,
    samples: Optional[int] = None,
    radius: Optional[Fraction] = None,
) -> VPrimeEstimate:
    """Largest sampled projection volume over coordinate frames and random orthonormal j-frames.

    Member points come from a regular grid through the origin, so that
    lower-dimensional pieces on grid lines are hit, plus uniform samples.
    A floating-point estimate of V'_j from below, used for diagnostics only.
    """
    if not 1 <= j <= s.n - 1:
        raise ArityMismatchError(f"V'_j needs 1 <= j <= {s.n - 1}, got {j}")
    seed = seed if seed is not None else settings.DEFAULT_SEED
    samples = samples or settings.DEFAULT_SAMPLES
    radius = float(radius if radius is not None else bounding_radius(s).radius)
    rng = np.random.default_rng(seed)

    half = max(1, int(round(samples ** (1 / s.n))) // 2)
    axis = radius * (np.arange(-half, half + 1) / half)
    grid = np.array(list(product(axis, repeat=s.n)))
    random_pts = rng.uniform(-radius, radius, size=(samples, s.n))
    pts = np.vstack([grid, random_pts])
    members = pts[_float_member(s.formula, pts)]

    spacing = radius / half
    extent = radius * math.sqrt(s.n)
    bins = max(8, int(2 * extent / spacing))
    frames = [np.eye(s.n)[:, list(c)] for c in combinations(range(s.n), j)]
    for _ in range(trials):
        q, _ = np.linalg.qr(rng.standard_normal((s.n, j)))
        frames.append(q)

    if j == 1:
        best = max(_covered_length((members @ frame)[:, 0], 2 * spacing) for frame in frames)
    else:
        best = max(_occupancy_volume(members @ frame, extent, bins) for frame in frames)
    logger.debug(f"V'_{j} estimate {best:.6g} from {len(members)} member points and {len(frames)} frames")
    return VPrimeEstimate(j=j, value=float(best), trials=trials, seed=seed)
