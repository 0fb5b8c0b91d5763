import json
from pathlib import Path
from typing import Annotated, Any, Literal, Optional, Sequence, TypeVar, Union

from pydantic import BaseModel, BeforeValidator, Field, ValidationError

from .config import get_settings
from .services.davenport import VerificationReport, VerifyPlan
from .services.exactnum import Interval, Polynomial, format_rational, render_decimal, to_rational
from .services.fdcalc import (
    Complement,
    DerivationStep,
    ExistentialDescriptor,
    FamilyTerm,
    FDPair,
    Flavor,
    Intersection,
    Leaf,
    Permute,
    PfaffianCheck,
    PfaffianSpec,
    PolynomialFamily,
    PositivitySet,
    ProductWithLine,
    Projection,
    SetExpr,
    Side,
    TrackResult,
    Union_,
    ZeroSet,
    ambient_of,
    children_of,
    node_kind,
)
from .services.lattice import Lattice, MinimaProfile, NormalizingMap
from .services.measure import CERTIFIED_GRID, ProjectionVolumes, VolumeEstimate
from .services.semialg import And, Atom, BoundingBox, Const, Formula, Not, Or, Relation, SemialgebraicFamily
from .utils.error_handling import ConfigParseError, MalformedExpressionError, OlatError

ModelT = TypeVar("ModelT", bound=BaseModel)


def _rational_text(value: Any) -> str:
    if isinstance(value, float):
        raise ValueError("rationals must be integers or 'num/den' strings, not floats")
    try:
        return format_rational(to_rational(value))
    except OlatError as exc:
        raise ValueError(exc.message) from exc


RationalText = Annotated[str, BeforeValidator(_rational_text)]


def load_model(path: Union[str, Path], model: type[ModelT]) -> ModelT:
    """Read a JSON file into ``model``; every failure is a parse error."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParseError(f"Cannot read {path}: {exc}") from exc
    try:
        return model.model_validate_json(text)
    except ValidationError as exc:
        raise ConfigParseError(f"Invalid {model.__name__} in {path}: {exc}") from exc


def dump_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2)


# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------

class TermModel(BaseModel):
    exps: list[int]
    coeff: RationalText


class PolynomialModel(BaseModel):
    arity: int = Field(ge=0)
    terms: list[TermModel] = []

    def to_domain(self) -> Polynomial:
        return Polynomial(self.arity, tuple((tuple(t.exps), to_rational(t.coeff)) for t in self.terms))

    @classmethod
    def from_domain(cls, p: Polynomial) -> "PolynomialModel":
        return cls(arity=p.arity, terms=[TermModel(exps=list(e), coeff=format_rational(c)) for e, c in p.terms])


class FormulaModel(BaseModel):
    op: Literal["atom", "and", "or", "not", "const"]
    poly: Optional[PolynomialModel] = None
    relation: Optional[Relation] = None
    args: list["FormulaModel"] = []
    value: Optional[bool] = None

    def to_domain(self) -> Formula:
        if self.op == "atom":
            if self.poly is None or self.relation is None:
                raise ConfigParseError("atom needs 'poly' and 'relation'")
            return Atom(self.poly.to_domain(), self.relation)
        if self.op == "const":
            if self.value is None:
                raise ConfigParseError("const needs 'value'")
            return Const(self.value)
        if self.op == "not":
            if len(self.args) != 1:
                raise ConfigParseError(f"not takes exactly one argument, got {len(self.args)}")
            return Not(self.args[0].to_domain())
        if not self.args:
            raise ConfigParseError(f"{self.op} needs at least one argument")
        parts = tuple(a.to_domain() for a in self.args)
        return And(parts) if self.op == "and" else Or(parts)

    @classmethod
    def from_domain(cls, f: Formula) -> "FormulaModel":
        if isinstance(f, Atom):
            return cls(op="atom", poly=PolynomialModel.from_domain(f.poly), relation=f.relation)
        if isinstance(f, Const):
            return cls(op="const", value=f.value)
        if isinstance(f, Not):
            return cls(op="not", args=[cls.from_domain(f.arg)])
        op = "and" if isinstance(f, And) else "or"
        return cls(op=op, args=[cls.from_domain(a) for a in f.args])


FormulaModel.model_rebuild()


class FamilyFile(BaseModel):
    name: str = ""
    m: int = Field(ge=0)
    n: int = Field(ge=1)
    formula: FormulaModel
    declared_radius: Optional[RationalText] = None

    def to_domain(self) -> SemialgebraicFamily:
        return SemialgebraicFamily(m=self.m, n=self.n, formula=self.formula.to_domain())

    @classmethod
    def from_domain(cls, family: SemialgebraicFamily, name: str = "", declared_radius=None) -> "FamilyFile":
        return cls(
            name=name,
            m=family.m,
            n=family.n,
            formula=FormulaModel.from_domain(family.formula),
            declared_radius=declared_radius,
        )


class LatticeFile(BaseModel):
    name: str = ""
    basis: list[list[RationalText]]

    def to_domain(self) -> Lattice:
        return Lattice(tuple(tuple(to_rational(x) for x in row) for row in self.basis))

    @classmethod
    def from_domain(cls, lattice: Lattice, name: str = "") -> "LatticeFile":
        return cls(name=name, basis=[[format_rational(x) for x in row] for row in lattice.basis])


class FDPairModel(BaseModel):
    format: int = Field(ge=0)
    degree: int = Field(ge=0)

    def to_domain(self) -> FDPair:
        return FDPair(self.format, self.degree)

    @classmethod
    def from_domain(cls, fd: FDPair) -> "FDPairModel":
        return cls(format=fd.format, degree=fd.degree)


NodeKind = Literal[
    "zero_set", "positivity_set", "leaf", "union", "intersection",
    "complement", "product_with_line", "projection", "permute",
]


class ExprNode(BaseModel):
    kind: NodeKind
    children: list[int] = []
    poly: Optional[PolynomialModel] = None
    ambient: Optional[int] = None
    fd: Optional[FDPairModel] = None
    side: Side = Side.RIGHT
    permutation: Optional[list[int]] = None
    label: str = ""


class ExprFile(BaseModel):
    """Set expression as a node list; children refer to earlier nodes by index."""
    nodes: list[ExprNode]
    root: Optional[int] = None

    def to_domain(self) -> SetExpr:
        if not self.nodes:
            raise MalformedExpressionError("expression has no nodes")
        built: list[SetExpr] = []
        for i, node in enumerate(self.nodes):
            for c in node.children:
                if not 0 <= c < i:
                    raise MalformedExpressionError(f"node {i} refers to node {c}; children must come earlier")
            kids = [built[c] for c in node.children]
            built.append(self._build(i, node, kids))
        root = len(built) - 1 if self.root is None else self.root
        if not 0 <= root < len(built):
            raise MalformedExpressionError(f"root {root} is not a node index")
        expr = built[root]
        ambient_of(expr)
        return expr

    @staticmethod
    def _build(i: int, node: ExprNode, kids: list[SetExpr]) -> SetExpr:
        kind = node.kind
        if kind in ("zero_set", "positivity_set"):
            if node.poly is None:
                raise MalformedExpressionError(f"node {i}: {kind} needs 'poly'")
            poly = node.poly.to_domain()
            ambient = poly.arity if node.ambient is None else node.ambient
            return ZeroSet(poly, ambient) if kind == "zero_set" else PositivitySet(poly, ambient)
        if kind == "leaf":
            if node.fd is None or node.ambient is None:
                raise MalformedExpressionError(f"node {i}: leaf needs 'fd' and 'ambient'")
            return Leaf(node.fd.to_domain(), node.ambient, node.label)
        if kind in ("union", "intersection"):
            if len(kids) < 2:
                raise MalformedExpressionError(f"node {i}: {kind} needs at least two children")
            return Union_(tuple(kids)) if kind == "union" else Intersection(tuple(kids))
        if len(kids) != 1:
            raise MalformedExpressionError(f"node {i}: {kind} takes exactly one child, got {len(kids)}")
        (child,) = kids
        if kind == "complement":
            return Complement(child)
        if kind == "product_with_line":
            return ProductWithLine(child, node.side)
        if kind == "projection":
            return Projection(child)
        if node.permutation is None:
            raise MalformedExpressionError(f"node {i}: permute needs 'permutation'")
        return Permute(child, tuple(node.permutation))

    @classmethod
    def from_domain(cls, expr: SetExpr) -> "ExprFile":
        index: dict[SetExpr, int] = {}
        nodes: list[ExprNode] = []

        def visit(e: SetExpr) -> int:
            if e in index:
                return index[e]
            kids = [visit(c) for c in children_of(e)]
            node = ExprNode(kind=node_kind(e), children=kids)
            if isinstance(e, (ZeroSet, PositivitySet)):
                node.poly, node.ambient = PolynomialModel.from_domain(e.poly), e.ambient
            elif isinstance(e, Leaf):
                node.fd, node.ambient, node.label = FDPairModel.from_domain(e.fd), e.ambient, e.label
            elif isinstance(e, ProductWithLine):
                node.side = e.side
            elif isinstance(e, Permute):
                node.permutation = list(e.permutation)
            nodes.append(node)
            index[e] = len(nodes) - 1
            return index[e]

        return cls(nodes=nodes, root=visit(expr))


class FamilyTermModel(BaseModel):
    coeff: RationalText = "1/1"
    format_exp: int = Field(0, ge=0)
    degree_exp: Union[int, Literal["F"]] = 0


class PolynomialFamilyModel(BaseModel):
    name: str = ""
    terms: list[FamilyTermModel]

    def to_domain(self) -> PolynomialFamily:
        return PolynomialFamily(
            tuple(FamilyTerm(to_rational(t.coeff), t.format_exp, t.degree_exp) for t in self.terms),
            name=self.name,
        )


class PfaffianSpecModel(BaseModel):
    name: str = ""
    n: int = Field(ge=0)
    k: int = Field(ge=0)
    chain_degrees: list[int] = []
    poly_degree: int = Field(ge=0)
    stated_format: Optional[int] = None
    stated_degree: Optional[int] = None

    def to_domain(self) -> PfaffianSpec:
        return PfaffianSpec(
            n=self.n,
            k=self.k,
            chain_degrees=tuple(self.chain_degrees),
            poly_degree=self.poly_degree,
            name=self.name,
            stated_format=self.stated_format,
            stated_degree=self.stated_degree,
        )


class ExistentialModel(BaseModel):
    name: str = ""
    free_vars: int = Field(ge=0)
    quantified_vars: int = Field(ge=0)
    exp_occurrences: int = Field(ge=0)
    atom_degrees: list[int]
    existential: bool = True

    def to_domain(self) -> ExistentialDescriptor:
        return ExistentialDescriptor(
            free_vars=self.free_vars,
            quantified_vars=self.quantified_vars,
            exp_occurrences=self.exp_occurrences,
            atom_degrees=tuple(self.atom_degrees),
            existential=self.existential,
            name=self.name,
        )


class ClosureRequest(BaseModel):
    which: Literal["complement", "interior", "closure", "boundary"]
    fd: FDPairModel
    m: int = Field(0, ge=0)
    n: int = Field(1, ge=1)


class FdFile(BaseModel):
    """Input of the fd command; any combination of sections may be present."""
    expr: Optional[ExprFile] = None
    closure: list[ClosureRequest] = []
    pfaffian: list[PfaffianSpecModel] = []
    existential: list[ExistentialModel] = []
    M: list[int] = Field(default_factory=lambda: [1], min_length=1)


def _settings_default(name: str):
    return lambda: getattr(get_settings(), name)


class RunConfig(BaseModel):
    """Effective parameters of one command run, echoed into its report."""
    command: str = ""
    family: Optional[str] = None
    params: list[RationalText] = []
    lattice: Optional[str] = None
    expr: Optional[str] = None
    method: Literal["certified-grid", "monte-carlo"] = CERTIFIED_GRID
    depth: int = Field(default_factory=_settings_default("DEFAULT_DEPTH"), ge=1)
    samples: int = Field(default_factory=_settings_default("DEFAULT_SAMPLES"), ge=1)
    lines: int = Field(default_factory=_settings_default("DEFAULT_LINES"), ge=1)
    seed: int = Field(default_factory=_settings_default("DEFAULT_SEED"), ge=0, lt=2 ** 64)
    retry: int = Field(default_factory=_settings_default("RETRY_ATTEMPTS"), ge=0)
    format_bound: int = Field(default_factory=_settings_default("FORMAT_BOUND"), ge=0)
    projection_lines: int = Field(8, ge=1)
    flavor: Flavor = Flavor.SHARP
    declared_radius: Optional[RationalText] = None
    components_family: Optional[PolynomialFamilyModel] = None
    conv_family: Optional[PolynomialFamilyModel] = None

    def plan(self) -> VerifyPlan:
        return VerifyPlan(
            method=self.method,
            depth=self.depth,
            samples=self.samples,
            seed=self.seed,
            lines=self.lines,
            retry=self.retry,
            format_bound=self.format_bound,
            projection_lines=self.projection_lines,
        )


# ---------------------------------------------------------------------------
# Outputs
# ---------------------------------------------------------------------------

def _rationals(xs: Sequence) -> list[str]:
    return [format_rational(to_rational(x)) for x in xs]


class IntervalModel(BaseModel):
    lo: str
    hi: str
    lo_decimal: str
    hi_decimal: str

    @classmethod
    def from_domain(cls, iv: Interval) -> "IntervalModel":
        return cls(
            lo=format_rational(iv.lo),
            hi=format_rational(iv.hi),
            lo_decimal=render_decimal(iv.lo),
            hi_decimal=render_decimal(iv.hi),
        )


class VolumeModel(BaseModel):
    lower: str
    upper: str
    method: str
    depth: Optional[int] = None
    samples: Optional[int] = None
    seed: Optional[int] = None
    mc_mean: Optional[float] = None
    mc_stderr: Optional[float] = None

    @classmethod
    def from_domain(cls, v: VolumeEstimate) -> "VolumeModel":
        return cls(
            lower=format_rational(v.lower),
            upper=format_rational(v.upper),
            method=v.method,
            depth=v.depth,
            samples=v.samples,
            seed=v.seed,
            mc_mean=v.mc_mean,
            mc_stderr=v.mc_stderr,
        )


class ProjectionVolumesModel(BaseModel):
    j: int
    per_subset: dict[str, VolumeModel]
    total: VolumeModel

    @classmethod
    def from_domain(cls, pv: ProjectionVolumes) -> "ProjectionVolumesModel":
        return cls(
            j=pv.j,
            per_subset={",".join(map(str, k)): VolumeModel.from_domain(v) for k, v in sorted(pv.per_subset.items())},
            total=VolumeModel.from_domain(pv.total),
        )


class BoundingBoxModel(BaseModel):
    radius: str
    source: str
    certification: str

    @classmethod
    def from_domain(cls, bbox: BoundingBox) -> "BoundingBoxModel":
        return cls(radius=format_rational(bbox.radius), source=bbox.source, certification=bbox.certification)


class MinimaModel(BaseModel):
    sq_minima: list[str]
    achieving_vectors: list[list[str]]

    @classmethod
    def from_domain(cls, profile: MinimaProfile) -> "MinimaModel":
        return cls(
            sq_minima=_rationals(profile.sq_minima),
            achieving_vectors=[_rationals(v) for v in profile.achieving_vectors],
        )


class NormalizingMapModel(BaseModel):
    psi: list[list[str]]
    reduced_basis: list[list[str]]
    change_of_basis: list[list[str]]

    @classmethod
    def from_domain(cls, nmap: NormalizingMap) -> "NormalizingMapModel":
        return cls(
            psi=[_rationals(r) for r in nmap.matrix],
            reduced_basis=[_rationals(r) for r in nmap.reduced_basis],
            change_of_basis=[_rationals(r) for r in nmap.change_of_basis],
        )


class EndomorphismBoundModel(BaseModel):
    j: int
    image: IntervalModel
    bound: IntervalModel
    verdict: str


class VPrimeModel(BaseModel):
    j: int
    value: float
    trials: int
    seed: int
    label: str


class VerificationModel(BaseModel):
    n: int
    params: list[str]
    bounding_box: BoundingBoxModel
    count: int
    count_normalized: int
    det: str
    minima: MinimaModel
    normalizing_map: NormalizingMapModel
    minkowski: str
    h_certified: int
    h_empirical: int
    h_evidence: dict[str, Any]
    constant: dict[str, Any]
    depth: int
    volume: VolumeModel
    image_volume: VolumeModel
    normalized_volume: IntervalModel
    V: list[ProjectionVolumesModel]
    V_image: list[ProjectionVolumesModel]
    lhs: IntervalModel
    davenport_rhs: IntervalModel
    bw_rhs: IntervalModel
    endomorphism_bounds: list[EndomorphismBoundModel]
    verdicts: dict[str, str]
    seeds: dict[str, int]
    retries: int
    certified: bool
    vprime: list[VPrimeModel] = []
    notes: list[str] = []

    @classmethod
    def from_domain(cls, r: VerificationReport) -> "VerificationModel":
        m = r.measurements
        c = r.constant
        return cls(
            n=r.n,
            params=_rationals(r.params),
            bounding_box=BoundingBoxModel.from_domain(r.bounding_box),
            count=r.count,
            count_normalized=r.count_normalized,
            det=format_rational(r.det),
            minima=MinimaModel.from_domain(r.minima),
            normalizing_map=NormalizingMapModel.from_domain(r.normalizing_map),
            minkowski=r.minkowski,
            h_certified=r.h.certified,
            h_empirical=r.h.empirical,
            h_evidence=r.h.evidence,
            constant={
                "F": c.F,
                "M": c.M,
                "E": c.E,
                "K": format_rational(c.K),
                "c_C": IntervalModel.from_domain(c.c_C).model_dump(),
                "c_P": IntervalModel.from_domain(c.c_P).model_dump(),
                "c": IntervalModel.from_domain(c.c).model_dump(),
                "convention": c.convention,
            },
            depth=m.depth,
            volume=VolumeModel.from_domain(m.volume),
            image_volume=VolumeModel.from_domain(m.image_volume),
            normalized_volume=IntervalModel.from_domain(m.normalized_volume),
            V=[ProjectionVolumesModel.from_domain(v) for v in m.V],
            V_image=[ProjectionVolumesModel.from_domain(v) for v in m.V_image],
            lhs=IntervalModel.from_domain(m.lhs),
            davenport_rhs=IntervalModel.from_domain(m.davenport_rhs),
            bw_rhs=IntervalModel.from_domain(m.bw_rhs),
            endomorphism_bounds=[
                EndomorphismBoundModel(
                    j=j, image=IntervalModel.from_domain(img), bound=IntervalModel.from_domain(b), verdict=v,
                )
                for j, img, b, v in m.endomorphism_bounds
            ],
            verdicts=dict(m.verdicts),
            seeds=dict(r.seeds),
            retries=r.retries,
            certified=r.certified,
            vprime=[
                VPrimeModel(j=v.j, value=v.value, trials=v.trials, seed=v.seed, label=v.label) for v in r.vprime
            ],
            notes=list(r.notes),
        )


class DerivationStepModel(BaseModel):
    index: int
    kind: str
    rule: str
    ambient: int
    fd: list[int]
    children: list[int]

    @classmethod
    def from_domain(cls, step: DerivationStep) -> "DerivationStepModel":
        return cls(
            index=step.index,
            kind=step.kind,
            rule=step.rule,
            ambient=step.ambient,
            fd=step.fd.as_list(),
            children=list(step.children),
        )


class TrackModel(BaseModel):
    flavor: str
    fd: list[int]
    components: Optional[int] = None
    trace: list[DerivationStepModel]

    @classmethod
    def from_domain(cls, result: TrackResult) -> "TrackModel":
        return cls(
            flavor=result.flavor.value,
            fd=result.fd.as_list(),
            components=result.components,
            trace=[DerivationStepModel.from_domain(s) for s in result.trace],
        )


class PfaffianModel(BaseModel):
    name: str
    fd: list[int]
    stated_format: Optional[int] = None
    stated_degree: Optional[int] = None
    discrepancies: list[str] = []
    flagged: bool = False

    @classmethod
    def from_domain(cls, name: str, check: PfaffianCheck) -> "PfaffianModel":
        return cls(
            name=name,
            fd=check.fd.as_list(),
            stated_format=check.stated_format,
            stated_degree=check.stated_degree,
            discrepancies=list(check.discrepancies),
            flagged=check.flagged,
        )


class ReportFile(BaseModel):
    """One command's persisted output. ``timing`` is the only non-normative field."""
    schema_version: str = Field(alias="schema")
    tool_version: str
    command: str
    config: RunConfig
    result: dict[str, Any]
    timing: dict[str, float] = {}

    class Config:
        populate_by_name = True

    @classmethod
    def build(cls, command: str, config: RunConfig, result: dict[str, Any], timing: dict[str, float]) -> "ReportFile":
        settings = get_settings()
        return cls(
            schema_version=settings.REPORT_SCHEMA,
            tool_version=settings.TOOL_VERSION,
            command=command,
            config=config,
            result=result,
            timing=timing,
        )

    def to_json(self) -> str:
        return dump_json(self.model_dump(mode="json", by_alias=True))

    def write(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_json() + "\n")

    def normative(self) -> dict[str, Any]:
        data = self.model_dump(mode="json", by_alias=True)
        data.pop("timing", None)
        return data
