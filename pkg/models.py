from fractions import Fraction
from typing import Annotated, Any, Literal, NamedTuple, Optional, Union

from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    WithJsonSchema,
    field_serializer,
    model_validator,
)

from utils import as_fraction, number_to_str

Rational = Annotated[
    Fraction,
    BeforeValidator(as_fraction),
    PlainSerializer(number_to_str, return_type=str),
    WithJsonSchema({"type": "string", "pattern": r"^-?\d+(/\d+)?$"}),
]

Step = tuple[int, int]

COUNTING = "counting"
PROBABILISTIC = "probabilistic"


# ===== STEP SETS =====

class WeightedStepSet(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    steps: tuple[Step, ...]
    weights: tuple[Rational, ...]
    mode: Literal["counting", "probabilistic"] = COUNTING

    @model_validator(mode="after")
    def _check(self):
        if not self.steps:
            raise ValueError("step set is empty")
        if len(self.steps) != len(self.weights):
            raise ValueError("one weight per step")
        if list(self.steps) != sorted(set(self.steps)):
            raise ValueError("steps must be distinct and in canonical order")
        for i, j in self.steps:
            if i not in (-1, 0, 1) or j not in (-1, 0, 1) or (i, j) == (0, 0):
                raise ValueError(f"step ({i},{j}) outside the small-step alphabet")
        if any(w < 0 for w in self.weights):
            raise ValueError("negative weight")
        if self.mode == COUNTING and any(w != 1 for w in self.weights):
            raise ValueError("counting mode requires unit weights")
        if self.mode == PROBABILISTIC and sum(self.weights) != 1:
            raise ValueError("probabilities must sum to 1")
        return self

    @classmethod
    def counting(cls, steps):
        steps = tuple(sorted(set(steps)))
        return cls(steps=steps, weights=tuple(Fraction(1) for _ in steps))

    @classmethod
    def probabilistic(cls, weighted):
        items = sorted((s, as_fraction(w)) for s, w in dict(weighted).items() if as_fraction(w) != 0)
        return cls(
            steps=tuple(s for s, _ in items),
            weights=tuple(w for _, w in items),
            mode=PROBABILISTIC,
        )

    @property
    def size(self):
        return len(self.steps)

    def weight(self, i, j):
        try:
            return self.weights[self.steps.index((i, j))]
        except ValueError:
            return Fraction(0)


class ModelClass(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: int
    representative: WeightedStepSet
    symmetric_twin: Optional[WeightedStepSet] = None
    flags: tuple[str, ...] = ()


# ===== KERNEL =====

class KernelForm(BaseModel):
    """Kernel as a quadratic a*v^2 + b*v + c in v = y (or v = x).

    a, b, c are sympy Polys in the other variable; their domain is QQ when
    z is fixed (or the walk is probabilistic) and QQ(z) when z is formal.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    a: Any
    b: Any
    c: Any
    orientation: Literal["y", "x"] = "y"
    source: WeightedStepSet
    z_value: Optional[Rational] = None

    @property
    def concrete(self):
        return self.source.mode == PROBABILISTIC or self.z_value is not None

    @property
    def coefficients(self):
        return (self.a, self.b, self.c)


class BranchRoot(BaseModel):
    re: Optional[float] = None
    im: Optional[float] = None
    multiplicity: int
    at_infinity: bool = False
    exact: Optional[str] = None

    @property
    def value(self):
        return complex(self.re, self.im)

    @property
    def is_real(self):
        return not self.at_infinity and abs(self.im) <= 1e-12 * max(1.0, abs(self.re))


class BranchPointReport(BaseModel):
    variable: Literal["x", "y"]
    degree: int
    roots: list[BranchRoot]
    inside_unit_disc: list[BranchRoot]
    ordering: list[float] = Field(default_factory=list)


class GenusReport(BaseModel):
    genus: Literal[0, 1]
    case: Optional[int] = Field(default=None, ge=1, le=5)
    irreducibility: Literal["verified", "unverified"] = "verified"
    pattern: dict[str, dict[str, int]] = Field(default_factory=dict)

    @property
    def degenerate_case(self):
        return self.case


# ===== WALK GROUP =====

class BirationalPoint(NamedTuple):
    x: Fraction
    y: Fraction


class GroupOrderReport(BaseModel):
    order: Optional[int] = None
    unbounded_beyond: Optional[int] = None
    cap: int
    trials: int
    witness: list[tuple[str, str]] = Field(default_factory=list)
    z_values: list[str] = Field(default_factory=list)
    seed: int

    @property
    def finite(self):
        return self.order is not None

    @property
    def label(self):
        return str(self.order) if self.finite else "unbounded"


Nature = Literal["holonomic_nonalgebraic", "algebraic", "unclassified"]


class CensusEntry(BaseModel):
    id: int
    steps: str
    group_order: Optional[str] = None
    nature: Optional[Nature] = None
    genus_profile: Optional[dict[str, int]] = None
    symmetric: bool = False
    flags: list[str] = Field(default_factory=list)


class CensusReport(BaseModel):
    count: int
    seed: int
    cap: int
    histogram: dict[str, int] = Field(default_factory=dict)
    models: list[CensusEntry]


class ClassifyResult(BaseModel):
    steps: str
    seed: int
    group_order: str
    nature: Nature
    genus_profile: dict[str, int]
    flags: list[str] = Field(default_factory=list)


# ===== ENUMERATION =====

class TruncatedSeries(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str
    coefficients: list[Any]

    @field_serializer("coefficients")
    def _numbers(self, values):
        return [number_to_str(v) for v in values]

    @property
    def order(self):
        return len(self.coefficients) - 1

    def __getitem__(self, k):
        return self.coefficients[k]


class CountTable(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    stepset: WeightedStepSet
    N: int
    excursions: list[int]
    x_axis: list[int]
    y_axis: list[int]
    totals: list[int]
    layers: Optional[list[Any]] = None

    def count(self, i, j, k):
        if self.layers is None:
            raise ValueError("table built without layers")
        layer = self.layers[k]
        if i >= layer.shape[0] or j >= layer.shape[1]:
            return 0
        return int(layer[i, j])


class FitResult(BaseModel):
    rho: float
    gamma: float
    quality: float
    points: int


class VerifyResult(BaseModel):
    steps: str
    N: int
    residual: int


# ===== INTEGRALS =====

class QuadratureSpec(BaseModel):
    abs_tol: float = Field(gt=0)
    max_refinement: int = Field(default=200, ge=1)


class SingularityReport(BaseModel):
    steps: str
    z_g: float
    bracket: tuple[float, float]
    merged_pair: tuple[float, float]
    tolerance: float
    genus_below: int
    genus_at: int
    z_g_exact: Optional[str] = None
    flags: list[str] = Field(default_factory=list)


class IntegralRow(BaseModel):
    z: float
    integral: float
    series: Optional[float] = None
    diff: Optional[float] = None


class IntegralResult(BaseModel):
    which: Literal["F00", "F10"]
    rows: list[IntegralRow]


# ===== QUEUES =====

class CoupledProcessorsParams(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    model: Literal["coupled"] = "coupled"
    lambda1: Rational
    lambda2: Rational
    mu1: Rational
    mu2: Rational
    mu1_star: Rational
    mu2_star: Rational

    @model_validator(mode="after")
    def _positive(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("arrival rates must be nonnegative")
        if min(self.mu1, self.mu2, self.mu1_star, self.mu2_star) <= 0:
            raise ValueError("service rates must be positive")
        return self

    @classmethod
    def from_sharing(cls, lambda1, lambda2, mu1_star, mu2_star, xi):
        xi = as_fraction(xi)
        if not 0 < xi < 1:
            raise ValueError("sharing fraction must lie in (0,1)")
        mu1_star, mu2_star = as_fraction(mu1_star), as_fraction(mu2_star)
        return cls(
            lambda1=lambda1,
            lambda2=lambda2,
            mu1=xi * mu1_star,
            mu2=(1 - xi) * mu2_star,
            mu1_star=mu1_star,
            mu2_star=mu2_star,
        )

    @property
    def p(self):
        return self.mu1 - self.mu1_star

    @property
    def q(self):
        return self.mu2 - self.mu2_star

    @property
    def processor_sharing(self):
        return self.p * self.q == self.mu1 * self.mu2


class JsqParams(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    model: Literal["jsq"] = "jsq"
    alpha: Rational
    beta: Rational
    lam: Rational
    pi1: Rational = Fraction(1, 2)

    @model_validator(mode="after")
    def _positive(self):
        if min(self.alpha, self.beta, self.lam) <= 0:
            raise ValueError("rates must be positive")
        if not 0 <= self.pi1 <= 1:
            raise ValueError("tie probability pi1 must lie in [0,1]")
        return self


class AlternatingParams(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    model: Literal["alternating"] = "alternating"
    lambda1: Rational
    lambda2: Rational
    mu1: Rational
    mu2: Rational
    xi1: Rational = Fraction(1)
    xi2: Rational = Fraction(1)

    @model_validator(mode="after")
    def _positive(self):
        if min(self.lambda1, self.lambda2) < 0 or min(self.mu1, self.mu2, self.xi1, self.xi2) <= 0:
            raise ValueError("rates must be positive")
        return self

    @property
    def rho1(self):
        return self.lambda1 / self.mu1

    @property
    def rho2(self):
        return self.lambda2 / self.mu2


QueueParams = Annotated[
    Union[CoupledProcessorsParams, JsqParams, AlternatingParams],
    Field(discriminator="model"),
]


class QueueRequest(BaseModel):
    params: QueueParams


class ErgodicityModel(BaseModel):
    """Interior kernel plus the boundary generating functions q(x,y), q~(x,y).

    q = x * sum over x-axis jumps rate * (x^i y^j - 1), q~ likewise with y;
    both are sympy expressions vanishing at (1,1).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    kernel: KernelForm
    q: Any
    q_tilde: Any


class ErgodicityFlags(BaseModel):
    delta: Literal[0, 1]
    delta_tilde: Literal[0, 1]
    ergodic: bool
    x0_at_1: float
    y0_at_1: float
    derivative_method: Literal["implicit", "finite_difference"] = "implicit"


class JsqBranchPoints(BaseModel):
    s: Rational
    x_star_ab: Rational
    x_star_ba: Rational
    y1_ab: float
    y2_ab: float
    y1_ba: float
    y2_ba: float


class StabilityReport(BaseModel):
    model: str
    stable: bool
    quarter_means: list[float]
    horizon: float
    seed: int


class CtmcEstimate(BaseModel):
    value: float
    std_error: float
    replicas: int
    seed: int
    functional: str = ""
    runaways: int = 0
    flags: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _spread(self):
        if self.std_error < 0:
            raise ValueError("negative standard error")
        if self.replicas > 1 and self.std_error == 0 and "deterministic" not in self.flags:
            raise ValueError("zero standard error from several replicas")
        return self


class QueueResult(BaseModel):
    model: str
    seed: int
    ergodic: bool
    predicate: str
    flags: Optional[ErgodicityFlags] = None
    branch_points: Optional[JsqBranchPoints] = None
    f0: Optional[dict[str, float]] = None
    f0_printed: Optional[dict[str, float]] = None
    printed_gap: Optional[float] = None
    f00: Optional[str] = None
    f00_source: Optional[Literal["work_conservation"]] = None
    estimate: Optional[CtmcEstimate] = None
    notes: list[str] = Field(default_factory=list)


# ===== CRA =====

class AffineWord(NamedTuple):
    scale: Union[float, Fraction]
    offset: Union[float, Fraction]
    length: int
    ones_count: int


class CraConstants(BaseModel):
    lam: float
    p: float
    q: float
    K: float
    g: list[float]
    k: list[float]
    D: float
    truncation: tuple[int, int]
    method: Literal["transfer", "words"] = "transfer"
    printed_k: float
    tail_bound: float = 0.0


class CraResult(BaseModel):
    lam: float = Field(serialization_alias="lambda")
    p: float
    seed: int
    lambda_max: float
    K: float
    D: float
    alpha: list[float]
    slope: Optional[float] = None
    chi: list[dict[str, float]] = Field(default_factory=list)
