import math
from enum import Enum
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

# mpmath values. Every MPContext builds its own mpf/mpc subclasses, so these
# stay structural instead of pinning one context's classes.
PrecisionComplex = Any
PrecisionReal = Any
# sympy Rational / Gaussian rational, or None when the value is not exact
ExactNumber = Any


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


# Numerics


class PrecisionPolicy(FrozenModel):
    base_bits: int = Field(128, ge=53)
    max_bits: int = Field(4096, ge=53)
    escalate: bool = True
    # mpmath exponents are unbounded; this is the exponent range we accept
    max_magnitude_bits: int = Field(1 << 20, ge=64)

    @model_validator(mode="after")
    def _check_bits(self) -> "PrecisionPolicy":
        if self.base_bits > self.max_bits:
            raise ValueError(f"base_bits={self.base_bits} exceeds max_bits={self.max_bits}")
        return self

    def required_bits(self, log2_magnitude: float) -> int:
        """bits >= 64 + ceil(n*log2(kappa_2)) with n*log2(kappa_2) = log2 max_j |C_j(n)|."""
        if not self.escalate:
            return self.base_bits
        return max(self.base_bits, 64 + math.ceil(max(log2_magnitude, 0.0)))


class QuadratureRule(str, Enum):
    GAUSS_LEGENDRE = "gauss-legendre"
    CHEBYSHEV = "chebyshev"

    @property
    def mp_method(self) -> str:
        # Chebyshev substitution leaves integrable endpoint singularities, tanh-sinh eats those
        if self == QuadratureRule.CHEBYSHEV:
            return "tanh-sinh"
        return "gauss-legendre"


class QuadratureSpec(FrozenModel):
    rule: QuadratureRule = QuadratureRule.GAUSS_LEGENDRE
    rel_tol: float = Field(1e-12, gt=0)
    abs_tol: float = Field(1e-300, gt=0)
    max_panels: int = Field(4096, ge=1)
    initial_panels: int = Field(4, ge=1)


# Measures


class MeasureVariant(str, Enum):
    DISCRETE = "discrete"
    DENSITY = "density"
    COMPOSITE = "composite"


class Atom(FrozenModel):
    location: PrecisionReal
    weight: PrecisionComplex
    exact_location: ExactNumber = None
    exact_weight: ExactNumber = None

    @property
    def is_exact(self) -> bool:
        return self.exact_location is not None and self.exact_weight is not None


class EntireSymbol(FrozenModel):
    # eval(ctx, z) -> value; symbols are precision-agnostic
    eval: Callable[[Any, Any], Any]
    label: str
    poly_coeffs: Optional[Tuple[Any, ...]] = None
    band_image_bound: Optional[float] = None
    # value_at_ia(ctx, a) -> closed form of the symbol at ia
    value_at_ia: Optional[Callable[[Any, Any], Any]] = None
    a_range: Optional[Tuple[float, float]] = None
    # zero outside [-cutoff, cutoff] on the real line (the piecewise Berry symbols)
    cutoff: Optional[float] = None
    spec: Optional[Dict[str, Any]] = None

    @property
    def degree(self) -> Optional[int]:
        if self.poly_coeffs is None:
            return None
        return len(self.poly_coeffs) - 1


class DiscreteMeasure(FrozenModel):
    variant: Literal[MeasureVariant.DISCRETE] = MeasureVariant.DISCRETE
    band: float = Field(gt=0)
    atoms: Tuple[Atom, ...]
    precision_bits: int = Field(128, ge=53)

    @property
    def is_exact(self) -> bool:
        return all(atom.is_exact for atom in self.atoms)

    @property
    def degree(self) -> int:
        return len(self.atoms) - 1


class DensityMeasure(FrozenModel):
    variant: Literal[MeasureVariant.DENSITY] = MeasureVariant.DENSITY
    band: float = Field(gt=0)
    support: Tuple[float, float]
    # density(ctx, k) -> value
    density: Callable[[Any, Any], Any]
    quadrature: QuadratureSpec = QuadratureSpec()
    breakpoints: Tuple[float, ...] = ()
    precision_bits: int = Field(128, ge=53)
    label: str = "density"
    builtin: Optional[str] = None
    params: Dict[str, Any] = {}
    # exact_moment(l) -> sympy number, when the density has rational moments
    exact_moment: Optional[Callable[[int], Any]] = None


class CompositeMeasure(FrozenModel):
    variant: Literal[MeasureVariant.COMPOSITE] = MeasureVariant.COMPOSITE
    band: float = Field(gt=0)
    base: Union[DiscreteMeasure, DensityMeasure, "CompositeMeasure"]
    map: EntireSymbol
    image_bound: float = Field(gt=0)


CompositeMeasure.model_rebuild()

BorelMeasure = Union[DiscreteMeasure, DensityMeasure, CompositeMeasure]


# Families


class IndexKind(str, Enum):
    INTEGER = "integer"
    REAL = "real"


class SuperoscFamily(FrozenModel):
    band: float = Field(gt=0)
    target: float
    index_kind: IndexKind
    generator: Callable[[Any], BorelMeasure]
    label: str
    # closed_form(index, z) -> value
    closed_form: Optional[Callable[[Any, Any], Any]] = None
    # Taylor matching F^(l)(0) = (ia)^l for l <= n holds by construction
    taylor_matched: bool = False
    # limit plane wave is target_amplitude * e^{i target z}
    target_amplitude: Any = 1

    @model_validator(mode="after")
    def _check_superoscillation(self) -> "SuperoscFamily":
        if abs(self.target) <= self.band:
            raise ValueError(
                f"target frequency {self.target} lies inside the band [-{self.band}, {self.band}]"
            )
        return self


class FamilyElement(FrozenModel):
    index: Any
    band: float
    target: float
    measure: BorelMeasure
    # closed_form(z) -> value
    closed_form: Optional[Callable[[Any], Any]] = None


class BerrySpec(FrozenModel):
    symbol_k: EntireSymbol
    symbol_g: EntireSymbol
    a: float = Field(gt=0)
    b: float
    k0: float = Field(1.0, gt=0)
    # g on the real line is bounded by e^{growth|u|}
    growth: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def _check_corner(self) -> "BerrySpec":
        if self.b < self.a:
            raise ValueError(f"triangle corner b={self.b} must be >= a={self.a}")
        return self


# Linear systems


class LinearSolution(FrozenModel):
    coefficients: Tuple[PrecisionComplex, ...]
    exact_coefficients: Optional[Tuple[ExactNumber, ...]] = None
    condition: Optional[float] = None
    precision_bits: int


class MomentFamilyResult(FrozenModel):
    solution: LinearSolution
    element: FamilyElement

    @property
    def coefficients(self) -> Tuple[PrecisionComplex, ...]:
        return self.solution.coefficients

    @property
    def exact_coefficients(self) -> Optional[Tuple[ExactNumber, ...]]:
        return self.solution.exact_coefficients

    def evaluate(self, z: Any) -> PrecisionComplex:
        return self.element.closed_form(z)


class GeneralSolution(FrozenModel):
    solution: LinearSolution
    measure: Optional[BorelMeasure] = None


class InterpolationResult(FrozenModel):
    coefficients: Tuple[PrecisionComplex, ...]
    points: Tuple[PrecisionReal, ...]
    measure: DensityMeasure
    residual: float
    condition: float
    # evaluate(z) = sum_l c_l sinc(z - x_l)
    evaluate: Callable[[Any], Any]


# Evolution


class PropagatedMeasure(FrozenModel):
    base: BorelMeasure
    weight_symbol: EntireSymbol
    time: PrecisionComplex
    measure: BorelMeasure


# Metrics


class Verdict(str, Enum):
    DECREASING = "decreasing"
    NON_DECREASING = "non-decreasing"
    INCONCLUSIVE = "inconclusive"


class GridDescription(BaseModel):
    r_max: float = Field(4.0, gt=0)
    n_radii: int = Field(6, ge=1)
    n_angles: int = Field(16, ge=1)


class ConvergenceReport(BaseModel):
    B: float = Field(ge=0)
    label: str = ""
    target: float = 0.0
    indices: List[Any]
    sup_estimates: List[float]
    grid: GridDescription
    taylor_defects: Optional[Dict[str, Dict[int, str]]] = None
    bound_values: Optional[List[float]] = None
    verdict: Verdict
    failed_checks: List[str] = []

    @model_validator(mode="after")
    def _check_lengths(self) -> "ConvergenceReport":
        if len(self.sup_estimates) != len(self.indices):
            raise ValueError("sup_estimates and indices differ in length")
        if any(value < 0 for value in self.sup_estimates):
            raise ValueError("sup_estimates must be nonnegative")
        if self.bound_values is not None and len(self.bound_values) != len(self.indices):
            raise ValueError("bound_values and indices differ in length")
        return self


# Identity checks


class IdentityCheckName(str, Enum):
    LEMMA_A1 = "lemmaA1"
    LEMMA_A2 = "lemmaA2"
    LEMMA_31 = "lemma31"
    COR_33 = "cor33"


class IdentityCase(BaseModel):
    label: str
    max_error: float
    tolerance: float
    samples: int
    violations: int = 0
    witness: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.max_error <= self.tolerance


class IdentityCheckResult(BaseModel):
    name: IdentityCheckName
    cases: List[IdentityCase]

    @property
    def passed(self) -> bool:
        return all(case.passed for case in self.cases)

    @property
    def failures(self) -> List[IdentityCase]:
        return [case for case in self.cases if not case.passed]
