import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import sympy
from mpmath.ctx_mp import MPContext

from schemas.run_config import Construction, FamilySpec
from schemas.superoscillation import (
    BerrySpec,
    BorelMeasure,
    DensityMeasure,
    EntireSymbol,
    FamilyElement,
    GeneralSolution,
    IndexKind,
    InterpolationResult,
    LinearSolution,
    MomentFamilyResult,
    PrecisionComplex,
    PrecisionReal,
    SuperoscFamily,
)
from services.exceptions import (
    DuplicateFrequency,
    HypothesisViolation,
    ImageBoundViolation,
    SingularSystem,
    SpecParseError,
)
from services.measure_service import MeasureService, get_measure_service
from services.numerics_service import NumericsService, all_exact, as_exact, get_numerics_service
from services.quadrature_service import QuadratureService
from services.symbol_service import SymbolService

logger = logging.getLogger(__name__)

# build(ctx) -> (rows, rhs) of a square system at ctx precision
SystemBuilder = Callable[[MPContext], Tuple[List[List[Any]], List[Any]]]
Evaluator = Callable[[Any], PrecisionComplex]

# Hankel moment matrices of Szego weights lose about log2(3 + sqrt 8) bits per degree
HANKEL_GROWTH_BITS = math.log2(3 + math.sqrt(8))
SYMBOL_SAMPLES = 2001


class FamilyService:
    def __init__(
        self,
        numerics: NumericsService,
        quadrature: QuadratureService,
        measures: MeasureService,
        symbols: SymbolService,
    ):
        self.numerics = numerics
        self.quadrature = quadrature
        self.measures = measures
        self.symbols = symbols

    # Point-mass constructions

    @staticmethod
    def equispaced_frequencies(n: int, k0: Any = 1) -> List[Any]:
        """k_j = k0 (1 - 2j/n), j = 0..n, as exact rationals when k0 is exact."""
        if n < 0:
            raise HypothesisViolation(detail=f"n must be nonnegative, got {n}")
        if n == 0:
            return [sympy.Integer(0)]
        scale = as_exact(k0)
        if scale is None:
            return [float(k0) * (1 - 2 * j / n) for j in range(n + 1)]
        return [scale * (1 - sympy.Rational(2 * j, n)) for j in range(n + 1)]

    def standard_family(self, a: Any, n: int) -> FamilyElement:
        """(cos(z/n) + ia sin(z/n))^n as the binomial point masses at k_j = 1 - 2j/n."""
        if n < 1:
            raise HypothesisViolation(detail=f"standard family needs n >= 1, got n={n}")
        a_float = float(a)
        if abs(a_float) <= 1:
            raise HypothesisViolation(detail=f"target a={a_float} lies inside the band [-1, 1]")

        bits = self.numerics.escalated_bits(self._standard_log2_max(a_float, n), f"standard family n={n}")
        ctx = self.numerics.context(bits)
        a_exact = as_exact(a)
        locations = self.equispaced_frequencies(n)
        if a_exact is not None:
            plus, minus = (1 + a_exact) / 2, (1 - a_exact) / 2
            weights = [sympy.binomial(n, j) * plus ** (n - j) * minus ** j for j in range(n + 1)]
        else:
            a_mp = ctx.mpf(self.numerics.convert(a, ctx).real)
            plus, minus = (1 + a_mp) / 2, (1 - a_mp) / 2
            weights = [ctx.binomial(n, j) * plus ** (n - j) * minus ** j for j in range(n + 1)]
        measure = self.measures.discrete(list(zip(locations, weights)), 1, bits=bits)

        a_mp = ctx.mpf(self.numerics.convert(a, ctx).real)
        numerics = self.numerics

        def closed_form(z: Any) -> PrecisionComplex:
            z = ctx.mpc(numerics.convert(z, ctx))
            numerics.check_exponent(abs(z.imag) * max(1, abs(a_mp)), "standard family closed form")
            return (ctx.cos(z / n) + ctx.mpc(0, a_mp) * ctx.sin(z / n)) ** n

        return FamilyElement(index=n, band=1.0, target=a_float, measure=measure, closed_form=closed_form)

    def lagrange_coefficients(self, freqs: Sequence[Any], a: Any, k0: Optional[Any] = None) -> LinearSolution:
        """C_j = prod_{l != j} (k_l - a) / (k_l - k_j), exact when every input is rational."""
        band = self._check_frequencies(freqs, k0)
        if abs(float(a)) <= band:
            raise HypothesisViolation(detail=f"target a={float(a)} lies inside the band [-{band}, {band}]")

        exact = all_exact(list(freqs) + [a])
        if exact is not None:
            ks, a_exact = exact[:-1], exact[-1]
            weights = [
                sympy.prod([(ks[l] - a_exact) / (ks[l] - ks[j]) for l in range(len(ks)) if l != j])
                for j in range(len(ks))
            ]
            return self._from_exact(weights, f"lagrange n={len(ks) - 1}")

        def product_weights(ctx: MPContext) -> List[PrecisionComplex]:
            ks = [ctx.re(self.numerics.convert(k, ctx)) for k in freqs]
            a_mp = ctx.re(self.numerics.convert(a, ctx))
            return [
                ctx.mpc(ctx.fprod((ks[l] - a_mp) / (ks[l] - ks[j]) for l in range(len(ks)) if l != j))
                for j in range(len(ks))
            ]

        weights = product_weights(self.numerics.ctx)
        bits = self.numerics.escalated_bits(self._log2_max(weights), f"lagrange n={len(freqs) - 1}")
        if bits > self.numerics.bits:
            weights = product_weights(self.numerics.context(bits))
        return LinearSolution(coefficients=tuple(weights), precision_bits=bits)

    def lagrange_family(self, freqs: Sequence[Any], a: Any, k0: Optional[Any] = None) -> FamilyElement:
        band = self._check_frequencies(freqs, k0)
        solution = self.lagrange_coefficients(freqs, a, band if k0 is None else k0)
        weights = solution.exact_coefficients or solution.coefficients
        measure = self.measures.discrete(list(zip(freqs, weights)), band, bits=solution.precision_bits)
        return FamilyElement(index=len(freqs) - 1, band=band, target=float(a), measure=measure,
                             closed_form=lambda z: self.measures.eval_transform(measure, z))

    def vandermonde_solve(self, freqs: Sequence[Any], a: Any) -> LinearSolution:
        """Solve sum_j C_j k_j^l = a^l, l = 0..n, directly; cross-checks the product formula."""
        self._check_frequencies(freqs, None)
        size = len(freqs)
        exact = all_exact(list(freqs) + [a])
        exact_system = None
        if exact is not None:
            ks, a_exact = exact[:-1], exact[-1]
            exact_system = ([[k ** l for k in ks] for l in range(size)], [a_exact ** l for l in range(size)])

        def build(ctx: MPContext) -> Tuple[List[List[Any]], List[Any]]:
            ks = [ctx.re(self.numerics.convert(k, ctx)) for k in freqs]
            a_mp = self.numerics.convert(a, ctx)
            return [[k ** l for k in ks] for l in range(size)], [a_mp ** l for l in range(size)]

        return self.solve_linear(build, f"vandermonde n={size - 1}", exact=exact_system)

    # Moment constructions

    def moment_family(self, h: BorelMeasure, n: int, a: Any) -> MomentFamilyResult:
        """Coefficients of F(z) = sum_j C_j int (ik)^j e^{ikz} h(k) dk with F^(l)(0) = (ia)^l, l <= n.

        Solves the Hankel system sum_j M_{l+j} d_j = a^l for d_j = i^j C_j.
        """
        if not isinstance(h, DensityMeasure):
            raise HypothesisViolation(detail="moment family needs a density weight h")
        if n < 0:
            raise HypothesisViolation(detail=f"n must be nonnegative, got {n}")
        self._check_nonnegative(h)
        bits = self.numerics.escalated_bits(n * HANKEL_GROWTH_BITS, f"moment system n={n}")
        size = n + 1

        a_exact = as_exact(a)
        exact_moments = [self.measures.exact_moment(h, l) for l in range(2 * n + 1)]
        exact_system = None
        if a_exact is not None and all(m is not None for m in exact_moments):
            exact_system = (
                [[exact_moments[l + j] for j in range(size)] for l in range(size)],
                [a_exact ** l for l in range(size)],
            )

        def build(ctx: MPContext) -> Tuple[List[List[Any]], List[Any]]:
            weight = h.model_copy(update={"precision_bits": max(ctx.prec, h.precision_bits)})
            moments = [self.measures.moment(weight, l) for l in range(2 * n + 1)]
            a_mp = self.numerics.convert(a, ctx)
            return [[moments[l + j] for j in range(size)] for l in range(size)], [a_mp ** l for l in range(size)]

        d = self.solve_linear(build, f"moment system n={n}", exact=exact_system, bits=bits)
        ctx = self.numerics.context(d.precision_bits)
        coefficients = tuple(value * ctx.mpc(0, -1) ** j for j, value in enumerate(d.coefficients))
        exact_coefficients = None
        if d.exact_coefficients is not None:
            exact_coefficients = tuple(sympy.expand(value * (-sympy.I) ** j)
                                       for j, value in enumerate(d.exact_coefficients))
        solution = LinearSolution(coefficients=coefficients, exact_coefficients=exact_coefficients,
                                  condition=d.condition, precision_bits=d.precision_bits)

        numerics = self.numerics

        def polynomial(inner: MPContext, k: Any) -> Any:
            ik = inner.mpc(0, k)
            return inner.fsum(numerics.convert(c, inner) * ik ** j for j, c in enumerate(coefficients))

        weight = h.model_copy(update={"precision_bits": max(d.precision_bits, h.precision_bits)})
        measure = self.measures.reweight(weight, polynomial)
        if exact_coefficients is not None:
            measure = measure.model_copy(update={
                "exact_moment": lambda l: sympy.expand(sum(
                    (c * sympy.I ** j * h.exact_moment(j + l) for j, c in enumerate(exact_coefficients)),
                    sympy.Integer(0),
                )),
                "label": f"moment family n={n} over {h.label}",
            })
        element = FamilyElement(index=n, band=h.band, target=float(a), measure=measure,
                                closed_form=lambda z: self.measures.eval_transform(measure, z))
        return MomentFamilyResult(solution=solution, element=element)

    def general_family(self, measures: Sequence[BorelMeasure], a: Any) -> GeneralSolution:
        """C_j with sum_j C_j int k^l d(mu_j) = a^l for l = 0..n, and the combined measure when representable."""
        if not measures:
            raise HypothesisViolation(detail="general family needs at least one measure")
        bands = {m.band for m in measures}
        if max(bands) - min(bands) > self.numerics.tolerance() * max(bands):
            raise HypothesisViolation(detail=f"measures have different bands {sorted(bands)}")
        size = len(measures)

        a_exact = as_exact(a)
        exact_rows = [[self.measures.exact_moment(m, l) for m in measures] for l in range(size)]
        exact_system = None
        if a_exact is not None and all(value is not None for row in exact_rows for value in row):
            exact_system = (exact_rows, [a_exact ** l for l in range(size)])

        def build(ctx: MPContext) -> Tuple[List[List[Any]], List[Any]]:
            a_mp = self.numerics.convert(a, ctx)
            rows = [[self.measures.moment(m, l) for m in measures] for l in range(size)]
            return rows, [a_mp ** l for l in range(size)]

        solution = self.solve_linear(build, f"general moment system n={size - 1}", exact=exact_system)
        combined = self.measures.combine(measures, solution.exact_coefficients or solution.coefficients)
        return GeneralSolution(solution=solution, measure=combined)

    def szego_check(self, h: DensityMeasure, alpha: Any, beta: Any) -> PrecisionReal:
        """int_alpha^beta ln h(k) / sqrt((beta-k)(k-alpha)) dk; finite for Szego weights."""
        alpha, beta = float(alpha), float(beta)
        if not h.support[0] <= alpha < beta <= h.support[1]:
            raise HypothesisViolation(
                detail=f"[{alpha}, {beta}] is not inside the support [{h.support[0]}, {h.support[1]}]",
            )
        density = h.density
        value = self.quadrature.integrate_chebyshev(
            lambda ctx, k: ctx.log(density(ctx, k)), alpha, beta, spec=h.quadrature, bits=h.precision_bits,
        )
        return value.real

    # Berry construction

    def builtin_symbol(self, name: str, a: Optional[float] = None) -> EntireSymbol:
        return self.symbols.builtin_symbol(name, a=a)

    def berry_spec(
        self,
        symbol_k: EntireSymbol,
        a: float,
        symbol_g: Optional[EntireSymbol] = None,
        b: Optional[float] = None,
        k0: float = 1.0,
        growth: float = 0.0,
    ) -> BerrySpec:
        """Check the superoscillation hypotheses on k and g before building a BerrySpec."""
        a = float(a)
        symbol_g = symbol_g or self.symbols.builtin_symbol("const1")
        ctx = self.numerics.ctx
        if symbol_k.a_range is not None:
            lower, upper = symbol_k.a_range
            inside = lower < a <= upper if symbol_k.cutoff is not None else lower < a < upper
            if not inside:
                raise HypothesisViolation(detail=f"a={a} is outside the admissible range {symbol_k.a_range} of "
                                                 f"{symbol_k.label}")
        target = self._value_at_ia(symbol_k, a)
        if abs(target.imag) > self.numerics.tolerance() * max(1, abs(target)):
            raise HypothesisViolation(detail=f"{symbol_k.label} is not real at ia", witness=ctx.nstr(target, 12))
        if abs(target.real) <= k0:
            raise HypothesisViolation(
                detail=f"k(ia)={ctx.nstr(target.real, 12)} lies inside the band [-{k0}, {k0}]",
            )
        g_at_ia = self._value_at_ia(symbol_g, a)
        if abs(g_at_ia - 1) > 1e-10:
            raise HypothesisViolation(detail=f"amplitude must satisfy g(ia) = 1, got {ctx.nstr(g_at_ia, 12)}")

        reach = max(10.0, float(b or a) * 4)
        step = ctx.mpf(2 * reach) / (SYMBOL_SAMPLES - 1)
        slack = k0 * (1 + self.numerics.tolerance())
        for i in range(SYMBOL_SAMPLES):
            u = -reach + step * i
            value = ctx.convert(symbol_k.eval(ctx, u))
            if abs(value) > slack:
                raise ImageBoundViolation(detail=f"{symbol_k.label} leaves [-{k0}, {k0}] on the real line",
                                          witness=f"u={ctx.nstr(u, 8)} -> {ctx.nstr(value, 12)}")
        return BerrySpec(symbol_k=symbol_k, symbol_g=symbol_g, a=a, b=float(b or a), k0=k0, growth=growth)

    def berry_target(self, spec: BerrySpec) -> float:
        return float(self._value_at_ia(spec.symbol_k, spec.a).real)

    def truncation_radius(self, spec: BerrySpec, delta: float, z_modulus: float, bits: int) -> float:
        """R with e^{(a^2 - R^2)/(2 delta^2)} e^{growth R} e^{k0 |z|} below the absolute tolerance."""
        tolerance = max(self.quadrature.spec.abs_tol, 2.0 ** -bits)
        log_budget = math.log(1 / tolerance) + spec.k0 * z_modulus
        radius = math.sqrt(spec.a ** 2 + 2 * delta ** 2 * log_budget) + 2 * delta ** 2 * spec.growth
        logger.debug("berry truncation radius %.6g for delta=%g, |z|=%g", radius, delta, z_modulus)
        return radius

    def berry_eval(self, spec: BerrySpec, delta: Any, z: Any) -> PrecisionComplex:
        """(1/(delta sqrt(2 pi))) int g(u) e^{ik(u)z} e^{-(u-ia)^2/(2 delta^2)} du."""
        delta = float(delta)
        if delta <= 0:
            raise HypothesisViolation(detail=f"delta must be positive, got {delta}")
        bits = self._berry_bits(spec, delta)
        ctx = self.numerics.context(bits)
        z = ctx.mpc(self.numerics.convert(z, ctx))
        self.numerics.check_exponent(spec.a ** 2 / (2 * delta ** 2) + spec.k0 * abs(z), "berry integrand")
        radius = self.truncation_radius(spec, delta, float(abs(z)), bits)
        weight = self._berry_weight(spec, delta)
        symbol_k = spec.symbol_k

        value = self.quadrature.integrate(
            lambda inner, u: weight(inner, u) * inner.expj(symbol_k.eval(inner, u) * z),
            -radius, radius,
            breakpoints=self._berry_breakpoints(spec),
            bits=bits,
            initial_panels=self._berry_panels(spec, delta, radius, float(abs(z))),
        )
        return self.numerics.ensure_finite(value, "berry integral")

    def berry_measure(self, spec: BerrySpec, delta: Any, z_max: float = 4.0) -> FamilyElement:
        """The Gaussian-weighted parameter line pushed forward by k; truncated for |z| <= z_max."""
        delta = float(delta)
        if delta <= 0:
            raise HypothesisViolation(detail=f"delta must be positive, got {delta}")
        bits = self._berry_bits(spec, delta)
        radius = self.truncation_radius(spec, delta, z_max, bits)
        base = self.measures.density(
            self._berry_weight(spec, delta), (-radius, radius), radius,
            label=f"berry weight delta={delta}", bits=bits, breakpoints=self._berry_breakpoints(spec),
        )
        measure = self.measures.composite(base, spec.symbol_k, spec.k0)
        return FamilyElement(index=delta, band=spec.k0, target=self.berry_target(spec), measure=measure,
                             closed_form=lambda z: self.berry_eval(spec, delta, z))

    # Sinc constructions

    def sinc_delta_family(self, a: Any, delta: Any) -> FamilyElement:
        """(2/delta) e^{-1/delta} sinc(sqrt(z^2 - 2iaz/delta - 1/delta^2)) and its density on [-1, 1]."""
        a, delta = float(a), float(delta)
        if a <= 1 or delta <= 0:
            raise HypothesisViolation(detail=f"sinc_delta family needs a > 1 and delta > 0, got a={a}, delta={delta}")
        self.numerics.check_exponent((a - 1) / delta, "sinc_delta density")
        measure = self.measures.builtin_density("sinc_delta", {"a": a, "delta": delta})
        ctx = self.numerics.context(measure.precision_bits)
        numerics = self.numerics
        a_mp, delta_mp = ctx.mpf(a), ctx.mpf(delta)

        def closed_form(z: Any) -> PrecisionComplex:
            z = ctx.mpc(numerics.convert(z, ctx))
            w = z * z - 2j * a_mp * z / delta_mp - 1 / delta_mp ** 2
            return 2 / delta_mp * ctx.exp(-1 / delta_mp) * numerics.sinc_of_sqrt(w, ctx)

        return FamilyElement(index=delta, band=1.0, target=a, measure=measure, closed_form=closed_form)

    def sinc_interpolation(self, points: Sequence[Any], values: Sequence[Any]) -> InterpolationResult:
        """c with sum_l c_l sinc(x_j - x_l) = v_j."""
        if len(points) != len(values):
            raise HypothesisViolation(detail=f"{len(points)} points but {len(values)} values")
        if not points:
            raise HypothesisViolation(detail="interpolation needs at least one point")
        numerics = self.numerics

        def build(ctx: MPContext) -> Tuple[List[List[Any]], List[Any]]:
            xs = [ctx.re(numerics.convert(x, ctx)) for x in points]
            rows = [[numerics.csinc(xj - xl, ctx) for xl in xs] for xj in xs]
            return rows, [numerics.convert(v, ctx) for v in values]

        solution = self.solve_linear(build, f"sinc collocation on {len(points)} points")
        ctx = self.numerics.context(solution.precision_bits)
        xs = tuple(ctx.re(numerics.convert(x, ctx)) for x in points)
        coefficients = solution.coefficients
        rows, rhs = build(ctx)
        residual = max(abs(ctx.fsum(m * c for m, c in zip(row, coefficients)) - v) for row, v in zip(rows, rhs))

        def density(inner: MPContext, k: Any) -> Any:
            return inner.fsum(inner.convert(c) * inner.expj(-k * x) for c, x in zip(coefficients, xs)) / 2

        def evaluate(z: Any) -> PrecisionComplex:
            z = ctx.mpc(numerics.convert(z, ctx))
            return ctx.fsum(c * numerics.csinc(z - x, ctx) for c, x in zip(coefficients, xs))

        measure = self.measures.density(density, (-1, 1), 1, label="sinc interpolant",
                                        bits=solution.precision_bits)
        return InterpolationResult(coefficients=coefficients, points=xs, measure=measure,
                                   residual=float(residual), condition=solution.condition, evaluate=evaluate)

    # Sequences

    @staticmethod
    def _memoized(factory: Callable[[Any], FamilyElement]) -> Callable[[Any], FamilyElement]:
        elements: Dict[Any, FamilyElement] = {}

        def element(index: Any) -> FamilyElement:
            if index not in elements:
                elements[index] = factory(index)
            return elements[index]

        return element

    def standard_sequence(self, a: Any) -> SuperoscFamily:
        element = self._memoized(lambda n: self.standard_family(a, int(n)))
        return SuperoscFamily(
            band=1.0, target=float(a), index_kind=IndexKind.INTEGER,
            generator=lambda n: element(n).measure,
            closed_form=lambda n, z: element(n).closed_form(z),
            label=f"standard a={a}",
        )

    def lagrange_sequence(self, a: Any, k0: Any = 1) -> SuperoscFamily:
        element = self._memoized(lambda n: self.lagrange_family(self.equispaced_frequencies(int(n), k0), a, k0))
        return SuperoscFamily(
            band=float(k0), target=float(a), index_kind=IndexKind.INTEGER,
            generator=lambda n: element(n).measure,
            label=f"lagrange equispaced a={a}",
            taylor_matched=True,
        )

    def moment_sequence(self, h: DensityMeasure, a: Any) -> SuperoscFamily:
        element = self._memoized(lambda n: self.moment_family(h, int(n), a).element)
        return SuperoscFamily(
            band=h.band, target=float(a), index_kind=IndexKind.INTEGER,
            generator=lambda n: element(n).measure,
            label=f"moment family a={a} over {h.label}",
            taylor_matched=True,
        )

    def sinc_delta_sequence(self, a: Any) -> SuperoscFamily:
        element = self._memoized(lambda delta: self.sinc_delta_family(a, delta))
        return SuperoscFamily(
            band=1.0, target=float(a), index_kind=IndexKind.REAL,
            generator=lambda delta: element(delta).measure,
            closed_form=lambda delta, z: element(delta).closed_form(z),
            label=f"sinc_delta a={a}",
        )

    def berry_sequence(self, spec: BerrySpec) -> SuperoscFamily:
        return SuperoscFamily(
            band=spec.k0, target=self.berry_target(spec), index_kind=IndexKind.REAL,
            generator=lambda delta: self.berry_measure(spec, delta).measure,
            closed_form=lambda delta, z: self.berry_eval(spec, delta, z),
            label=f"berry {spec.symbol_k.label} a={spec.a}",
        )

    # Spec-driven front door

    def build_family(self, spec: FamilySpec) -> SuperoscFamily:
        construction = spec.construction
        if construction == Construction.STANDARD:
            return self.standard_sequence(self._target(spec))
        if construction == Construction.LAGRANGE:
            if "freqs" in spec.params:
                raise SpecParseError(detail="explicit freqs define a single element, not an indexed family")
            return self.lagrange_sequence(self._target(spec), spec.k0)
        if construction == Construction.MOMENT:
            return self.moment_sequence(self._density(spec), self._target(spec))
        if construction == Construction.SINC_DELTA:
            return self.sinc_delta_sequence(self._target(spec))
        if construction == Construction.BERRY:
            return self.berry_sequence(self._berry_spec(spec))
        raise SpecParseError(detail=f"construction '{construction.value}' is an evaluator, not an indexed family")

    def build_element(self, spec: FamilySpec, index: Optional[Any] = None) -> FamilyElement:
        construction = spec.construction
        if construction == Construction.STANDARD:
            return self.standard_family(self._target(spec), self._index(spec, index, "n", int))
        if construction == Construction.LAGRANGE:
            if "freqs" in spec.params:
                return self.lagrange_family(spec.params["freqs"], self._target(spec), spec.k0)
            n = self._index(spec, index, "n", int)
            return self.lagrange_family(self.equispaced_frequencies(n, spec.k0), self._target(spec), spec.k0)
        if construction == Construction.MOMENT:
            return self.build_moment(spec, index).element
        if construction == Construction.SINC_DELTA:
            return self.sinc_delta_family(self._target(spec), self._index(spec, index, "delta", float))
        if construction == Construction.BERRY:
            return self.berry_measure(self._berry_spec(spec), self._index(spec, index, "delta", float))
        raise SpecParseError(detail=f"construction '{construction.value}' has no measure")

    def build_moment(self, spec: FamilySpec, index: Optional[Any] = None) -> MomentFamilyResult:
        n = self._index(spec, index, "n", int)
        return self.moment_family(self._density(spec), n, self._target(spec))

    def build_evaluator(self, spec: FamilySpec, index: Optional[Any] = None) -> Evaluator:
        if spec.construction == Construction.PLANE_WAVE:
            ctx = self.numerics.ctx
            a = self.numerics.convert(self._target(spec), ctx)
            return lambda z: ctx.expj(a * self.numerics.convert(z, ctx))
        if spec.construction == Construction.INTERPOLATION:
            return self.build_interpolation(spec).evaluate
        element = self.build_element(spec, index)
        if element.closed_form is not None:
            return element.closed_form
        return lambda z: self.measures.eval_transform(element.measure, z)

    def build_interpolation(self, spec: FamilySpec) -> InterpolationResult:
        try:
            points, values = spec.params["points"], spec.params["values"]
        except KeyError as e:
            raise SpecParseError(detail=f"interpolation spec is missing params.{e.args[0]}")
        return self.sinc_interpolation(points, [self._complex_entry(v) for v in values])

    # Linear algebra

    def solve_linear(
        self,
        build: SystemBuilder,
        what: str,
        exact: Optional[Tuple[List[List[Any]], List[Any]]] = None,
        bits: Optional[int] = None,
    ) -> LinearSolution:
        """Exact sympy solve when `exact` is given, else LU at a precision keyed to the condition number."""
        bits = max(bits or self.numerics.bits, self.numerics.bits)
        if exact is not None:
            rows, rhs = exact
            try:
                solved = sympy.Matrix(rows).LUsolve(sympy.Matrix(rhs))
            except ValueError as e:
                raise SingularSystem(detail=f"{what}: {e}")
            solution = self._from_exact([sympy.expand(value) for value in solved], what, bits)
            ctx = self.numerics.ctx
            try:
                condition = float(ctx.cond(ctx.matrix([[self.numerics.convert(v, ctx) for v in row] for row in rows])))
            except ZeroDivisionError:
                condition = math.inf
            return solution.model_copy(update={"condition": condition})

        coefficients, condition = self._lu_solve(build, self.numerics.context(bits), what)
        needed = self.numerics.escalated_bits(math.log2(condition) if condition > 1 else 0.0, what)
        if needed > bits:
            bits = needed
            coefficients, condition = self._lu_solve(build, self.numerics.context(bits), what)
        logger.debug("%s solved at %d bits, condition %.3g", what, bits, condition)
        return LinearSolution(coefficients=coefficients, condition=condition, precision_bits=bits)

    def _lu_solve(self, build: SystemBuilder, ctx: MPContext, what: str) -> Tuple[Tuple[PrecisionComplex, ...], float]:
        rows, rhs = build(ctx)
        matrix = ctx.matrix(rows)
        try:
            solution = ctx.lu_solve(matrix, ctx.matrix(rhs))
            condition = ctx.cond(matrix)
        except ZeroDivisionError:
            raise SingularSystem(detail=f"{what} is numerically singular at {ctx.prec} bits")
        if condition > ctx.mpf(2) ** (ctx.prec - 8):
            raise SingularSystem(detail=f"{what} is numerically singular at {ctx.prec} bits",
                                 witness=f"condition {ctx.nstr(condition, 6)}")
        return tuple(ctx.mpc(solution[i]) for i in range(len(rows))), float(condition)

    def _from_exact(self, values: List[Any], what: str, bits: Optional[int] = None) -> LinearSolution:
        log2_max = self._log2_max([self.numerics.convert(v) for v in values])
        bits = max(bits or self.numerics.bits, self.numerics.escalated_bits(log2_max, what))
        ctx = self.numerics.context(bits)
        return LinearSolution(
            coefficients=tuple(ctx.mpc(self.numerics.convert(v, ctx)) for v in values),
            exact_coefficients=tuple(values),
            precision_bits=bits,
        )

    # Internals

    def _check_frequencies(self, freqs: Sequence[Any], k0: Optional[Any]) -> float:
        """Distinctness within merge tolerance and containment in the band; returns the band."""
        if not freqs:
            raise HypothesisViolation(detail="at least one frequency is required")
        magnitudes = [abs(float(k)) for k in freqs]
        band = float(k0) if k0 is not None else max(max(magnitudes), self.numerics.tolerance())
        if max(magnitudes) > band * (1 + self.numerics.tolerance()):
            raise HypothesisViolation(detail=f"frequency {max(magnitudes)} lies outside the band [-{band}, {band}]")
        exact = all_exact(list(freqs))
        if exact is not None:
            if len(set(exact)) != len(exact):
                raise DuplicateFrequency(detail="frequencies must be pairwise distinct",
                                         witness=[str(k) for k in exact if exact.count(k) > 1][0])
            return band
        ctx = self.numerics.ctx
        ordered = sorted(ctx.re(self.numerics.convert(k, ctx)) for k in freqs)
        tolerance = ctx.mpf(2) ** (-self.numerics.bits // 2) * max(band, 1)
        for left, right in zip(ordered, ordered[1:]):
            if right - left < tolerance:
                raise DuplicateFrequency(detail="frequencies coincide within the merge tolerance",
                                         witness=ctx.nstr(left, 12))
        return band

    def _check_nonnegative(self, h: DensityMeasure, samples: int = 257) -> None:
        ctx = self.numerics.ctx
        lower, upper = h.support
        step = (ctx.mpf(upper) - lower) / (samples - 1)
        for i in range(samples):
            k = lower + step * i
            value = ctx.convert(h.density(ctx, k))
            if ctx.im(value) != 0 or ctx.re(value) < 0:
                raise HypothesisViolation(detail=f"weight {h.label} is not nonnegative",
                                          witness=f"h({ctx.nstr(k, 8)}) = {ctx.nstr(value, 8)}")

    def _value_at_ia(self, symbol: EntireSymbol, a: float) -> PrecisionComplex:
        ctx = self.numerics.ctx
        if symbol.value_at_ia is not None:
            return ctx.mpc(symbol.value_at_ia(ctx, a))
        return ctx.mpc(symbol.eval(ctx, ctx.mpc(0, a)))

    def _berry_bits(self, spec: BerrySpec, delta: float) -> int:
        # the Gaussian peaks at e^{a^2/(2 delta^2)} while F_delta stays O(1)
        return self.numerics.escalated_bits(spec.a ** 2 / (2 * delta ** 2) / math.log(2), f"berry delta={delta}")

    def _berry_weight(self, spec: BerrySpec, delta: float) -> Callable[[MPContext, Any], Any]:
        symbol_g = spec.symbol_g

        def weight(ctx: MPContext, u: Any) -> Any:
            delta_mp = ctx.mpf(delta)
            shifted = ctx.mpc(u, -spec.a)
            gaussian = ctx.exp(-shifted ** 2 / (2 * delta_mp ** 2)) / (delta_mp * ctx.sqrt(2 * ctx.pi))
            return symbol_g.eval(ctx, u) * gaussian

        return weight

    @staticmethod
    def _berry_breakpoints(spec: BerrySpec) -> List[float]:
        cutoffs = {s.cutoff for s in (spec.symbol_k, spec.symbol_g) if s.cutoff is not None}
        return sorted([c for c in cutoffs] + [-c for c in cutoffs])

    @staticmethod
    def _berry_panels(spec: BerrySpec, delta: float, radius: float, z_modulus: float) -> int:
        # about two oscillations of e^{iau/delta^2} e^{ik(u)z} per panel
        frequency = spec.a / delta ** 2 + spec.k0 * z_modulus
        return max(4, math.ceil(2 * radius * frequency / (4 * math.pi)))

    def _standard_log2_max(self, a: float, n: int) -> float:
        """log2 max_j |C_j(n)|, the n log2 kappa2 of the escalation rule (not measured_kappas' kappa2)."""
        plus, minus = abs(1 + a) / 2, abs(1 - a) / 2
        return max(
            (math.lgamma(n + 1) - math.lgamma(j + 1) - math.lgamma(n - j + 1)) / math.log(2)
            + (n - j) * math.log2(plus) + j * math.log2(minus)
            for j in range(n + 1)
        )

    def _log2_max(self, values: Sequence[Any]) -> float:
        ctx = self.numerics.ctx
        magnitudes = [abs(ctx.convert(v)) for v in values]
        nonzero = [m for m in magnitudes if m != 0]
        if not nonzero:
            return 0.0
        return float(ctx.log(max(nonzero), 2))

    # Spec helpers

    @staticmethod
    def _target(spec: FamilySpec) -> Any:
        if spec.a is None:
            raise SpecParseError(detail=f"{spec.construction.value} spec needs a target 'a'")
        return spec.a

    @staticmethod
    def _index(spec: FamilySpec, index: Optional[Any], key: str, cast: Callable[[Any], Any]) -> Any:
        value = index if index is not None else spec.params.get(key)
        if value is None:
            raise SpecParseError(detail=f"{spec.construction.value} spec needs params.{key} or an index")
        try:
            return cast(value)
        except (TypeError, ValueError):
            raise SpecParseError(detail=f"params.{key}={value!r} is not a valid index")

    def _density(self, spec: FamilySpec) -> DensityMeasure:
        document = spec.params.get("density", {"builtin": "uniform"})
        if "builtin" not in document:
            raise SpecParseError(detail="moment spec density needs a 'builtin' name")
        return self.measures.builtin_density(document["builtin"], document.get("params", {}))

    def _berry_spec(self, spec: FamilySpec) -> BerrySpec:
        params = spec.params
        a = float(self._target(spec))
        if "k" not in params:
            raise SpecParseError(detail="berry spec needs a frequency symbol params.k")
        symbol_k = self.symbols.from_spec(params["k"], a=a)
        symbol_g = self.symbols.from_spec(params["g"], a=a) if "g" in params else None
        return self.berry_spec(symbol_k, a, symbol_g=symbol_g, b=params.get("b"), k0=float(spec.k0),
                               growth=float(params.get("growth", 0)))

    def _complex_entry(self, value: Any) -> Any:
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise SpecParseError(detail=f"value {value!r} is not a [re, im] pair")
            return tuple(value)
        return value


def get_family_service(
    numerics: Optional[NumericsService] = None,
    measures: Optional[MeasureService] = None,
) -> FamilyService:
    numerics = numerics or get_numerics_service()
    measures = measures or get_measure_service(numerics)
    return FamilyService(numerics, measures.quadrature, measures, measures.symbols)
