import logging
import math
from typing import Any, Dict, Optional, Tuple, Union

from mpmath.ctx_mp import MPContext

from schemas.superoscillation import (
    BorelMeasure,
    EntireSymbol,
    PrecisionComplex,
    PrecisionReal,
    PropagatedMeasure,
    SuperoscFamily,
)
from services.exceptions import HypothesisViolation, StencilOverflow
from services.measure_service import MeasureService, get_measure_service
from services.numerics_service import NumericsService, get_numerics_service

logger = logging.getLogger(__name__)

MAX_STENCIL_DEGREE = 8
MAX_STENCIL_MODULUS = 1e8


class EvolutionService:
    """Spectral propagator e^{iH(k)t} and the two derived families built from it.

    H(-i d/dz) is never applied as an operator series; every action goes through
    the weight e^{iH(k)t} on the spectral measure.
    """

    def __init__(self, numerics: NumericsService, measures: MeasureService):
        self.numerics = numerics
        self.measures = measures

    def propagate(
        self,
        m: Union[BorelMeasure, PropagatedMeasure],
        symbol: EntireSymbol,
        t: Any,
    ) -> PropagatedMeasure:
        """U_t applied to the transform of m; repeated propagation by one symbol adds the times."""
        ctx = self.numerics.ctx
        base, time = m, ctx.mpc(self.numerics.convert(t, ctx))
        if isinstance(m, PropagatedMeasure):
            if m.weight_symbol is symbol or (m.weight_symbol.spec is not None
                                             and m.weight_symbol.spec == symbol.spec):
                base, time = m.base, m.time + time
            else:
                base = m.measure
        numerics = self.numerics

        def phase(inner: MPContext, k: Any) -> Any:
            exponent = inner.convert(symbol.eval(inner, k)) * inner.convert(time)
            numerics.check_exponent(inner.im(exponent), f"e^(iH(k)t) with {symbol.label}")
            return inner.expj(exponent)

        measure = base if time == 0 else self.measures.reweight(base, phase)
        return PropagatedMeasure(base=base, weight_symbol=symbol, time=time, measure=measure)

    def evaluate(self, propagated: PropagatedMeasure, z: Any) -> PrecisionComplex:
        return self.measures.eval_transform(propagated.measure, z)

    def family_one(self, m: BorelMeasure, symbol: EntireSymbol, a: Any) -> BorelMeasure:
        """Weights e^{H(k) - H(a)}, i.e. U_{-i} normalized by its action on the limit wave."""
        ctx = self.numerics.ctx
        at_target = ctx.convert(symbol.eval(ctx, self.numerics.convert(a, ctx)))
        numerics = self.numerics

        def weight(inner: MPContext, k: Any) -> Any:
            exponent = inner.convert(symbol.eval(inner, k)) - inner.convert(at_target)
            numerics.check_exponent(inner.re(exponent), f"e^(H(k)-H(a)) with {symbol.label}")
            return inner.exp(exponent)

        return self.measures.reweight(m, weight)

    def family_two(self, m: BorelMeasure, symbol: EntireSymbol, a: Any) -> BorelMeasure:
        """Pushforward of m by H onto [-h0, h0]; the limit wave becomes e^{iH(a)z}."""
        h0 = symbol.band_image_bound
        if h0 is None:
            raise HypothesisViolation(detail=f"{symbol.label} needs a band image bound h0 for the second family")
        target = self.derived_target(symbol, a)
        if abs(target) <= h0:
            raise HypothesisViolation(detail=f"H(a)={target:.12g} lies inside [-{h0}, {h0}]")
        return self.measures.pushforward(m, symbol, h0)

    def derived_target(self, symbol: EntireSymbol, a: Any) -> float:
        ctx = self.numerics.ctx
        value = ctx.convert(symbol.eval(ctx, self.numerics.convert(a, ctx)))
        if abs(ctx.im(value)) > self.numerics.tolerance() * max(1, abs(value)):
            raise HypothesisViolation(detail=f"H(a) is not real for {symbol.label}", witness=ctx.nstr(value, 12))
        return float(ctx.re(value))

    def pde_residual(
        self,
        m: BorelMeasure,
        symbol: EntireSymbol,
        t: Any,
        z: Any,
        step: Any,
    ) -> PrecisionReal:
        """|i d/dt Psi + H(-i d/dz) Psi| with central differences, Psi(t, z) = U_t F(z)."""
        degree = symbol.degree
        if degree is None:
            raise HypothesisViolation(detail=f"{symbol.label} has no polynomial coefficients")
        if degree > MAX_STENCIL_DEGREE:
            raise HypothesisViolation(detail=f"stencils support degree <= {MAX_STENCIL_DEGREE}, got {degree}")
        step = float(step)
        if step <= 0:
            raise HypothesisViolation(detail=f"step must be positive, got {step}")

        # order-l differences cancel about l*log2(1/step) bits
        bits = self.numerics.escalated_bits(max(degree, 1) * math.log2(1 / step) if step < 1 else 0.0,
                                            "pde stencil")
        ctx = self.numerics.context(bits)
        z = ctx.mpc(self.numerics.convert(z, ctx))
        if abs(z) > MAX_STENCIL_MODULUS:
            raise StencilOverflow(detail=f"|z|={float(abs(z)):.6g} is too large for finite-difference stencils")
        t = ctx.mpc(self.numerics.convert(t, ctx))
        s = ctx.mpf(step)
        m = self._with_bits(m, bits)

        solutions: Dict[Any, PropagatedMeasure] = {}
        samples: Dict[Tuple[Any, Any], PrecisionComplex] = {}

        def psi(time: Any, point: Any) -> PrecisionComplex:
            if (time, point) not in samples:
                if time not in solutions:
                    solutions[time] = self.propagate(m, symbol, time)
                samples[(time, point)] = ctx.mpc(self.measures.eval_transform(solutions[time].measure, point))
            return samples[(time, point)]

        time_derivative = (psi(t + s, z) - psi(t - s, z)) / (2 * s)
        operator = ctx.mpc(0)
        for l, coefficient in enumerate(symbol.poly_coeffs):
            h_l = self.numerics.convert(coefficient, ctx)
            if h_l == 0:
                continue
            difference = ctx.fsum(
                (-1) ** k * ctx.binomial(l, k) * psi(t, z + (ctx.mpf(l) / 2 - k) * s) for k in range(l + 1)
            )
            operator += h_l * ctx.mpc(0, -1) ** l * difference / s ** l
        residual = abs(1j * time_derivative + operator)
        logger.debug("pde residual %s at step %g", ctx.nstr(residual, 6), step)
        return residual

    # Sequences

    def propagated_sequence(self, family: SuperoscFamily, symbol: EntireSymbol, t: Any) -> SuperoscFamily:
        """U_t F_n converges to e^{iH(a)t} e^{iaz}."""
        ctx = self.numerics.ctx
        time = self.numerics.convert(t, ctx)
        at_target = ctx.convert(symbol.eval(ctx, ctx.mpf(family.target)))
        amplitude = ctx.expj(at_target * time) * self.numerics.convert(family.target_amplitude, ctx)
        return SuperoscFamily(
            band=family.band, target=family.target, index_kind=family.index_kind,
            generator=lambda index: self.propagate(family.generator(index), symbol, t).measure,
            label=f"U_t {family.label} with {symbol.label}, t={t}",
            target_amplitude=amplitude,
        )

    def family_one_sequence(self, family: SuperoscFamily, symbol: EntireSymbol) -> SuperoscFamily:
        return SuperoscFamily(
            band=family.band, target=family.target, index_kind=family.index_kind,
            generator=lambda index: self.family_one(family.generator(index), symbol, family.target),
            label=f"first derived {family.label} with {symbol.label}",
            target_amplitude=family.target_amplitude,
        )

    def family_two_sequence(self, family: SuperoscFamily, symbol: EntireSymbol) -> SuperoscFamily:
        target = self.derived_target(symbol, family.target)
        if symbol.band_image_bound is None or abs(target) <= symbol.band_image_bound:
            raise HypothesisViolation(
                detail=f"H(a)={target:.12g} must lie outside [-h0, h0] with h0={symbol.band_image_bound}",
            )
        return SuperoscFamily(
            band=symbol.band_image_bound, target=target, index_kind=family.index_kind,
            generator=lambda index: self.family_two(family.generator(index), symbol, family.target),
            label=f"second derived {family.label} with {symbol.label}",
            target_amplitude=family.target_amplitude,
        )

    @staticmethod
    def _with_bits(m: BorelMeasure, bits: int) -> BorelMeasure:
        if hasattr(m, "precision_bits") and m.precision_bits < bits:
            return m.model_copy(update={"precision_bits": bits})
        return m


def get_evolution_service(
    numerics: Optional[NumericsService] = None,
    measures: Optional[MeasureService] = None,
) -> EvolutionService:
    numerics = numerics or get_numerics_service()
    return EvolutionService(numerics, measures or get_measure_service(numerics))
