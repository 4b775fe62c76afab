import logging
from typing import Any, Callable, Iterable, List, Optional

from mpmath.ctx_mp import MPContext

from schemas.superoscillation import PrecisionComplex, QuadratureRule, QuadratureSpec
from services.exceptions import QuadratureNonConvergence
from services.numerics_service import NumericsService, get_numerics_service

logger = logging.getLogger(__name__)

# integrand(ctx, k) -> value
Integrand = Callable[[MPContext, Any], Any]


class QuadratureService:
    """Adaptive panel quadrature on top of mpmath's Gauss-Legendre and tanh-sinh nodes.

    Panels are doubled until mpmath's error estimate meets
    max(abs_tol, rel_tol * |I|) or the panel budget runs out. Panel storage is
    per call, so one instance can serve concurrent callers.
    """

    def __init__(self, numerics: NumericsService, spec: Optional[QuadratureSpec] = None):
        self.numerics = numerics
        self.spec = spec or QuadratureSpec()

    def integrate(
        self,
        integrand: Integrand,
        lower: Any,
        upper: Any,
        spec: Optional[QuadratureSpec] = None,
        breakpoints: Iterable[Any] = (),
        bits: Optional[int] = None,
        initial_panels: Optional[int] = None,
    ) -> PrecisionComplex:
        spec = spec or self.spec
        ctx = self.numerics.context(bits)
        lower, upper = ctx.mpf(lower), ctx.mpf(upper)
        if lower == upper:
            return ctx.mpc(0)
        cuts = sorted({ctx.mpf(b) for b in breakpoints if lower < ctx.mpf(b) < upper})
        panels = max(initial_panels or spec.initial_panels, len(cuts) + 1)

        while True:
            points = self._panel_points(ctx, lower, upper, panels, cuts)
            value, error = ctx.quad(lambda k: integrand(ctx, k), points, method=spec.rule.mp_method, error=True)
            if ctx.isnan(value) or ctx.isinf(value):
                raise QuadratureNonConvergence(
                    detail=f"integrand is not finite on [{ctx.nstr(lower, 8)}, {ctx.nstr(upper, 8)}]",
                )
            tolerance = max(ctx.mpf(spec.abs_tol), spec.rel_tol * abs(value))
            if error <= tolerance:
                return ctx.mpc(value)
            if panels * 2 > spec.max_panels:
                raise QuadratureNonConvergence(
                    detail=f"{spec.max_panels} panels exhausted before tolerance {spec.rel_tol:g}",
                    witness=f"error estimate {ctx.nstr(error, 6)}",
                )
            panels *= 2
            logger.debug("quadrature error %s above %s, doubling to %d panels",
                         ctx.nstr(error, 4), ctx.nstr(tolerance, 4), panels)

    def integrate_chebyshev(
        self,
        integrand: Integrand,
        alpha: Any,
        beta: Any,
        spec: Optional[QuadratureSpec] = None,
        bits: Optional[int] = None,
    ) -> PrecisionComplex:
        """int_alpha^beta g(k) / sqrt((beta-k)(k-alpha)) dk via k = c + r cos(theta).

        The substitution turns the weight into d(theta) on [0, pi] and removes the
        endpoint singularities.
        """
        spec = (spec or self.spec).model_copy(update={"rule": QuadratureRule.CHEBYSHEV})
        ctx = self.numerics.context(bits)
        center = (ctx.mpf(alpha) + ctx.mpf(beta)) / 2
        radius = (ctx.mpf(beta) - ctx.mpf(alpha)) / 2

        def substituted(inner_ctx: MPContext, theta: Any) -> Any:
            return integrand(inner_ctx, center + radius * inner_ctx.cos(theta))

        return self.integrate(substituted, 0, ctx.pi, spec=spec, bits=bits)

    @staticmethod
    def _panel_points(ctx: MPContext, lower: Any, upper: Any, panels: int, cuts: List[Any]) -> List[Any]:
        edges = [lower] + list(cuts) + [upper]
        width = (upper - lower) / panels
        points = [lower]
        for left, right in zip(edges, edges[1:]):
            pieces = max(1, int(ctx.ceil((right - left) / width)))
            step = (right - left) / pieces
            points.extend(left + step * i for i in range(1, pieces))
            points.append(right)
        return points


def get_quadrature_service(
    numerics: Optional[NumericsService] = None,
    spec: Optional[QuadratureSpec] = None,
) -> QuadratureService:
    return QuadratureService(numerics or get_numerics_service(), spec)


if __name__ == "__main__":
    quadrature = get_quadrature_service()
    print(quadrature.integrate(lambda ctx, k: k ** 2 / 2, -1, 1))
    print(quadrature.integrate_chebyshev(lambda ctx, k: ctx.log(ctx.mpf(1) / 2), -1, 1))
