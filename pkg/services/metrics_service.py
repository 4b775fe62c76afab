import logging
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import sympy

from schemas.superoscillation import (
    BorelMeasure,
    ConvergenceReport,
    DiscreteMeasure,
    GridDescription,
    IndexKind,
    PrecisionComplex,
    PrecisionReal,
    SuperoscFamily,
    Verdict,
)
from services.exceptions import DuplicateFrequency, HypothesisViolation, NearZeroSignal
from services.measure_service import MeasureService, get_measure_service
from services.numerics_service import NumericsService, as_exact, digits_for_bits, get_numerics_service

logger = logging.getLogger(__name__)

Evaluator = Callable[[Any], Any]

MAX_TAYLOR_ORDER = 12


class MetricsService:
    def __init__(self, numerics: NumericsService, measures: MeasureService):
        self.numerics = numerics
        self.measures = measures

    def grid_points(self, grid: GridDescription) -> List[PrecisionComplex]:
        """z = r e^{i theta}: r = 0 plus r_max / 2^{n_radii-1} ... r_max, theta equispaced."""
        ctx = self.numerics.ctx
        points = [ctx.mpc(0)]
        for i in range(grid.n_radii):
            radius = ctx.mpf(grid.r_max) / 2 ** (grid.n_radii - 1 - i)
            points.extend(radius * ctx.expjpi(ctx.mpf(2 * m) / grid.n_angles) for m in range(grid.n_angles))
        return points

    def a1_distance(
        self,
        f: Evaluator,
        g: Evaluator,
        B: float,
        r_max: float = 4.0,
        n_radii: int = 6,
        n_angles: int = 16,
    ) -> float:
        """Grid estimate of sup_z |F(z) - G(z)| e^{-B|z|}; a lower bound on the true supremum."""
        if B < 0:
            raise HypothesisViolation(detail=f"B must be nonnegative, got {B}")
        grid = GridDescription(r_max=r_max, n_radii=n_radii, n_angles=n_angles)
        ctx = self.numerics.ctx
        best = ctx.mpf(0)
        for z in self.grid_points(grid):
            difference = abs(ctx.convert(f(z)) - ctx.convert(g(z))) * ctx.exp(-B * abs(z))
            best = max(best, difference)
        return float(best)

    def exact_taylor_defect(self, m: BorelMeasure, a: Any, l: int) -> Optional[Any]:
        moment = self.measures.exact_moment(m, l)
        a_exact = as_exact(a)
        if moment is None or a_exact is None:
            return None
        return sympy.expand(sympy.I ** l * moment - (sympy.I * a_exact) ** l)

    def taylor_defect(self, m: BorelMeasure, a: Any, l: int) -> PrecisionComplex:
        """F^(l)(0) - (ia)^l computed from the l-th moment."""
        if l < 0:
            raise HypothesisViolation(detail=f"order must be nonnegative, got {l}")
        exact = self.exact_taylor_defect(m, a, l)
        ctx = self.numerics.context(getattr(m, "precision_bits", None))
        if exact is not None:
            return ctx.mpc(self.numerics.convert(exact, ctx))
        moment = ctx.mpc(self.measures.moment(m, l))
        a_mp = self.numerics.convert(a, ctx)
        return ctx.mpc(0, 1) ** l * moment - (ctx.mpc(0, 1) * a_mp) ** l

    def theorem41_bound(self, kappa1: Any, kappa2: Any, n: int, a: Any, z: Any) -> PrecisionReal:
        """((n+1) k^n + 1) / (k (1+k)^n) e^{|a|(1+k)|z|} with k = kappa1 kappa2."""
        if kappa1 <= 0 or kappa2 <= 0:
            raise HypothesisViolation(detail="kappa1 and kappa2 must be positive")
        ctx = self.numerics.ctx
        kappa = ctx.mpf(kappa1) * ctx.mpf(kappa2)
        modulus = abs(self.numerics.convert(z, ctx))
        prefactor = ((n + 1) * kappa ** n + 1) / (kappa * (1 + kappa) ** n)
        return prefactor * ctx.exp(abs(ctx.mpf(a)) * (1 + kappa) * modulus)

    def growth_bound(self, kappa1: Any, kappa2: Any, n: int, k0: Any, z: Any) -> PrecisionReal:
        """(n+1) (kappa1 kappa2)^n e^{k0 |z|}, the a priori size of F_n(z)."""
        ctx = self.numerics.ctx
        modulus = abs(self.numerics.convert(z, ctx))
        return (n + 1) * (ctx.mpf(kappa1) * ctx.mpf(kappa2)) ** n * ctx.exp(ctx.mpf(k0) * modulus)

    def measured_kappas(self, m: BorelMeasure) -> Tuple[float, float]:
        """kappa1 = 1 and kappa2 = (max_j |C_j|)^{1/n} for point masses.

        This is the per-index rate. The escalation rule and single-element
        theorem41_bound checks use max_j |C_j| itself, i.e. kappa2^n.
        """
        if not isinstance(m, DiscreteMeasure):
            raise HypothesisViolation(detail="growth constants are only measured for point-mass families")
        ctx = self.numerics.context(m.precision_bits)
        largest = max(abs(atom.weight) for atom in m.atoms)
        n = max(m.degree, 1)
        return 1.0, float(largest ** (ctx.mpf(1) / n))

    def separation_kappa(self, freqs_per_n: Mapping[int, Sequence[Any]], n_max: int) -> float:
        """min over n <= n_max and j of (prod_{l != j} |k_l - k_j|)^{1/n}."""
        ctx = self.numerics.ctx
        best = None
        for n, freqs in sorted(freqs_per_n.items()):
            if n > n_max or len(freqs) < 2:
                continue
            ks = [ctx.re(self.numerics.convert(k, ctx)) for k in freqs]
            degree = len(ks) - 1
            for j, kj in enumerate(ks):
                product = ctx.fprod(abs(kl - kj) for l, kl in enumerate(ks) if l != j)
                if product == 0:
                    raise DuplicateFrequency(detail=f"repeated frequency at n={n}", witness=ctx.nstr(kj, 12))
                value = product ** (ctx.mpf(1) / degree)
                best = value if best is None else min(best, value)
        if best is None:
            raise HypothesisViolation(detail=f"no frequency list with n in [1, {n_max}]")
        return float(best)

    def local_wavenumber(self, f: Evaluator, x: Any, h: Any) -> float:
        """Im[(F(x+h) - F(x-h)) / (2h F(x))], the central-difference Im (log F)'."""
        ctx = self.numerics.ctx
        x, h = ctx.mpf(x), ctx.mpf(h)
        if h <= 0:
            raise HypothesisViolation(detail=f"local wavenumber step must be positive, got {ctx.nstr(h, 8)}")
        value = ctx.convert(f(x))
        derivative = (ctx.convert(f(x + h)) - ctx.convert(f(x - h))) / (2 * h)
        if abs(value) <= 10 * h * abs(derivative):
            raise NearZeroSignal(detail=f"|F| too small for a local wavenumber at x={ctx.nstr(x, 12)}",
                                 witness=ctx.nstr(value, 8))
        return float(ctx.im(derivative / value))

    def convergence_report(
        self,
        family: SuperoscFamily,
        indices: Sequence[Any],
        B: Optional[float] = None,
        grid: Optional[GridDescription] = None,
        kappas: Optional[Tuple[float, float]] = None,
        defect_tolerance: float = 1e-12,
    ) -> ConvergenceReport:
        """A1 sup estimates, Taylor defects and a verdict over the given indices.

        bound_values, present when kappas are given for an integer-indexed family, holds
        theorem41_bound at z = 0. That prefactor also bounds |F_n(z) - e^{iaz}| e^{-B|z|}
        whenever B >= |a| (1 + kappa1 kappa2), the default B. It is reported for
        reference only and adds nothing to failed_checks.
        """
        if not indices:
            raise HypothesisViolation(detail="convergence report needs at least one index")
        grid = grid or GridDescription()
        if B is None:
            if kappas is None:
                raise HypothesisViolation(detail="B is required when kappa1 and kappa2 are unknown")
            B = abs(family.target) * (1 + kappas[0] * kappas[1])
        ctx = self.numerics.ctx
        amplitude = self.numerics.convert(family.target_amplitude, ctx)
        target = ctx.mpf(family.target)

        def plane_wave(z: Any) -> Any:
            return amplitude * ctx.expj(target * z)

        sup_estimates: List[float] = []
        taylor_defects: Optional[Dict[str, Dict[int, str]]] = None
        failed: List[str] = []
        integer_indexed = family.index_kind == IndexKind.INTEGER
        if integer_indexed:
            taylor_defects = {}

        for index in indices:
            if family.closed_form is not None:
                evaluator = lambda z, index=index: family.closed_form(index, z)
                measure = family.generator(index) if integer_indexed else None
            else:
                measure = family.generator(index)
                evaluator = lambda z, measure=measure: self.measures.eval_transform(measure, z)
            estimate = self.a1_distance(evaluator, plane_wave, B, grid.r_max, grid.n_radii, grid.n_angles)
            sup_estimates.append(estimate)
            logger.debug("%s index %s: sup estimate %.6g", family.label, index, estimate)

            if integer_indexed:
                row = {}
                for l in range(min(int(index), MAX_TAYLOR_ORDER) + 1):
                    defect = self.taylor_defect(measure, family.target, l)
                    row[l] = self._decimal(defect, getattr(measure, "precision_bits", self.numerics.bits))
                    scale = max(1.0, abs(family.target)) ** l
                    if family.taylor_matched and float(abs(defect)) > defect_tolerance * scale:
                        failed.append(f"taylor defect n={index} l={l}")
                taylor_defects[str(index)] = row

        bound_values = None
        if kappas is not None and integer_indexed:
            bound_values = [float(self.theorem41_bound(kappas[0], kappas[1], int(n), family.target, 0))
                            for n in indices]

        verdict = self._verdict(sup_estimates)
        if verdict != Verdict.DECREASING:
            failed.append(f"a1 estimates {verdict.value}")
        return ConvergenceReport(
            B=B, label=family.label, target=family.target, indices=list(indices),
            sup_estimates=sup_estimates, grid=grid, taylor_defects=taylor_defects,
            bound_values=bound_values, verdict=verdict, failed_checks=failed,
        )

    @staticmethod
    def _verdict(estimates: Sequence[float]) -> Verdict:
        if len(estimates) < 2:
            return Verdict.INCONCLUSIVE
        if all(later < earlier for earlier, later in zip(estimates, estimates[1:])):
            return Verdict.DECREASING
        return Verdict.NON_DECREASING

    def _decimal(self, value: PrecisionComplex, bits: int) -> str:
        ctx = self.numerics.context(bits)
        value = ctx.mpc(value)
        digits = digits_for_bits(bits)
        if value.imag == 0:
            return ctx.nstr(value.real, digits)
        return f"{ctx.nstr(value.real, digits)}{'+' if value.imag >= 0 else '-'}{ctx.nstr(abs(value.imag), digits)}j"


def get_metrics_service(
    numerics: Optional[NumericsService] = None,
    measures: Optional[MeasureService] = None,
) -> MetricsService:
    numerics = numerics or get_numerics_service()
    return MetricsService(numerics, measures or get_measure_service(numerics))
