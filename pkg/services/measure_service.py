import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import sympy
from mpmath.ctx_mp import MPContext

from schemas.superoscillation import (
    Atom,
    BorelMeasure,
    CompositeMeasure,
    DensityMeasure,
    DiscreteMeasure,
    EntireSymbol,
    PrecisionComplex,
    PrecisionReal,
    QuadratureSpec,
)
from services.exceptions import (
    HypothesisViolation,
    ImageBoundViolation,
    SpecParseError,
    UnknownDensity,
)
from services.numerics_service import NumericsService, as_exact, digits_for_bits, get_numerics_service
from services.quadrature_service import QuadratureService, get_quadrature_service
from services.symbol_service import SymbolService, get_symbol_service

logger = logging.getLogger(__name__)

# factor(ctx, k) -> value, integrated against a measure
Factor = Callable[[MPContext, Any], Any]

IMAGE_SAMPLES = 10_000
BUILTIN_DENSITIES = ("uniform", "monomial", "sinc_delta", "bessel_kernel")


class MeasureService:
    def __init__(self, numerics: NumericsService, quadrature: QuadratureService, symbols: SymbolService):
        self.numerics = numerics
        self.quadrature = quadrature
        self.symbols = symbols

    # Construction

    def discrete(
        self,
        atoms: Sequence[Tuple[Any, Any]],
        band: Any,
        bits: Optional[int] = None,
        exact: Optional[bool] = None,
    ) -> DiscreteMeasure:
        """Point masses (location, weight); exact rationals are kept alongside when available."""
        bits = max(bits or self.numerics.bits, self.numerics.bits)
        ctx = self.numerics.context(bits)
        band = float(band)
        built = []
        for location, weight in atoms:
            exact_location = as_exact(location) if exact is not False else None
            exact_weight = as_exact(weight) if exact is not False else None
            built.append(Atom(
                location=ctx.re(self.numerics.convert(location, ctx)),
                weight=ctx.mpc(self.numerics.convert(weight, ctx)),
                exact_location=exact_location,
                exact_weight=exact_weight,
            ))
        measure = DiscreteMeasure(band=band, atoms=tuple(built), precision_bits=bits)
        self._validate_discrete(measure)
        return measure

    def density(
        self,
        density: Callable[[MPContext, Any], Any],
        support: Tuple[Any, Any],
        band: Any,
        label: str = "density",
        bits: Optional[int] = None,
        breakpoints: Sequence[Any] = (),
        quadrature: Optional[QuadratureSpec] = None,
        builtin: Optional[str] = None,
        params: Optional[Dict[str, Any]] = None,
        exact_moment: Optional[Callable[[int], Any]] = None,
    ) -> DensityMeasure:
        alpha, beta = float(support[0]), float(support[1])
        band = float(band)
        if not -band <= alpha < beta <= band:
            raise HypothesisViolation(detail=f"density support [{alpha}, {beta}] is not inside [-{band}, {band}]")
        return DensityMeasure(
            band=band,
            support=(alpha, beta),
            density=density,
            quadrature=quadrature or self.quadrature.spec,
            breakpoints=tuple(float(b) for b in breakpoints),
            precision_bits=max(bits or self.numerics.bits, self.numerics.bits),
            label=label,
            builtin=builtin,
            params=params or {},
            exact_moment=exact_moment,
        )

    def composite(self, base: BorelMeasure, map: EntireSymbol, image_bound: Any) -> CompositeMeasure:
        return CompositeMeasure(band=float(image_bound), base=base, map=map, image_bound=float(image_bound))

    def builtin_density(self, name: str, params: Optional[Dict[str, Any]] = None) -> DensityMeasure:
        """Named densities that survive a JSON round-trip."""
        params = dict(params or {})
        numerics = self.numerics
        stored = {key: str(value) for key, value in params.items()}

        if name in ("uniform", "monomial"):
            c = params.get("c", sympy.Rational(1, 2) if name == "uniform" else 1)
            p = int(params.get("p", 0 if name == "uniform" else 2))
            k0 = params.get("k0", 1)
            exact_c, exact_k0 = as_exact(c), as_exact(k0)

            def monomial(ctx: MPContext, k: Any) -> Any:
                return numerics.convert(c, ctx) * k ** p

            def exact_moment(l: int) -> Any:
                power = p + l + 1
                return exact_c * (exact_k0 ** power - (-exact_k0) ** power) / power

            label = f"h(k)={c}" if p == 0 else f"h(k)={c}*k^{p}"
            return self.density(
                monomial, (-float(k0), float(k0)), float(k0), label=label,
                builtin=name, params=stored,
                exact_moment=exact_moment if exact_c is not None and exact_k0 is not None else None,
            )

        if name == "sinc_delta":
            a, delta = float(params["a"]), float(params["delta"])
            if a <= 1 or delta <= 0:
                raise HypothesisViolation(detail=f"sinc_delta density needs a > 1 and delta > 0, got a={a}, delta={delta}")
            # the integrand reaches e^{(a-1)/delta}/delta while the integral stays O(1)
            bits = numerics.escalated_bits((a - 1) / delta / math.log(2) + max(0.0, -math.log2(delta)),
                                           "sinc_delta density")

            def sinc_delta(ctx: MPContext, k: Any) -> Any:
                a_, delta_ = ctx.mpf(params["a"]), ctx.mpf(params["delta"])
                radial = ctx.sqrt(max((a_ ** 2 - 1) * (1 - k * k), 0)) / delta_
                return ctx.exp((a_ * k - 1) / delta_) * ctx.besselj(0, radial) / delta_

            return self.density(sinc_delta, (-1, 1), 1, label=f"sinc_delta(a={a}, delta={delta})",
                                bits=bits, builtin=name, params=stored)

        if name == "bessel_kernel":
            b = float(params["b"])

            def bessel_kernel(ctx: MPContext, k: Any) -> Any:
                return ctx.besselj(0, ctx.mpf(params["b"]) * ctx.sqrt(max(1 - k * k, 0))) / 2

            return self.density(bessel_kernel, (-1, 1), 1, label=f"J0({b}*sqrt(1-k^2))/2",
                                builtin=name, params=stored)

        raise UnknownDensity(detail=f"unknown density '{name}', expected one of {', '.join(BUILTIN_DENSITIES)}")

    # Operations

    def eval_transform(self, m: BorelMeasure, z: Any) -> PrecisionComplex:
        """F(z) = int e^{ikz} dm(k)."""
        ctx = self.numerics.context(self._bits(m))
        z = ctx.mpc(self.numerics.convert(z, ctx))
        self.numerics.check_exponent(m.band * abs(z.imag), "eval_transform")
        value = self._integrate(m, lambda c, k: c.expj(k * z))
        return self.numerics.ensure_finite(value, "eval_transform")

    def moment(self, m: BorelMeasure, l: int) -> PrecisionComplex:
        """int k^l dm(k), exact whenever the measure carries exact data."""
        exact = self.exact_moment(m, l)
        if exact is not None:
            return self.numerics.convert(exact, self.numerics.context(self._bits(m)))
        return self._integrate(m, lambda c, k: k ** l)

    def exact_moment(self, m: BorelMeasure, l: int) -> Optional[Any]:
        if isinstance(m, DiscreteMeasure) and m.is_exact:
            return sympy.expand(sum((atom.exact_weight * atom.exact_location ** l for atom in m.atoms),
                                    sympy.Integer(0)))
        if isinstance(m, DensityMeasure) and m.exact_moment is not None:
            return m.exact_moment(l)
        return None

    def total_variation(self, m: BorelMeasure) -> PrecisionReal:
        """Upper estimate of |m|([-k0, k0]); exact for discrete measures."""
        if isinstance(m, DiscreteMeasure):
            ctx = self.numerics.context(m.precision_bits)
            return ctx.fsum(abs(atom.weight) for atom in m.atoms)
        if isinstance(m, DensityMeasure):
            value = self.quadrature.integrate(
                lambda c, k: abs(m.density(c, k)), m.support[0], m.support[1],
                spec=m.quadrature, breakpoints=m.breakpoints, bits=m.precision_bits,
            )
            return value.real
        return self.total_variation(m.base)

    def pushforward(self, m: BorelMeasure, phi: EntireSymbol, image_bound: Any) -> BorelMeasure:
        """Image measure B -> m({k | phi(k) in B}) on [-h0, h0]."""
        h0 = float(image_bound)
        if h0 <= 0:
            raise HypothesisViolation(detail=f"image bound must be positive, got {h0}")
        if isinstance(m, DiscreteMeasure):
            ctx = self.numerics.context(m.precision_bits)
            slack = 1 + self.numerics.tolerance(m.precision_bits)
            moved = []
            for atom in m.atoms:
                image = ctx.convert(phi.eval(ctx, atom.location))
                if abs(ctx.im(image)) > self.numerics.tolerance(m.precision_bits) * max(1, abs(image)):
                    raise ImageBoundViolation(detail=f"{phi.label} maps a band frequency off the real line",
                                              witness=ctx.nstr(atom.location, 12))
                image = ctx.re(image)
                if abs(image) > h0 * slack:
                    raise ImageBoundViolation(detail=f"{phi.label} maps an atom outside [-{h0}, {h0}]",
                                              witness=f"k={ctx.nstr(atom.location, 12)} -> {ctx.nstr(image, 12)}")
                exact_image = self._exact_image(phi, atom.exact_location)
                moved.append(Atom(
                    location=image,
                    weight=atom.weight,
                    exact_location=exact_image,
                    exact_weight=atom.exact_weight if exact_image is not None else None,
                ))
            merged = self.merge_atoms(moved, h0, m.precision_bits)
            return DiscreteMeasure(band=h0, atoms=tuple(merged), precision_bits=m.precision_bits)

        lower, upper = m.support if isinstance(m, DensityMeasure) else (-m.band, m.band)
        self._check_sampled_image(phi, lower, upper, h0)
        return self.composite(m, phi, h0)

    def reweight(self, m: BorelMeasure, factor: Factor) -> BorelMeasure:
        """The measure factor(k) dm(k)."""
        if isinstance(m, DiscreteMeasure):
            ctx = self.numerics.context(m.precision_bits)
            atoms = tuple(
                Atom(location=atom.location, weight=self.numerics.ensure_finite(
                    ctx.mpc(atom.weight * factor(ctx, atom.location)), "reweighted atom"))
                for atom in m.atoms
            )
            return DiscreteMeasure(band=m.band, atoms=atoms, precision_bits=m.precision_bits)
        if isinstance(m, DensityMeasure):
            density = m.density
            return m.model_copy(update={
                "density": lambda ctx, k: density(ctx, k) * factor(ctx, k),
                "label": f"reweighted {m.label}",
                "builtin": None,
                "exact_moment": None,
            })
        phi = m.map
        base = self.reweight(m.base, lambda ctx, u: factor(ctx, ctx.re(phi.eval(ctx, u))))
        return m.model_copy(update={"base": base})

    def merge_atoms(self, atoms: Sequence[Atom], band: float, bits: int) -> List[Atom]:
        """Sort by location and merge atoms closer than 2^{-bits/2} * band; weights add."""
        ctx = self.numerics.context(bits)
        tolerance = ctx.mpf(2) ** (-bits // 2) * band
        merged: List[Atom] = []
        for atom in sorted(atoms, key=lambda item: item.location):
            if merged and abs(atom.location - merged[-1].location) < tolerance:
                previous = merged[-1]
                exact_weight = None
                if previous.is_exact and atom.is_exact and previous.exact_location == atom.exact_location:
                    exact_weight = previous.exact_weight + atom.exact_weight
                merged[-1] = Atom(
                    location=previous.location,
                    weight=previous.weight + atom.weight,
                    exact_location=previous.exact_location if exact_weight is not None else None,
                    exact_weight=exact_weight,
                )
            else:
                merged.append(atom)
        return merged

    def combine(self, measures: Sequence[BorelMeasure], coefficients: Sequence[Any]) -> Optional[BorelMeasure]:
        """sum_j C_j mu_j when the measures share a representation, else None."""
        if all(isinstance(m, DiscreteMeasure) for m in measures):
            bits = max(m.precision_bits for m in measures)
            ctx = self.numerics.context(bits)
            atoms = [
                Atom(location=atom.location, weight=ctx.mpc(self.numerics.convert(c, ctx) * atom.weight))
                for m, c in zip(measures, coefficients) for atom in m.atoms
            ]
            band = max(m.band for m in measures)
            return DiscreteMeasure(band=band, atoms=tuple(self.merge_atoms(atoms, band, bits)), precision_bits=bits)
        if all(isinstance(m, DensityMeasure) for m in measures) and len({m.support for m in measures}) == 1:
            pieces = list(zip(measures, coefficients))
            numerics = self.numerics

            def combined(ctx: MPContext, k: Any) -> Any:
                return ctx.fsum(numerics.convert(c, ctx) * m.density(ctx, k) for m, c in pieces)

            first = measures[0]
            return self.density(combined, first.support, max(m.band for m in measures), label="combined density",
                                bits=max(m.precision_bits for m in measures), breakpoints=first.breakpoints,
                                quadrature=first.quadrature)
        return None

    def atom_rows(self, m: DiscreteMeasure) -> List[Tuple[PrecisionReal, PrecisionComplex]]:
        return [(atom.location, atom.weight) for atom in m.atoms]

    # Serialization

    def to_document(self, m: BorelMeasure) -> Dict[str, Any]:
        if isinstance(m, DiscreteMeasure):
            ctx = self.numerics.context(m.precision_bits)
            digits = digits_for_bits(m.precision_bits)
            document = {
                "variant": "discrete",
                "band": repr(m.band),
                "precision_bits": m.precision_bits,
                "atoms": [
                    [ctx.nstr(atom.location, digits), ctx.nstr(atom.weight.real, digits),
                     ctx.nstr(atom.weight.imag, digits)]
                    for atom in m.atoms
                ],
            }
            if m.is_exact:
                document["exact_atoms"] = [
                    [str(atom.exact_location), str(sympy.re(atom.exact_weight)), str(sympy.im(atom.exact_weight))]
                    for atom in m.atoms
                ]
            return document
        if isinstance(m, DensityMeasure):
            if m.builtin is None:
                raise UnknownDensity(detail=f"density '{m.label}' has no builtin name and cannot be serialized")
            return {
                "variant": "density",
                "builtin": m.builtin,
                "params": dict(m.params),
                "support": [repr(m.support[0]), repr(m.support[1])],
                "band": repr(m.band),
            }
        if m.map.spec is None:
            raise UnknownDensity(detail=f"map '{m.map.label}' has no spec and cannot be serialized")
        return {
            "variant": "composite",
            "base": self.to_document(m.base),
            "map": dict(m.map.spec),
            "image_bound": repr(m.image_bound),
        }

    def from_document(self, document: Dict[str, Any]) -> BorelMeasure:
        try:
            variant = document["variant"]
            if variant == "discrete":
                bits = int(document.get("precision_bits", self.numerics.bits))
                ctx = self.numerics.context(bits)
                if "exact_atoms" in document:
                    atoms = [
                        (sympy.Rational(loc), sympy.Rational(re) + sympy.I * sympy.Rational(im))
                        for loc, re, im in document["exact_atoms"]
                    ]
                    return self.discrete(atoms, document["band"], bits=bits)
                atoms = [(ctx.mpf(loc), ctx.mpc(re, im)) for loc, re, im in document["atoms"]]
                return self.discrete(atoms, document["band"], bits=bits, exact=False)
            if variant == "density":
                return self.builtin_density(document["builtin"], document.get("params", {}))
            if variant == "composite":
                base = self.from_document(document["base"])
                symbol = self.symbols.from_spec(document["map"])
                return self.composite(base, symbol, document["image_bound"])
        except (KeyError, TypeError, ValueError) as e:
            raise SpecParseError(detail=f"malformed measure document: {e}")
        raise SpecParseError(detail=f"unknown measure variant {document.get('variant')!r}")

    # Internals

    def _integrate(self, m: BorelMeasure, factor: Factor) -> PrecisionComplex:
        if isinstance(m, DiscreteMeasure):
            ctx = self.numerics.context(m.precision_bits)
            return ctx.mpc(ctx.fsum(atom.weight * factor(ctx, atom.location) for atom in m.atoms))
        if isinstance(m, DensityMeasure):
            density = m.density
            return self.quadrature.integrate(
                lambda ctx, k: density(ctx, k) * factor(ctx, k), m.support[0], m.support[1],
                spec=m.quadrature, breakpoints=m.breakpoints, bits=m.precision_bits,
            )
        phi = m.map
        return self._integrate(m.base, lambda ctx, u: factor(ctx, ctx.re(phi.eval(ctx, u))))

    def _bits(self, m: BorelMeasure) -> int:
        if isinstance(m, CompositeMeasure):
            return self._bits(m.base)
        return m.precision_bits

    def _validate_discrete(self, m: DiscreteMeasure) -> None:
        slack = 1 + self.numerics.tolerance(m.precision_bits)
        for atom in m.atoms:
            if abs(atom.location) > m.band * slack:
                raise HypothesisViolation(
                    detail=f"atom location {float(atom.location):.12g} lies outside the band [-{m.band}, {m.band}]",
                )

    def _check_sampled_image(self, phi: EntireSymbol, lower: float, upper: float, h0: float) -> None:
        ctx = self.numerics.ctx
        step = (ctx.mpf(upper) - lower) / (IMAGE_SAMPLES - 1)
        slack = 1 + self.numerics.tolerance()
        for i in range(IMAGE_SAMPLES):
            k = lower + step * i
            image = ctx.convert(phi.eval(ctx, k))
            if abs(image) > h0 * slack:
                raise ImageBoundViolation(
                    detail=f"{phi.label} leaves [-{h0}, {h0}] on the support",
                    witness=f"k={ctx.nstr(k, 12)} -> {ctx.nstr(image, 12)}",
                )

    @staticmethod
    def _exact_image(phi: EntireSymbol, location: Optional[Any]) -> Optional[Any]:
        if location is None or phi.poly_coeffs is None:
            return None
        coeffs = [as_exact(c) for c in phi.poly_coeffs]
        if any(c is None for c in coeffs):
            return None
        return sympy.expand(sum((c * location ** l for l, c in enumerate(coeffs)), sympy.Integer(0)))


def get_measure_service(
    numerics: Optional[NumericsService] = None,
    quadrature_spec: Optional[QuadratureSpec] = None,
) -> MeasureService:
    numerics = numerics or get_numerics_service()
    return MeasureService(numerics, get_quadrature_service(numerics, quadrature_spec), get_symbol_service(numerics))
