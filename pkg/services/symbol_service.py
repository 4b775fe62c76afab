import logging
import math
from typing import Any, Dict, Optional, Sequence

from mpmath.ctx_mp import MPContext

from schemas.superoscillation import EntireSymbol
from services.exceptions import HypothesisViolation, SpecParseError, UnknownSymbol
from services.numerics_service import NumericsService, get_numerics_service

logger = logging.getLogger(__name__)

BUILTIN_SYMBOLS = ("k1", "k2", "k3", "k4", "k5", "g5", "const1")


def _is_real_outside(ctx: MPContext, u: Any, cutoff: float) -> bool:
    u = ctx.convert(u)
    return ctx.im(u) == 0 and abs(ctx.re(u)) > cutoff


class SymbolService:
    def __init__(self, numerics: NumericsService):
        self.numerics = numerics

    def builtin_symbol(self, name: str, a: Optional[float] = None) -> EntireSymbol:
        """Frequency symbols k and amplitudes g for the Berry construction.

        k5 and g5 are piecewise: the triangle formula on [-a, a] and zero on the
        rest of the real line, so they need `a`.
        """
        if name == "k1":
            return EntireSymbol(
                eval=lambda ctx, u: 1 / (1 + u * u / 2),
                value_at_ia=lambda ctx, a: 1 / (1 - ctx.mpf(a) ** 2 / 2),
                band_image_bound=1.0,
                a_range=(0.0, math.sqrt(2)),
                label="k1(u)=1/(1+u^2/2)",
                spec={"builtin": "k1"},
            )
        if name == "k2":
            return EntireSymbol(
                eval=lambda ctx, u: 1 / ctx.cosh(u),
                value_at_ia=lambda ctx, a: 1 / ctx.cos(a),
                band_image_bound=1.0,
                a_range=(0.0, math.pi / 2),
                label="k2(u)=1/cosh(u)",
                spec={"builtin": "k2"},
            )
        if name == "k3":
            return EntireSymbol(
                eval=lambda ctx, u: ctx.exp(-u * u / 2),
                value_at_ia=lambda ctx, a: ctx.exp(ctx.mpf(a) ** 2 / 2),
                band_image_bound=1.0,
                a_range=(0.0, math.inf),
                label="k3(u)=exp(-u^2/2)",
                spec={"builtin": "k3"},
            )
        if name == "k4":
            return EntireSymbol(
                eval=lambda ctx, u: ctx.cos(u),
                value_at_ia=lambda ctx, a: ctx.cosh(a),
                band_image_bound=1.0,
                a_range=(0.0, math.inf),
                label="k4(u)=cos(u)",
                spec={"builtin": "k4"},
            )
        if name in ("k5", "g5"):
            if a is None:
                raise HypothesisViolation(detail=f"{name} is defined relative to the triangle and needs a")
            if not 0 < a <= 2:
                raise HypothesisViolation(detail=f"{name} requires 0 < a <= 2, got a={a}")
            cutoff = float(a)
            if name == "k5":
                return EntireSymbol(
                    eval=lambda ctx, u: 0 if _is_real_outside(ctx, u, cutoff) else 1 - u * u / 2,
                    value_at_ia=lambda ctx, a: 1 + ctx.mpf(a) ** 2 / 2,
                    band_image_bound=1.0,
                    a_range=(0.0, 2.0),
                    cutoff=cutoff,
                    label=f"k5(u)=1-u^2/2 on [-{cutoff}, {cutoff}]",
                    spec={"builtin": "k5", "a": cutoff},
                )
            return EntireSymbol(
                eval=lambda ctx, u: 0 if _is_real_outside(ctx, u, cutoff) else 1,
                value_at_ia=lambda ctx, a: ctx.mpf(1),
                a_range=(0.0, 2.0),
                cutoff=cutoff,
                label=f"g5(u)=1 on [-{cutoff}, {cutoff}]",
                spec={"builtin": "g5", "a": cutoff},
            )
        if name == "const1":
            return self.polynomial([1], label="const1", spec={"builtin": "const1"})
        raise UnknownSymbol(detail=f"unknown symbol '{name}', expected one of {', '.join(BUILTIN_SYMBOLS)}")

    def polynomial(
        self,
        coeffs: Sequence[Any],
        band_image_bound: Optional[float] = None,
        label: Optional[str] = None,
        spec: Optional[Dict[str, Any]] = None,
    ) -> EntireSymbol:
        """H(z) = sum_l h_l z^l, coefficients in increasing degree."""
        if not coeffs:
            raise SpecParseError(detail="polynomial symbol needs at least one coefficient")
        coeffs = tuple(coeffs)
        numerics = self.numerics

        def horner(ctx: MPContext, z: Any) -> Any:
            value = ctx.mpf(0)
            for coefficient in reversed(coeffs):
                value = value * z + numerics.convert(coefficient, ctx)
            return value

        return EntireSymbol(
            eval=horner,
            poly_coeffs=coeffs,
            value_at_ia=lambda ctx, a: horner(ctx, ctx.mpc(0, a)),
            band_image_bound=band_image_bound,
            label=label or "H(z)=" + "+".join(f"({c})z^{l}" for l, c in enumerate(coeffs)),
            spec=spec or {"poly": [self._pair(c) for c in coeffs], **({"h0": band_image_bound} if band_image_bound else {})},
        )

    def identity(self, band_image_bound: Optional[float] = None) -> EntireSymbol:
        return self.polynomial([0, 1], band_image_bound=band_image_bound, label="H(k)=k")

    def from_spec(self, spec: Dict[str, Any], a: Optional[float] = None) -> EntireSymbol:
        """{"poly": [[re, im], ...]} or {"builtin": name}, optional "h0"."""
        h0 = spec.get("h0")
        h0 = float(h0) if h0 is not None else None
        if "builtin" in spec:
            symbol = self.builtin_symbol(str(spec["builtin"]), a=spec.get("a", a))
            if h0 is not None:
                symbol = symbol.model_copy(update={"band_image_bound": h0})
            return symbol
        if "poly" in spec:
            coeffs = []
            for entry in spec["poly"]:
                if isinstance(entry, (list, tuple)):
                    if len(entry) != 2:
                        raise SpecParseError(detail=f"polynomial coefficient {entry!r} is not a [re, im] pair")
                    coeffs.append(tuple(entry) if entry[1] != 0 else entry[0])
                else:
                    coeffs.append(entry)
            return self.polynomial(coeffs, band_image_bound=h0, spec=dict(spec))
        raise SpecParseError(detail="symbol spec needs a 'poly' or 'builtin' key")

    @staticmethod
    def _pair(coefficient: Any) -> list:
        if isinstance(coefficient, (list, tuple)):
            return [str(coefficient[0]), str(coefficient[1])]
        if isinstance(coefficient, complex):
            return [repr(coefficient.real), repr(coefficient.imag)]
        return [str(coefficient), "0"]


def get_symbol_service(numerics: Optional[NumericsService] = None) -> SymbolService:
    return SymbolService(numerics or get_numerics_service())
