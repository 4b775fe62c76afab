import logging
import math
import os
from decimal import Decimal
from fractions import Fraction
from functools import lru_cache
from typing import Any, Optional, Sequence

import sympy
from dotenv import load_dotenv
from mpmath.ctx_mp import MPContext

from schemas.superoscillation import PrecisionComplex, PrecisionPolicy, PrecisionReal
from services.exceptions import NumericOverflow, PrecisionExhausted

logger = logging.getLogger(__name__)

# |z| below which sinc switches to its even power series
SINC_SERIES_THRESHOLD = 0.5


@lru_cache(maxsize=None)
def get_context(bits: int) -> MPContext:
    """One mpmath context per bit width; never mutated after creation."""
    ctx = MPContext()
    ctx.prec = bits
    return ctx


def digits_for_bits(bits: int) -> int:
    return math.ceil(bits * 0.302) + 2


def as_exact(value: Any) -> Optional[sympy.Expr]:
    """Exact rational view of `value`, or None for inexact inputs.

    Ints, Fractions, Decimals, decimal strings and sympy rationals are exact;
    floats and mpmath values are not.
    """
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return sympy.Integer(value)
    if isinstance(value, Fraction):
        return sympy.Rational(value.numerator, value.denominator)
    if isinstance(value, Decimal):
        return sympy.Rational(str(value))
    if isinstance(value, str):
        try:
            return sympy.Rational(value)
        except (TypeError, ValueError, sympy.SympifyError):
            return None
    if isinstance(value, sympy.Basic):
        re_part, im_part = value.as_real_imag()
        if re_part.is_Rational and im_part.is_Rational:
            return value
    return None


def all_exact(values: Sequence[Any]) -> Optional[list]:
    exact = [as_exact(value) for value in values]
    if any(value is None for value in exact):
        return None
    return exact


class NumericsService:
    def __init__(self, policy: PrecisionPolicy):
        self.policy = policy
        self.ctx = get_context(policy.base_bits)

    @property
    def bits(self) -> int:
        return self.policy.base_bits

    def context(self, bits: Optional[int] = None) -> MPContext:
        return get_context(max(bits or self.bits, self.bits))

    def tolerance(self, bits: Optional[int] = None) -> float:
        return 2.0 ** (2 - (bits or self.bits))

    def escalated_bits(self, log2_magnitude: float, what: str = "computation") -> int:
        """Bits for a computation whose largest term is 2^log2_magnitude, i.e. max_j |C_j| for point masses."""
        bits = self.policy.required_bits(log2_magnitude)
        if bits > self.policy.max_bits:
            raise PrecisionExhausted(
                detail=f"{what} needs {bits} bits, above the {self.policy.max_bits}-bit cap",
            )
        if bits > self.bits:
            logger.debug("escalating %s from %d to %d bits", what, self.bits, bits)
        return bits

    def convert(self, value: Any, ctx: Optional[MPContext] = None) -> PrecisionComplex:
        """Lift ints, floats, Fractions, Decimals, strings, sympy and mpmath numbers into ctx."""
        ctx = ctx or self.ctx
        if isinstance(value, Fraction):
            return ctx.mpf(value.numerator) / value.denominator
        if isinstance(value, Decimal):
            return ctx.mpf(str(value))
        if isinstance(value, sympy.Basic):
            re_part, im_part = value.as_real_imag()
            return ctx.mpc(self._sympy_real(re_part, ctx), self._sympy_real(im_part, ctx))
        if isinstance(value, (list, tuple)) and len(value) == 2:
            return ctx.mpc(self.convert(value[0], ctx), self.convert(value[1], ctx))
        return ctx.convert(value)

    @staticmethod
    def _sympy_real(value: sympy.Expr, ctx: MPContext) -> PrecisionReal:
        if value.is_Rational:
            return ctx.mpf(int(value.p)) / int(value.q)
        return ctx.mpf(str(sympy.N(value, digits_for_bits(ctx.prec))))

    def ensure_finite(self, value: PrecisionComplex, what: str = "value") -> PrecisionComplex:
        ctx = self.ctx
        if ctx.isnan(value) or ctx.isinf(value):
            raise NumericOverflow(detail=f"{what} is not finite", witness=str(value))
        if value != 0 and ctx.mag(value) > self.policy.max_magnitude_bits:
            raise NumericOverflow(
                detail=f"{what} exceeds the exponent range of 2^{self.policy.max_magnitude_bits}",
            )
        return value

    def check_exponent(self, exponent: PrecisionReal, what: str) -> None:
        """Refuse e^x when x would leave the accepted exponent range."""
        if abs(exponent) > self.policy.max_magnitude_bits * math.log(2):
            raise NumericOverflow(detail=f"{what}: exponent {float(exponent):.6g} out of range")

    def csqrt_upper(self, w: Any, ctx: Optional[MPContext] = None) -> PrecisionComplex:
        """Square root with argument in [0, pi); the input argument is read in [0, 2pi)."""
        ctx = ctx or self.ctx
        w = ctx.mpc(self.convert(w, ctx))
        root = ctx.sqrt(w)
        if root.imag < 0 or (root.imag == 0 and root.real < 0):
            root = -root
        return root

    def csinc(self, z: Any, ctx: Optional[MPContext] = None) -> PrecisionComplex:
        ctx = ctx or self.ctx
        z = ctx.mpc(self.convert(z, ctx))
        self.check_exponent(z.imag, "sinc")
        if abs(z) < SINC_SERIES_THRESHOLD:
            # sin(z)/z = 0F1(; 3/2; -z^2/4), the even series
            return ctx.mpc(ctx.hyp0f1(ctx.mpf(3) / 2, -z * z / 4))
        return self.ensure_finite(ctx.sin(z) / z, "sinc")

    def sinc_of_sqrt(self, w: Any, ctx: Optional[MPContext] = None) -> PrecisionComplex:
        """sinc(sqrt(w)) as an entire function of w."""
        ctx = ctx or self.ctx
        w = ctx.mpc(self.convert(w, ctx))
        if abs(w) < SINC_SERIES_THRESHOLD ** 2:
            return ctx.mpc(ctx.hyp0f1(ctx.mpf(3) / 2, -w / 4))
        return self.csinc(self.csqrt_upper(w, ctx), ctx)

    def bessel_j0(self, x: Any, precision_bits: Optional[int] = None) -> PrecisionReal:
        ctx = self.context(precision_bits)
        return ctx.besselj(0, ctx.mpf(self.convert(x, ctx)))

    def expi(self, exponent: Any, ctx: Optional[MPContext] = None) -> PrecisionComplex:
        """e^{i*exponent} with the exponent-range guard."""
        ctx = ctx or self.ctx
        exponent = self.convert(exponent, ctx)
        self.check_exponent(ctx.im(exponent), "e^{i x}")
        return ctx.expj(exponent)


def get_numerics_service(precision_bits: Optional[int] = None, escalate: bool = True) -> NumericsService:
    max_bits = 4096
    raw_max_bits = os.getenv("SUPEROSC_MAX_BITS")
    if raw_max_bits:
        try:
            max_bits = int(raw_max_bits)
        except ValueError:
            logger.warning("ignoring SUPEROSC_MAX_BITS=%r, not an integer", raw_max_bits)
    base_bits = precision_bits or 128
    policy = PrecisionPolicy(base_bits=base_bits, max_bits=max(max_bits, base_bits), escalate=escalate)
    return NumericsService(policy)


if __name__ == "__main__":
    load_dotenv()
    numerics = get_numerics_service(128)
    print(numerics.csqrt_upper(-2j))
    print(numerics.csinc(1j))
    print(numerics.bessel_j0(2.4048255577))
