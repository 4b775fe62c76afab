from decimal import Decimal
from fractions import Fraction

import pytest
import sympy

from services.exceptions import NumericOverflow, PrecisionExhausted
from services.numerics_service import as_exact, digits_for_bits, get_context, get_numerics_service


def test_contexts_are_cached_per_width():
    assert get_context(128) is get_context(128)
    assert get_context(128).prec == 128
    assert get_context(256).prec == 256


def test_digits_for_bits():
    assert digits_for_bits(128) == 41
    assert digits_for_bits(53) == 19


@pytest.mark.parametrize(
    "value, expected",
    [
        (3, sympy.Integer(3)),
        (Fraction(1, 3), sympy.Rational(1, 3)),
        (Decimal("0.25"), sympy.Rational(1, 4)),
        ("2/7", sympy.Rational(2, 7)),
        (0.5, None),
        (True, None),
    ],
)
def test_as_exact(value, expected):
    assert as_exact(value) == expected


def test_convert_lifts_pairs_and_fractions(numerics, ctx):
    assert numerics.convert((1, 2)) == ctx.mpc(1, 2)
    assert abs(numerics.convert(Fraction(1, 3)) - ctx.mpf(1) / 3) < ctx.mpf(2) ** -120
    assert numerics.convert(sympy.Rational(1, 2) + sympy.I) == ctx.mpc(0.5, 1)


def test_upper_square_root_branch(numerics, ctx):
    assert numerics.csqrt_upper(-1) == ctx.mpc(0, 1)
    assert numerics.csqrt_upper(4) == ctx.mpc(2, 0)
    root = numerics.csqrt_upper(-2j)
    assert abs(root - ctx.mpc(-1, 1)) < ctx.mpf(2) ** -120
    assert root.imag >= 0


def test_sinc_is_entire(numerics, ctx):
    assert numerics.csinc(0) == 1
    assert abs(numerics.csinc(ctx.pi)) < 1e-35
    assert abs(numerics.csinc(1j) - ctx.sinh(1)) < 1e-35
    assert abs(numerics.sinc_of_sqrt(0) - 1) < 1e-35
    assert abs(numerics.sinc_of_sqrt(-1) - ctx.sinh(1)) < 1e-35
    # series branch and closed branch agree near the switch
    assert abs(numerics.sinc_of_sqrt(0.2499) - numerics.csinc(ctx.sqrt(ctx.mpf(0.2499)))) < 1e-35


def test_upper_branch_on_random_inputs(numerics, ctx, rng):
    for re_w, im_w in rng.uniform(-50, 50, size=(200, 2)):
        w = ctx.mpc(re_w, im_w)
        root = numerics.csqrt_upper(w)
        assert root.imag > 0 or (root.imag == 0 and root.real >= 0)
        assert abs(root * root - w) <= ctx.mpf(2) ** -120 * max(1, abs(w))


def test_sinc_of_sqrt_ignores_the_branch(numerics, ctx, rng):
    for re_w, im_w in rng.uniform(-50, 50, size=(200, 2)):
        w = ctx.mpc(re_w, im_w)
        root = numerics.csqrt_upper(w)
        value = numerics.sinc_of_sqrt(w)
        assert abs(numerics.csinc(-root) - numerics.csinc(root)) <= 1e-30 * max(1, abs(value))
        assert abs(value - numerics.csinc(-root)) <= 1e-30 * max(1, abs(value))


def test_doubling_precision_stays_within_tolerance(numerics, rng):
    fine = numerics.context(256)
    for re_z, im_z in rng.uniform(-5, 5, size=(50, 2)):
        coarse = numerics.csinc(complex(re_z, im_z))
        refined = numerics.csinc(complex(re_z, im_z), fine)
        assert abs(refined - coarse) < numerics.tolerance() * max(1, abs(coarse))


def test_bessel_zero(numerics):
    assert abs(numerics.bessel_j0(2.404825557695773)) < 1e-15


def test_escalation_follows_magnitude(numerics):
    assert numerics.escalated_bits(10) == 128
    assert numerics.escalated_bits(100) == 164


def test_escalation_cap(monkeypatch):
    monkeypatch.setenv("SUPEROSC_MAX_BITS", "256")
    numerics = get_numerics_service(128)
    assert numerics.escalated_bits(150) == 214
    with pytest.raises(PrecisionExhausted):
        numerics.escalated_bits(500)


def test_escalation_can_be_disabled():
    numerics = get_numerics_service(128, escalate=False)
    assert numerics.escalated_bits(1000) == 128


def test_exponent_guard(numerics):
    with pytest.raises(NumericOverflow):
        numerics.check_exponent(1e7, "test")
    with pytest.raises(NumericOverflow):
        numerics.expi(1e7j)
