from decimal import Decimal

import pytest

from services.exceptions import HypothesisViolation, SpecParseError, UnknownSymbol


def test_builtin_values_at_ia(symbols, ctx):
    k2 = symbols.builtin_symbol("k2")
    assert k2.eval(ctx, ctx.mpf(0)) == 1
    assert abs(k2.value_at_ia(ctx, 1) - 1 / ctx.cos(1)) < 1e-35
    k1 = symbols.builtin_symbol("k1")
    assert abs(k1.value_at_ia(ctx, 1) - 2) < 1e-35


@pytest.mark.parametrize("name", ["k1", "k2", "k3", "k4", "k5", "g5"])
def test_closed_form_at_ia_matches_direct_evaluation(symbols, ctx, name):
    symbol = symbols.builtin_symbol(name, a=1.0)
    direct = symbol.eval(ctx, ctx.mpc(0, 1))
    assert abs(symbol.value_at_ia(ctx, 1) - direct) < 1e-30


def test_piecewise_symbols_vanish_outside_triangle(symbols, ctx):
    k5 = symbols.builtin_symbol("k5", a=1.0)
    assert k5.eval(ctx, ctx.mpf(1.5)) == 0
    assert k5.eval(ctx, ctx.mpf(0.5)) == ctx.mpf(0.875)
    assert k5.value_at_ia(ctx, 1) == 1.5
    assert k5.cutoff == 1.0
    g5 = symbols.builtin_symbol("g5", a=1.0)
    assert g5.eval(ctx, ctx.mpf(-2)) == 0
    assert g5.eval(ctx, ctx.mpf(0.3)) == 1


def test_piecewise_symbols_need_a(symbols):
    with pytest.raises(HypothesisViolation):
        symbols.builtin_symbol("k5")
    with pytest.raises(HypothesisViolation):
        symbols.builtin_symbol("k5", a=3.0)


def test_unknown_symbol(symbols):
    with pytest.raises(UnknownSymbol):
        symbols.builtin_symbol("k9")


def test_polynomial_horner(symbols, ctx):
    square = symbols.polynomial([0, 0, 1], band_image_bound=1)
    assert square.degree == 2
    assert square.eval(ctx, ctx.mpf(3)) == 9
    assert square.value_at_ia(ctx, 2) == -4


def test_symbol_from_document(symbols, ctx):
    symbol = symbols.from_spec({"poly": [[0, 0], [Decimal("0.5"), 0], [1, 0]], "h0": 1})
    assert symbol.band_image_bound == 1.0
    assert symbol.eval(ctx, ctx.mpf(2)) == 5
    assert symbols.from_spec({"builtin": "k3"}).label.startswith("k3")
    with pytest.raises(SpecParseError):
        symbols.from_spec({})
    with pytest.raises(SpecParseError):
        symbols.from_spec({"poly": [[1, 2, 3]]})
