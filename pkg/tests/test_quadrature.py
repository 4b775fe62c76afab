import pytest

from schemas.superoscillation import QuadratureSpec
from services.exceptions import QuadratureNonConvergence
from services.quadrature_service import get_quadrature_service


@pytest.fixture
def quadrature(numerics):
    return get_quadrature_service(numerics)


def test_polynomial_is_exact(quadrature, ctx):
    value = quadrature.integrate(lambda c, k: k ** 2 / 2, -1, 1)
    assert abs(value - ctx.mpf(1) / 3) < 1e-30


def test_oscillatory_integrand(quadrature, ctx):
    value = quadrature.integrate(lambda c, k: c.expj(2 * k), -1, 1)
    assert abs(value - ctx.sin(2)) < 1e-30


def test_breakpoint_at_kink(quadrature):
    value = quadrature.integrate(lambda c, k: abs(k - c.mpf(1) / 3), -1, 1, breakpoints=[1 / 3])
    # int |k - 1/3| over [-1, 1] = (4/3)^2/2 + (2/3)^2/2
    assert abs(value - (8 / 9 + 2 / 9)) < 1e-14


def test_empty_interval(quadrature):
    assert quadrature.integrate(lambda c, k: k, 1, 1) == 0


def test_chebyshev_weight(quadrature, ctx):
    value = quadrature.integrate_chebyshev(lambda c, k: 1, -1, 1)
    assert abs(value - ctx.pi) < 1e-30


def test_panel_budget_is_enforced(numerics):
    quadrature = get_quadrature_service(numerics, QuadratureSpec(rel_tol=1e-30, max_panels=4))
    with pytest.raises(QuadratureNonConvergence):
        quadrature.integrate(lambda c, k: c.sqrt(abs(k - c.mpf(1) / 3)), -1, 1)
