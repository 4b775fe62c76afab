import pytest
import sympy

from services.exceptions import HypothesisViolation, ImageBoundViolation, UnknownDensity


def standard_two(measures):
    return measures.discrete([(1, sympy.Rational(9, 4)), (0, sympy.Rational(-3, 2)), (-1, sympy.Rational(1, 4))], 1)


def test_discrete_transform(measures, ctx):
    cosine = measures.discrete([(1, 0.5), (-1, 0.5)], 1)
    assert abs(measures.eval_transform(cosine, 1) - ctx.cos(1)) < 1e-35
    assert abs(measures.eval_transform(standard_two(measures), ctx.pi) + 4) < 1e-35


def test_discrete_keeps_exact_data(measures):
    measure = standard_two(measures)
    assert measure.is_exact
    assert measures.exact_moment(measure, 0) == 1
    assert measures.exact_moment(measure, 2) == sympy.Rational(5, 2)


def test_atoms_must_lie_in_band(measures):
    with pytest.raises(HypothesisViolation):
        measures.discrete([(2, 1)], 1)


def test_uniform_density(measures, ctx):
    uniform = measures.builtin_density("uniform")
    assert measures.exact_moment(uniform, 2) == sympy.Rational(1, 3)
    assert measures.exact_moment(uniform, 3) == 0
    assert abs(measures.moment(uniform, 2) - ctx.mpf(1) / 3) < 1e-35
    assert abs(measures.eval_transform(uniform, 1) - ctx.sin(1)) < 1e-30


def test_monomial_density_moments(measures):
    monomial = measures.builtin_density("monomial", {"p": 2})
    assert monomial.exact_moment(0) == sympy.Rational(2, 3)
    assert monomial.exact_moment(2) == sympy.Rational(2, 5)


def test_bessel_kernel_at_zero(measures, ctx):
    kernel = measures.builtin_density("bessel_kernel", {"b": 1})
    assert abs(measures.eval_transform(kernel, 0) - ctx.sin(1)) < 1e-20


def test_unknown_density(measures):
    with pytest.raises(UnknownDensity):
        measures.builtin_density("lorentzian")


def test_total_variation(measures):
    measure = measures.discrete([(1, 3), (0, -3), (-1, 1)], 1)
    assert measures.total_variation(measure) == 7


def test_pushforward_merges_atoms(measures, symbols):
    square = symbols.polynomial([0, 0, 1], band_image_bound=1)
    image = measures.pushforward(standard_two(measures), square, 1)
    assert [float(atom.location) for atom in image.atoms] == [0.0, 1.0]
    assert [atom.exact_weight for atom in image.atoms] == [sympy.Rational(-3, 2), sympy.Rational(5, 2)]
    assert image.is_exact


def test_pushforward_checks_image_bound(measures, symbols):
    square = symbols.polynomial([0, 0, 1])
    with pytest.raises(ImageBoundViolation):
        measures.pushforward(standard_two(measures), square, 0.5)
    with pytest.raises(ImageBoundViolation):
        measures.pushforward(measures.builtin_density("uniform"), square, 0.5)


def test_composite_transform(measures, symbols, ctx):
    square = symbols.polynomial([0, 0, 1], band_image_bound=1)
    uniform = measures.builtin_density("uniform")
    composite = measures.pushforward(uniform, square, 1)
    assert composite.variant.value == "composite"
    assert abs(measures.eval_transform(composite, 0) - 1) < 1e-30
    z = ctx.mpf(0.7)
    direct = measures.quadrature.integrate(lambda c, k: c.expj(k * k * z) / 2, -1, 1)
    assert abs(measures.eval_transform(composite, z) - direct) < 1e-25


def test_reweight_discrete(measures):
    doubled = measures.reweight(standard_two(measures), lambda c, k: 2)
    assert [float(atom.weight.real) for atom in doubled.atoms] == [4.5, -3.0, 0.5]


def test_document_round_trip(measures, ctx):
    original = standard_two(measures)
    restored = measures.from_document(measures.to_document(original))
    assert restored.is_exact
    assert abs(measures.eval_transform(restored, 0.3) - measures.eval_transform(original, 0.3)) < 1e-35

    kernel = measures.builtin_density("bessel_kernel", {"b": 2})
    document = measures.to_document(kernel)
    assert document["builtin"] == "bessel_kernel"
    assert measures.from_document(document).params == {"b": "2"}


def three_variants(measures, symbols):
    square = symbols.polynomial([0, 0, 1], band_image_bound=1)
    uniform = measures.builtin_density("uniform")
    return [standard_two(measures), uniform, measures.pushforward(uniform, square, 1)]


def test_mass_is_the_transform_at_origin(measures, symbols):
    for measure in three_variants(measures, symbols):
        assert abs(measures.eval_transform(measure, 0) - measures.moment(measure, 0)) < 1e-25


def test_transform_grows_at_most_exponentially(measures, symbols, ctx, rng):
    radii = 20 * rng.uniform(0, 1, 12)
    angles = rng.uniform(0, 6.283185307179586, 12)
    for measure in three_variants(measures, symbols):
        total = measures.total_variation(measure)
        for r, theta in zip(radii, angles):
            z = ctx.mpf(r) * ctx.expj(theta)
            bound = total * ctx.exp(measure.band * abs(z))
            assert abs(measures.eval_transform(measure, z)) <= bound * (1 + 1e-12)
