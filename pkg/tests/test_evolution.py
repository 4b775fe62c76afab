import pytest

from services.evolution_service import get_evolution_service
from services.exceptions import HypothesisViolation, StencilOverflow
from services.family_service import get_family_service
from services.measure_service import get_measure_service
from services.numerics_service import get_numerics_service


@pytest.fixture
def standard(families):
    return families.standard_family(2, 2)


@pytest.fixture
def square(symbols):
    return symbols.polynomial([0, 0, 1], band_image_bound=1)


def test_translation_symbol_shifts_the_argument(evolution, measures, symbols, standard):
    shifted = evolution.propagate(standard.measure, symbols.identity(), 1)
    for z in (0.3, -0.7 + 0.2j):
        assert abs(evolution.evaluate(shifted, z) - measures.eval_transform(standard.measure, z + 1)) < 1e-30


def test_propagation_times_accumulate(evolution, standard, square):
    first = evolution.propagate(standard.measure, square, 0.25)
    second = evolution.propagate(first, square, 0.5)
    assert second.base is standard.measure
    assert second.time == 0.75
    direct = evolution.propagate(standard.measure, square, 0.75)
    assert abs(evolution.evaluate(second, 0.4) - evolution.evaluate(direct, 0.4)) < 1e-30


def test_zero_time_is_identity(evolution, standard, square):
    assert evolution.propagate(standard.measure, square, 0).measure is standard.measure


def test_first_family_is_an_imaginary_shift(evolution, measures, symbols, ctx, standard):
    derived = evolution.family_one(standard.measure, symbols.identity(), 2)
    expected = ctx.exp(-2) * measures.eval_transform(standard.measure, 0.5 - 1j)
    assert abs(measures.eval_transform(derived, 0.5) - expected) < 1e-30


def test_second_family_pushes_frequencies_forward(evolution, measures, ctx, standard, square):
    derived = evolution.family_two(standard.measure, square, 2)
    assert derived.band == 1.0
    assert evolution.derived_target(square, 2) == 4.0
    expected = ctx.mpf(5) / 2 * ctx.expj(0.7) - ctx.mpf(3) / 2
    assert abs(measures.eval_transform(derived, 0.7) - expected) < 1e-30


def test_second_family_needs_target_outside_image(evolution, symbols, standard, square):
    with pytest.raises(HypothesisViolation):
        evolution.family_two(standard.measure, square, 0.9)
    with pytest.raises(HypothesisViolation):
        evolution.family_two(standard.measure, symbols.polynomial([0, 0, 1]), 2)


def test_schrodinger_residual_is_second_order(evolution, standard, square):
    coarse = evolution.pde_residual(standard.measure, square, 0.3, 0.2, 1e-2)
    fine = evolution.pde_residual(standard.measure, square, 0.3, 0.2, 5e-3)
    assert fine < coarse < 1e-3
    assert 3.9 < coarse / fine < 4.1


def test_residual_stencil_limits(evolution, symbols, standard, square):
    with pytest.raises(StencilOverflow):
        evolution.pde_residual(standard.measure, square, 0, 1e9, 1e-3)
    with pytest.raises(HypothesisViolation):
        evolution.pde_residual(standard.measure, symbols.polynomial([0] * 9 + [1]), 0, 0, 1e-3)
    with pytest.raises(HypothesisViolation):
        evolution.pde_residual(standard.measure, symbols.builtin_symbol("k2"), 0, 0, 1e-3)


def test_propagated_sequence_targets_phase_shifted_wave(evolution, families, metrics, square):
    sequence = evolution.propagated_sequence(families.standard_sequence(2), square, 0.5)
    report = metrics.convergence_report(sequence, [4, 16, 64], B=8)
    assert report.verdict.value == "decreasing"


def test_second_family_sequence_converges_to_derived_target(evolution, families, metrics, square):
    sequence = evolution.family_two_sequence(families.standard_sequence(2), square)
    assert sequence.target == 4.0
    assert sequence.band == 1.0
    report = metrics.convergence_report(sequence, [4, 8, 16], B=12)
    assert report.verdict.value == "decreasing"


def test_schrodinger_residual_off_the_real_axis():
    numerics = get_numerics_service(256)
    measures = get_measure_service(numerics)
    evolution = get_evolution_service(numerics, measures)
    standard = get_family_service(numerics, measures).standard_family(2, 3)
    square = measures.symbols.polynomial([0, 0, 1], band_image_bound=1)
    assert evolution.pde_residual(standard.measure, square, 0.2, 1 + 0.3j, 1e-3) <= 1e-4
