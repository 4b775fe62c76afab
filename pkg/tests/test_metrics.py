import pytest

from schemas.superoscillation import GridDescription, Verdict
from services.exceptions import DuplicateFrequency, HypothesisViolation, NearZeroSignal
from services.metrics_service import MetricsService


def test_grid_points(metrics):
    points = metrics.grid_points(GridDescription(r_max=2, n_radii=3, n_angles=4))
    assert len(points) == 13
    assert points[0] == 0
    assert abs(max(abs(z) for z in points) - 2) < 1e-30
    assert abs(min(abs(z) for z in points[1:]) - 0.5) < 1e-30


def test_distance_to_itself_is_zero(metrics, ctx):
    wave = lambda z: ctx.expj(2 * z)
    assert metrics.a1_distance(wave, wave, 1) == 0
    with pytest.raises(HypothesisViolation):
        metrics.a1_distance(wave, wave, -1)


@pytest.mark.parametrize(
    "estimates, verdict",
    [
        ([3.0, 2.0, 1.0], Verdict.DECREASING),
        ([1.0, 1.0], Verdict.NON_DECREASING),
        ([1.0, 2.0, 0.5], Verdict.NON_DECREASING),
        ([1.0], Verdict.INCONCLUSIVE),
    ],
)
def test_verdict(estimates, verdict):
    assert MetricsService._verdict(estimates) == verdict


def test_bound_at_unit_kappa(metrics):
    assert metrics.theorem41_bound(1, 1, 0, 0, 0) == 2
    with pytest.raises(HypothesisViolation):
        metrics.theorem41_bound(0, 1, 3, 2, 0)


def test_measured_kappas(metrics, families, measures):
    assert metrics.measured_kappas(families.standard_family(2, 2).measure) == (1.0, 1.5)
    with pytest.raises(HypothesisViolation):
        metrics.measured_kappas(measures.builtin_density("uniform"))


def test_separation_kappa(metrics):
    assert metrics.separation_kappa({2: [1, 0, -1]}, 2) == 1.0
    with pytest.raises(DuplicateFrequency):
        metrics.separation_kappa({2: [1, 1, 0]}, 2)
    with pytest.raises(HypothesisViolation):
        metrics.separation_kappa({2: [1, 0, -1]}, 1)


def test_separation_of_equispaced_lists(metrics, families):
    freqs = {n: families.equispaced_frequencies(n) for n in range(1, 31)}
    assert metrics.separation_kappa(freqs, 30) >= 1 / 2.718281828459045


def test_local_wavenumber(metrics, ctx):
    assert abs(metrics.local_wavenumber(lambda x: ctx.expj(2 * x), 0.3, 1e-4) - 2) < 1e-6
    with pytest.raises(NearZeroSignal):
        metrics.local_wavenumber(lambda x: x, 0, 1e-3)
    for step in (0, -1e-3):
        with pytest.raises(HypothesisViolation):
            metrics.local_wavenumber(lambda x: ctx.expj(2 * x), 0.3, step)


def test_local_wavenumber_of_standard_family(metrics, families):
    element = families.standard_family(2, 6)
    assert abs(metrics.local_wavenumber(element.closed_form, 0, 1e-4) - 2) < 1e-6


@pytest.mark.parametrize("n", [4, 8, 12])
def test_lagrange_error_obeys_bound(metrics, families, measures, ctx, rng, n):
    element = families.lagrange_family(families.equispaced_frequencies(n), 2)
    largest = max(float(abs(atom.weight)) for atom in element.measure.atoms)
    kappa1, kappa2 = metrics.measured_kappas(element.measure)
    # theorem41_bound takes max_j |C_j| as kappa2; growth_bound takes the per-index rate
    radii = 2 * rng.uniform(0, 1, 100) ** 0.5
    angles = rng.uniform(0, 6.283185307179586, 100)
    for r, theta in zip(radii, angles):
        z = ctx.mpf(r) * ctx.expj(theta)
        value = measures.eval_transform(element.measure, z)
        assert abs(value - ctx.expj(2 * z)) <= metrics.theorem41_bound(1, largest, n, 2, z)
        assert abs(value) <= metrics.growth_bound(kappa1, kappa2, n, 1, z) * (1 + 1e-12)


def test_standard_family_report(metrics, families):
    report = metrics.convergence_report(families.standard_sequence(2), [2, 4, 8, 16], B=6)
    assert report.verdict == Verdict.DECREASING
    assert report.failed_checks == []
    assert float(report.taylor_defects["2"][2]) == 1.5
    assert float(report.taylor_defects["4"][0]) == 0
    assert report.bound_values is None


def test_report_with_kappas(metrics, families):
    report = metrics.convergence_report(families.standard_sequence(2), [2, 4], kappas=(1.0, 1.5))
    assert report.B == 5.0
    assert len(report.bound_values) == 2
    for n, value, estimate in zip([2, 4], report.bound_values, report.sup_estimates):
        assert value == pytest.approx(float(metrics.theorem41_bound(1.0, 1.5, n, 2, 0)))
        assert estimate <= value
    assert not any(check.startswith("bound") for check in report.failed_checks)
    with pytest.raises(HypothesisViolation):
        metrics.convergence_report(families.standard_sequence(2), [2, 4])


def test_lagrange_report_has_exact_defects(metrics, families):
    report = metrics.convergence_report(families.lagrange_sequence(2), [2, 4, 8], B=6)
    assert not any(check.startswith("taylor") for check in report.failed_checks)
    for row in report.taylor_defects.values():
        assert all(float(value) == 0 for value in row.values())


def test_sinc_delta_report(metrics, families):
    report = metrics.convergence_report(families.sinc_delta_sequence(1.5), [1, 0.5, 0.25, 0.125], B=4)
    assert report.verdict == Verdict.DECREASING
    assert report.taylor_defects is None


def test_berry_report(metrics, families):
    family = families.berry_sequence(families.berry_spec(families.builtin_symbol("k2"), 1.0))
    grid = GridDescription(r_max=2, n_radii=2, n_angles=4)
    report = metrics.convergence_report(family, [0.8, 0.4, 0.2], B=3, grid=grid)
    assert report.verdict == Verdict.DECREASING
