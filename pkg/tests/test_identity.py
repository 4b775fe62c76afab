import numpy as np
import pytest

from schemas.superoscillation import IdentityCheckName
from services.identity_service import IdentityService, lemma31_quotient, upper_sqrt


def test_upper_sqrt_branch():
    roots = upper_sqrt(np.array([4, -4, -2j, 2j]))
    assert np.allclose(roots, [2, 2j, -1 + 1j, 1 + 1j])
    assert np.all((roots.imag > 0) | ((roots.imag == 0) & (roots.real >= 0)))


def test_lemma31_quotient_near_origin():
    # the quotient tends to (a^2 - 1) / 2 as z -> 0
    assert lemma31_quotient(np.array([1e-3, 1e-3j]), 2.0) == pytest.approx([1.5, 1.5], rel=1e-2)


@pytest.mark.parametrize("name", list(IdentityCheckName))
def test_suites_pass(identity, name):
    result = identity.run(name)
    assert result.name == name
    assert result.passed, result.failures
    assert all(case.witness is None for case in result.cases)


def test_lemma_a1_counts_samples(identity):
    result = identity.lemma_a1(samples=500, seed=3)
    (case,) = result.cases
    assert case.samples == 500
    assert case.violations == 0
    assert case.max_error <= 1.0


def test_lemma31_reports_fitted_constant(identity):
    result = identity.lemma_31(targets=(2.0,), samples=200)
    (case,) = result.cases
    assert case.label.startswith("a=2, C=")
    assert case.max_error <= case.tolerance


def test_violations_carry_a_witness():
    case = IdentityService._case("sample", [(1e-3, 0), (0.5, 1j)], 0.1)
    assert case.violations == 1
    assert case.witness == "z=1j"
    assert not case.passed
