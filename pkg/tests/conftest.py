import numpy as np
import pytest

from services.evolution_service import get_evolution_service
from services.export_service import get_export_service
from services.family_service import get_family_service
from services.identity_service import get_identity_service
from services.measure_service import get_measure_service
from services.metrics_service import get_metrics_service
from services.numerics_service import get_numerics_service


@pytest.fixture
def numerics():
    return get_numerics_service(128)


@pytest.fixture
def measures(numerics):
    return get_measure_service(numerics)


@pytest.fixture
def symbols(measures):
    return measures.symbols


@pytest.fixture
def families(numerics, measures):
    return get_family_service(numerics, measures)


@pytest.fixture
def evolution(numerics, measures):
    return get_evolution_service(numerics, measures)


@pytest.fixture
def metrics(numerics, measures):
    return get_metrics_service(numerics, measures)


@pytest.fixture
def identity(numerics, families):
    return get_identity_service(numerics, families)


@pytest.fixture
def export(numerics):
    return get_export_service(numerics)


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


@pytest.fixture
def ctx(numerics):
    return numerics.ctx
