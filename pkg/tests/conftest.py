import pytest
from hypothesis import HealthCheck, settings

import piezowim as pw

# numeric property tests do real linear algebra; wall-clock deadlines only
# produce flaky failures on loaded CI boxes
settings.register_profile(
    "suite", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def spec():
    return pw.reference_bimorph()


@pytest.fixture(scope="session")
def sys0(spec):
    return pw.assemble(spec)


@pytest.fixture(scope="session")
def sc_basis(sys0):
    return pw.short_circuit_modes(sys0)


@pytest.fixture(scope="session")
def oc_basis(sys0):
    return pw.open_circuit_modes(sys0)


@pytest.fixture(scope="session")
def sys78(spec):
    return pw.assemble(spec, pw.TipMass(M_t=78e-3))


@pytest.fixture(scope="session")
def sc78(sys78):
    return pw.short_circuit_modes(sys78)
