import numpy as np
import pytest
from hypothesis import settings

from helpers import S0, S1
from mink4.invariants import MeasuredInvariantField
from mink4.meridian import build_meridian_surface, principal_reparametrize

# timing varies between machines; example counts stay as set per test
settings.register_profile("mink4", deadline=None)
settings.load_profile("mink4")


@pytest.fixture(scope="session")
def s0():
    return S0


@pytest.fixture(scope="session")
def s1():
    return S1


@pytest.fixture(scope="session")
def s0_patch():
    return build_meridian_surface(S0)


@pytest.fixture(scope="session")
def s1_patch():
    return build_meridian_surface(S1)


@pytest.fixture(scope="session")
def s0_principal():
    """S0 in principal parameters, (p, q) = (0, 0) at (u, v) = (1.25, 1.5)."""
    return principal_reparametrize(S0, (-0.2, 0.2), (-0.2, 0.2))


@pytest.fixture(scope="session")
def s0_principal_at_1():
    """S0 in principal parameters with (p, q) = (0, 0) at (u, v) = (1, 0)."""
    return principal_reparametrize(S0, (-0.2, 0.2), (-0.2, 0.2), base=(1.0, 0.0))


@pytest.fixture(scope="session")
def s1_principal():
    return principal_reparametrize(S1, (-0.2, 0.2), (-0.2, 0.2), base=(3.0, 0.0))


@pytest.fixture(scope="session")
def s0_measured(s0_principal):
    return MeasuredInvariantField(s0_principal)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
