import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from inelastic_hermite.coefficients import KernelSpec, assemble_tensor

settings.register_profile(
    "default", max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

_TENSORS = {}


def tensor_for(m, kernel, symmetric=True):
    key = (m, kernel, symmetric)
    if key not in _TENSORS:
        _TENSORS[key] = assemble_tensor(m, kernel, symmetric=symmetric)
    return _TENSORS[key]


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture(scope="session")
def maxwell_half():
    return KernelSpec.maxwell(0.5)


@pytest.fixture(scope="session")
def hs_kernel():
    return KernelSpec.hard_sphere(0.8)


def random_state_coeffs(rng, m, scale=0.05, rho=1.0):
    from inelastic_hermite.basis import n_basis

    c = rng.normal(size=n_basis(m)) * scale
    c[0] = rho
    return c


TWO_PI = 2 * math.pi


# one summary line per acceptance criterion, shown after the run
ACCEPTANCE = []


@pytest.fixture
def acceptance(request):
    def report(tag, ok, detail):
        line = f"{tag} {'PASS' if ok else 'FAIL'}: {detail}"
        ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
