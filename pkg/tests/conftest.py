import numpy as np
import pytest

from qbm.model import BathSpec, CouplingFunction, ModelConfig, discretize


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def weak_n1():
    """Ohmic-like coupling with 2 pi g^2(1) = 0.01 and its peak at omega = 1."""
    return CouplingFunction.from_damping(0.01, 1.0, 1)


@pytest.fixture(scope="session")
def weak_config(weak_n1):
    return ModelConfig(1.0, discretize(weak_n1, 2000, 10.0), beta=1.0, n0=1.0)


@pytest.fixture
def resonant_pair():
    return ModelConfig(1.0, BathSpec([1.0], [0.1]))


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for an acceptance criterion and return the verdict."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(criterion: int, title: str, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'} criterion {criterion:>2} {title}: {detail}"
        lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
