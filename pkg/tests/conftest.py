import numpy as np
import pytest

from singular_ode.core import SystemSpec
from singular_ode.hypotheses import EquilibriumManifold

_ACCEPTANCE = {}


def perturbed_slaving(kappa=1.0, rate=0.5):
    """Linear slaving with a slow rate ``rate`` and the coupling kappa*u1*u2 in the slow row."""
    return SystemSpec(
        dim=3,
        F=lambda U: np.array([U[2] * (-rate * U[0] + kappa * U[0] * U[1]), -U[1], 0.0 * U[2]]),
        zeta=lambda U: U[2],
        name="perturbed_slaving",
    )


def epsilon_axis():
    return EquilibriumManifold(param=lambda s: np.array([0.0, 0.0, s[0]]), dim=1, origin_param=np.zeros(1),
                               tangent=lambda s: np.array([[0.0], [0.0], [1.0]]))


def center_example():
    """x' = x y, y' = -y - x**2 (its center manifold is y = -x**2 + O(x**4))."""
    return SystemSpec(dim=2, F=lambda U: np.array([U[0] * U[1], -U[1] - U[0] ** 2]), zeta=lambda U: U[0])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_runtest_logreport(report):
    if report.when == "call" and "acceptance" in report.keywords:
        name = report.nodeid.split("::")[-1]
        _ACCEPTANCE[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"{_ACCEPTANCE[name]}  {name}")
