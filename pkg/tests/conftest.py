from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lowscat import anisotropic_power, coulomb, power_law

settings.register_profile("lowscat", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lowscat")

# criterion number -> (title, passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def record():
    def _record(num: int, title: str, passed: bool, detail: str = "") -> None:
        ACCEPTANCE[num] = (title, bool(passed), detail)
        print(f"[{'PASS' if passed else 'FAIL'}] criterion {num:2d}: {title} {detail}")
    return _record


@pytest.fixture(scope="session")
def coulomb_pot():
    return coulomb(1.0)


@pytest.fixture(scope="session")
def mu1_pot():
    return power_law(1.0, 1.0)


@pytest.fixture(scope="session")
def weak_dipole():
    """Small anisotropic perturbation for mu = 1 with eps2 = (2 - mu)/4."""
    return anisotropic_power(0.05, 0.25, 1.0, [0.0, 1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:2d} {title}: {detail}")
