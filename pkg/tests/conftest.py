import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nvberry import critical_ratio, default_scenario

settings.register_profile(
    "nvberry", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("nvberry")


def at_critical(theta, beta, factor=1.0, **overrides):
    s = default_scenario("nv14n", **overrides).with_rotation(theta=theta, beta=beta)
    return s.with_ratio(factor * critical_ratio(theta, beta))


def with_chi(s, chi):
    return s.with_rotation(omega_gamma=s.species.quad_split / (2.0 * chi))


@pytest.fixture
def nv():
    return default_scenario("nv14n")


@pytest.fixture
def static_beta0(nv):
    return nv.with_rotation(beta=0.0)


@pytest.fixture
def no_nutation(nv):
    return nv.with_ratio(0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


HALF_PI = math.pi / 2


ACCEPTANCE: dict = {}


def report(number, title, ok, detail, elapsed, limit):
    """Record one acceptance line; the criterion passes only inside its time budget."""
    within = elapsed <= limit
    passed = bool(ok) and within
    line = (f"CRITERION {number:2d} [{'PASS' if passed else 'FAIL'}] {title}: {detail} "
            f"({elapsed:.1f} s of {limit:g} s)")
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
