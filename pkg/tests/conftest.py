import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fabric_mpc.cloth import init_flat
from fabric_mpc.policy import tier_start

from .helpers import ACCEPTANCE

settings.register_profile(
    "default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def flat():
    return init_flat()


@pytest.fixture(scope="session")
def tier_states():
    """Two start states per tier, fixed seeds."""
    return {t: [tier_start(t, np.random.default_rng(s)) for s in (0, 1)] for t in (0, 1, 2, 3)}



def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: numbered acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
