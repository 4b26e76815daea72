import sys

import numpy as np
import pytest
from hypothesis import settings

from ehcr import SystemParams, derived_coefficients, sample_realization, scenario_variances

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def make_instance():
    def build(m, seed, scenario="baseline", **params):
        real = sample_realization(scenario_variances(scenario), m, seed)
        return derived_coefficients(SystemParams(**params), real)
    return build


def single_slot(h_pp=1.0, h_ps=1.0, h_sp=1.0, h_ss=1.0, **params):
    from ehcr import ChannelRealization
    real = ChannelRealization(np.array([h_pp]), np.array([h_ps]), np.array([h_sp]), np.array([h_ss]))
    return derived_coefficients(SystemParams(**params), real)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
