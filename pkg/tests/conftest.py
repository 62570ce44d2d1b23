import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

from starjam.channels import generate_channels  # noqa: E402
from starjam.config import SystemConfig  # noqa: E402


@pytest.fixture
def desk_cfg():
    return SystemConfig(K=8, N=2).with_power_dbm(20)


@pytest.fixture
def desk_channels(desk_cfg):
    return generate_channels(desk_cfg, 7)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = sorted(getattr(mod, "RESULTS", []), key=lambda s: int(s.split()[1]))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for ln in lines:
        terminalreporter.write_line(ln)
    out = os.path.join(os.path.dirname(os.path.dirname(__file__)), "acceptance_results.txt")
    with open(out, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def random_channels(rng, K, N):
    from starjam.channels import ChannelRealization

    def cn(*shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    return ChannelRealization(cn(K, N), cn(K), cn(K), cn(K), cn(N), cn(N), 0)
