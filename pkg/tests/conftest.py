import math
import sys

import pytest

from wgqkd.channel import ChannelParams
from wgqkd.scattering import EmitterSpec, PulseSpec, count_channel_distributions


@pytest.fixture(scope="session")
def gys():
    return ChannelParams()


@pytest.fixture(scope="session")
def emitter20():
    return EmitterSpec.from_purcell(20.0)


@pytest.fixture(scope="session")
def signal_counts(emitter20):
    """n̄=1, σ=Γ/2, P=20: the signal state of the emitter source."""
    return count_channel_distributions(emitter20, PulseSpec(1.0, 0.5))


@pytest.fixture(scope="session")
def lossless():
    return EmitterSpec(1.0, 0.0)


def purcell_emitter(p):
    return EmitterSpec.from_purcell(math.inf if p == "inf" else float(p))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
