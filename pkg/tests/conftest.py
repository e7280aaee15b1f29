from functools import lru_cache

import pytest

from sqzest import oracle
from sqzest.channel import ChannelParams


@lru_cache(maxsize=None)
def roat_state(n, chi):
    return oracle.build_roat_state(n, chi)


@lru_cache(maxsize=None)
def output_state(n, chi, eta, phi=0.0):
    return oracle.evolve_density(roat_state(n, chi), ChannelParams(eta, phi))


@lru_cache(maxsize=None)
def output_stats(n, chi, eta, phi=0.0):
    return oracle.operator_stats(output_state(n, chi, eta, phi))


@pytest.fixture
def report_line(capsys):
    """Print a line that survives pytest's output capture."""
    def emit(text):
        with capsys.disabled():
            print(text)
    return emit
