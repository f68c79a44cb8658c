import numpy as np
import pytest

from swrdd.drivers import RunConfig


def small_config(**kw):
    """Short window on a narrow strip around the Gaussian, fast enough for unit tests."""
    base = dict(a0=-14.0, b0=-6.0, T=0.05, dt=1e-3, dx=0.02, n_sub=2, potential="harmonic_neg")
    base.update(kw)
    return RunConfig(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
