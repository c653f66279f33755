import numpy as np
import pytest

from blindgibbs import Grid


def pytest_terminal_summary(terminalreporter):
    """Echo acceptance-criterion verdict lines after the run."""
    try:
        from tests import test_acceptance
    except ImportError:
        import test_acceptance
    if test_acceptance.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_image(rng):
    return Grid(rng.uniform(0.0, 1.0, size=(12, 10)))


@pytest.fixture
def small_kernel():
    vals = np.array(
        [[0.05, 0.10, 0.05],
         [0.10, 0.40, 0.10],
         [0.05, 0.10, 0.05]]
    )
    return Grid(vals / vals.sum())
