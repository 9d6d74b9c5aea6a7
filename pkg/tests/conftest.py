import numpy as np
import pytest

from chaosmeter.model import ModelSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def gauss11():
    return ModelSpec(a=1.0, b=1.0)


@pytest.fixture
def tabulated():
    # v'(r) = min(r, 1) / 2: convex, bounded gradient, L = 0.5
    return ModelSpec(
        a=1.0,
        interaction="tabulated",
        table_r=(0.0, 1.0, 2.0),
        table_dv=(0.0, 0.5, 0.5),
    )


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for num in sorted(results):
            terminalreporter.write_line(results[num])
