from __future__ import annotations

import mpmath as mp
import pytest

from diffortho.measures import MeasureSpec
from diffortho.polycore import Case
from diffortho.precision import DEFAULT_PRECISION


@pytest.fixture(autouse=True)
def _precision():
    """Every test starts (and ends) at the default working precision."""
    old = mp.mp.prec
    mp.mp.prec = DEFAULT_PRECISION
    yield
    mp.mp.prec = old


@pytest.fixture
def lag_spec() -> MeasureSpec:
    return MeasureSpec(Case.laguerre(0), (1, 1))


@pytest.fixture
def herm_spec() -> MeasureSpec:
    return MeasureSpec(Case.hermite(), (1, 0, 1))


def pytest_terminal_summary(terminalreporter):
    from tests import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
