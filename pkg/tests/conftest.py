"""Shared fixtures: common grids and the acceptance result recorder."""

import numpy as np
import pytest

from schrodecay.grids import GridSpec, WaveField, field_from_callable


class AcceptanceLog:
    """Collects one pass/fail line per acceptance criterion."""

    def __init__(self):
        self.lines = {}

    def record(self, number: int, passed: bool, detail: str):
        self.lines[number] = (passed, detail)
        assert passed, f"acceptance criterion {number:02d}: {detail}"


_LOG = AcceptanceLog()


@pytest.fixture(scope="session")
def acceptance():
    return _LOG


def pytest_terminal_summary(terminalreporter):
    if not _LOG.lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_LOG.lines):
        passed, detail = _LOG.lines[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(
            f"acceptance criterion {number:02d}: {verdict} - {detail}")


@pytest.fixture(scope="session")
def grid1d():
    return GridSpec(1, 20.0, 1024)


@pytest.fixture(scope="session")
def grid2d():
    return GridSpec(2, 12.0, 256)


@pytest.fixture(scope="session")
def gaussian1d(grid1d):
    return field_from_callable(lambda xs: np.exp(-xs[0] ** 2 / 2.0), grid1d)


def make_band_limited(grid: GridSpec, time: float = 0.0) -> WaveField:
    """Smooth asymmetric field that is negligible at the box boundary."""
    def fn(xs):
        r2 = sum(np.asarray(x) ** 2 for x in xs)
        lin = sum((0.3 + 0.1j * j) * np.asarray(x) for j, x in enumerate(xs))
        return (1.0 + lin) * np.exp(-r2 / 2.0)

    fld = field_from_callable(fn, grid)
    return WaveField(grid, fld.values, time)
