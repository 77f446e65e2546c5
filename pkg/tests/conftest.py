import numpy as np
import pytest
from hypothesis import settings

from goldenquant.codebook import SourceModel
from goldenquant.lloydmax import optimize_lloydmax
from goldenquant.quadrature import QuadratureGrid

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture(scope="session")
def unit_source():
    return SourceModel(1.0)


@pytest.fixture(scope="session")
def coarse_grid():
    return QuadratureGrid.for_source(1.0, resolution=512)


@pytest.fixture(scope="session")
def lloydmax_runs():
    """Lloyd-Max GQ at N = 16, 64, 256 with the default 2048-point grid."""
    return {N: optimize_lloydmax(N, 1.0) for N in (16, 64, 256)}


def brute_force_nearest(centroids, points):
    """Exhaustive scan; np.argmin picks the first (smallest) index on ties."""
    c = np.asarray(centroids)
    p = np.asarray(points)
    dx = p.real[:, None] - c.real[None, :]
    dy = p.imag[:, None] - c.imag[None, :]
    return np.argmin(dx * dx + dy * dy, axis=1) + 1


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
