import numpy as np
import pytest

from ghostfringe import (
    DoubleSlitSpec,
    ExperimentLayout,
    SourceSpec,
    SpatialGrid,
    canonical_aperture_pair,
)


@pytest.fixture(scope="session")
def layout():
    return ExperimentLayout()


@pytest.fixture(scope="session")
def slit():
    return DoubleSlitSpec()


@pytest.fixture(scope="session")
def broadband_source():
    return SourceSpec(correlation_length=0.0)


@pytest.fixture(scope="session")
def quad_grid():
    # satisfies the quadrature sampling bound for the bench layout:
    # spacing 0.977 um <= lambda * L0 / (2 * window) = 3.34 um
    return SpatialGrid(window=8e-3, samples=8192)


@pytest.fixture(scope="session")
def quad_apertures(slit, quad_grid):
    return canonical_aperture_pair(slit, 920e-6, quad_grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
