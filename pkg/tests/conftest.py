from __future__ import annotations

import numpy as np
import pytest

from equisphere.mesh import TriMesh, normalize_area
from equisphere.sem import SEMConfig, run_sem
from equisphere.synth import ellipsoid, icosphere

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def ico2():
    return normalize_area(TriMesh.from_arrays(*icosphere(2)))


@pytest.fixture(scope="session")
def ell2():
    return normalize_area(TriMesh.from_arrays(*ellipsoid((1.0, 1.0, 1.5), 2)))


@pytest.fixture(scope="session")
def ell3():
    return normalize_area(TriMesh.from_arrays(*ellipsoid((1.0, 1.0, 1.5), 3)))


@pytest.fixture(scope="session")
def ell3_run(ell3):
    """Ellipsoid run to the default energy tolerance with every sweep recorded."""
    snaps: list = []
    state, report = run_sem(ell3, SEMConfig(), snapshots=snaps)
    return ell3, state, report, snaps


@pytest.fixture(scope="session")
def ell2_run(ell2):
    snaps: list = []
    state, report = run_sem(ell2, SEMConfig(max_iter=8, tol=1e-14), snapshots=snaps)
    return ell2, state, report, snaps
