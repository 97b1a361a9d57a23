"""
Shared fixtures: small Hough grids, lattices and mapping tables built once per session.
"""

import numpy as np
import pytest
import structlog

from vp_core.camera.models import CameraIntrinsics
from vp_core.config import RunConfig
from vp_core.detect.models import DetectorConfig, ScaleSpec
from vp_core.hough.models import HoughParams
from vp_core.sphere.lattice import fibonacci_hemisphere
from vp_core.sphere.mapping import build_mapping
from vp_core.sphere.models import LatticeConfig, MappingConfig

SMALL_SIDE = 64
SMALL_POINTS = 2048
SMALL_K = 8
SMALL_M = 256


@pytest.fixture(scope="session")
def small_params() -> HoughParams:
    return HoughParams(n_rho=46, n_theta=45, grid_side=SMALL_SIDE)


@pytest.fixture(scope="session")
def grid_camera() -> CameraIntrinsics:
    return CameraIntrinsics(
        focal=2.1 * SMALL_SIDE,
        cx=SMALL_SIDE / 2,
        cy=SMALL_SIDE / 2,
        width=SMALL_SIDE,
        height=SMALL_SIDE,
    )


@pytest.fixture(scope="session")
def small_lattice():
    return fibonacci_hemisphere(SMALL_POINTS, k=SMALL_K)


@pytest.fixture(scope="session")
def small_mapping(small_params, small_lattice, grid_camera):
    return build_mapping(small_params, small_lattice, grid_camera, MappingConfig(m_samples=SMALL_M))


@pytest.fixture
def small_config(small_params) -> RunConfig:
    return RunConfig(
        hough=small_params,
        lattice=LatticeConfig(n_points=SMALL_POINTS, k=SMALL_K),
        mapping=MappingConfig(m_samples=SMALL_M),
        detector=DetectorConfig(
            scales=[
                ScaleSpec(delta_deg=90.0, n_points=256),
                ScaleSpec(delta_deg=13.0, n_points=64),
                ScaleSpec(delta_deg=4.0, n_points=64),
            ]
        ),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def _restore_structlog_config():
    # configure_logging() binds structlog to the current sys.stderr, which pytest
    # swaps per test and closes afterwards; restore the prior config after each test.
    saved = structlog.get_config()
    yield
    structlog.configure(**saved)
