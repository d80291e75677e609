"""Shared fixtures and cached builders for the test suite.

Converged complexes are expensive relative to the assertions run against
them, so they are built once per session and shared. Tests must treat the
cached objects as read-only; anything that rewrites sector data has to work
on a copy (surgery already deep-copies its input).
"""
import functools
import logging

import pytest

from ksurf import (
    CurvatureFamily,
    CurvatureSpec,
    IterationConfig,
    SectorSpec,
    auto_schedule,
    patch_sectors,
    symmetric_angles,
)

logging.getLogger("ksurf").setLevel(logging.WARNING)


@functools.lru_cache(maxsize=None)
def build_patched(family: str, epsilon: float, n: int, extent: float, grid: int,
                  tol: float = 1e-4, max_iters: int = 200):
    """Converged 2n-sector complex, cached for the whole session."""
    curv = CurvatureSpec(family=CurvatureFamily[family], epsilon=epsilon)
    spec = SectorSpec(u_max=extent, v_max=extent, I=grid, J=grid)
    cfg = IterationConfig(tol=tol, max_iters=max_iters,
                          epsilon_schedule=auto_schedule(epsilon))
    return patch_sectors(symmetric_angles(n), spec, curv, cfg)


@pytest.fixture(scope="session")
def pseudosphere_n2():
    """Constant-curvature 4-sector complex, 12x12 per sector."""
    return build_patched("CONSTANT", 0.0, 2, 1.0, 12)


@pytest.fixture(scope="session")
def linear_n2():
    """Linearly growing curvature, epsilon 1, 4 sectors, 12x12."""
    return build_patched("LINEAR", 1.0, 2, 1.0, 12)
