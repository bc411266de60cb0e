"""Shared fixtures: small deterministic rasters reused across test modules."""

from __future__ import annotations

import numpy as np
import pytest

from selene_noise import ImageGrid, TerrainParams, generate_terrain, make_shifted_pair


@pytest.fixture(scope="session")
def terrain_small() -> "ImageGrid":
    """128x320 fixed-seed terrain; tall enough for a shift-97 pair."""
    return generate_terrain(TerrainParams(width=128, height=320, seed=7))


@pytest.fixture(scope="session")
def pair_small(terrain_small):
    """(left, right, truth) self-stereo pair at the default 97-pixel shift."""
    return make_shifted_pair(terrain_small, 97)


@pytest.fixture()
def textured_64() -> ImageGrid:
    """Small broadband-texture image for matcher unit tests."""
    rng = np.random.default_rng(42)
    base = rng.normal(1000.0, 80.0, size=(64, 64))
    # a light smoothing keeps the correlation peak well-behaved
    smooth = (
        base
        + np.roll(base, 1, 0) + np.roll(base, -1, 0)
        + np.roll(base, 1, 1) + np.roll(base, -1, 1)
    ) / 5.0
    return ImageGrid(smooth, bit_depth=14)
