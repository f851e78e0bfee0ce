"""Shared fixtures and small data builders used across the test suite."""

import numpy as np
import pytest

from krf.geometry import ColoredPointCloud, Frame, PoseSE3, random_rotation


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def make_cloud(rng, n, colored=True, frame=Frame.CAMERA, scale=1.0):
    """A random cloud; colored=True gives every point a color in [0, 1]."""
    positions = rng.uniform(-scale, scale, size=(n, 3))
    if not colored:
        return ColoredPointCloud.uncolored(positions, frame=frame)
    colors = rng.uniform(0.0, 1.0, size=(n, 3))
    return ColoredPointCloud.colored(positions, colors, frame=frame)


def make_mixed_cloud(rng, n, frame=Frame.CAMERA):
    """A cloud where roughly half the points carry color."""
    positions = rng.uniform(-1.0, 1.0, size=(n, 3))
    colors = rng.uniform(0.0, 1.0, size=(n, 3))
    mask = rng.random(n) < 0.5
    return ColoredPointCloud(positions=positions, colors=colors, color_mask=mask, frame=frame)


def make_pose(rng, max_translation=0.5):
    return PoseSE3(
        rotation=random_rotation(rng),
        translation=rng.uniform(-max_translation, max_translation, size=3),
    )
