import math

import numpy as np
import pytest

from camnet.scene import (
    Camera,
    CameraIntrinsics,
    CameraPose,
    DistortionCoefficients,
    Scene,
    Target,
    Workspace,
)

ROOM = Workspace((0.0, 0.0, 0.0), (5000.0, 3000.0, 2500.0))


def make_camera(cid="cam0", position=(0.0, 0.0, 3000.0), pan=0.0, tilt=0.0,
                alpha=math.pi / 4, w=1000, **coeffs):
    return Camera(cid, CameraIntrinsics(alpha, w, DistortionCoefficients(**coeffs)),
                  CameraPose(position, pan, tilt))


def random_room_scene(rng, n_cameras, n_targets, k1=0.1, ceiling=2500.0):
    """Ceiling-mounted cameras looking down at floor targets in a 5 m x 3 m room."""
    cams = []
    for i in range(n_cameras):
        pos = (rng.uniform(0, 5000), rng.uniform(0, 3000), ceiling)
        intr = CameraIntrinsics(rng.uniform(0.5, 0.75), int(rng.integers(800, 2000)),
                                DistortionCoefficients(k1=k1 * rng.uniform(0.5, 1.5)))
        cams.append(Camera(f"cam{i}", intr, CameraPose(pos, 0.0, 0.0)))
    tgts = [Target(f"t{j}", (rng.uniform(200, 4800), rng.uniform(200, 2800), 0.0))
            for j in range(n_targets)]
    return Scene(cams, tgts, Workspace((0.0, 0.0, 0.0), (5000.0, 3000.0, ceiling)))


@pytest.fixture
def single_camera_scene():
    return Scene([make_camera()], [Target("origin", (0.0, 0.0, 0.0))],
                 Workspace((-3000.0, -3000.0, 0.0), (3000.0, 3000.0, 3000.0)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
