"""Scene description and camera/target view geometry.

Conventions used throughout the package:

* lengths are millimetres, angles radians;
* ``pan = tilt = 0`` points the optical axis straight down, ``(0, 0, -1)``;
  tilt swings the axis toward the horizon, pan rotates it about world z;
* roll is always zero.  The image x-axis is the horizontal unit vector
  ``(-sin(pan), cos(pan), 0)`` and the image y-axis is ``axis x image_x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

Vec3 = Tuple[float, float, float]

DEFAULT_PAN_BOUNDS = (-math.pi, math.pi)
DEFAULT_TILT_BOUNDS = (0.0, math.pi / 2)
DRONE_MIN_HEIGHT = 1000.0


class GeometryError(ValueError):
    """Raised when a camera/target pair has no well-defined view geometry."""


def _vec3(values: Sequence[float], name: str) -> Vec3:
    arr = tuple(float(v) for v in values)
    if len(arr) != 3:
        raise ValueError(f"{name} must have 3 components, got {len(arr)}")
    if not all(math.isfinite(v) for v in arr):
        raise ValueError(f"{name} must be finite, got {arr}")
    return arr  # type: ignore[return-value]


@dataclass(frozen=True)
class DistortionCoefficients:
    """Brown-Conrady coefficients in cone-edge normalised coordinates.

    The radial factor is ``(1 + k1 r^2 + k2 r^4 + k3 r^6) / (1 + k4 r^2 + k5 r^4 + k6 r^6)``
    and ``s1``/``s2`` are the tangential terms.  Normalisation divides by
    ``tan(alpha)`` so the edge of the field of view sits at ``r = 1``.
    """

    k1: float = 0.0
    k2: float = 0.0
    k3: float = 0.0
    k4: float = 0.0
    k5: float = 0.0
    k6: float = 0.0
    s1: float = 0.0
    s2: float = 0.0

    def __post_init__(self):
        for name, value in zip(self.names(), self.as_tuple()):
            if not math.isfinite(value):
                raise ValueError(f"distortion coefficient {name} must be finite, got {value}")
        # the reachable normalised radius inside the cone is [0, 1]
        r2 = np.linspace(0.0, 1.0, 1001)
        den = 1.0 + self.k4 * r2 + self.k5 * r2**2 + self.k6 * r2**3
        if np.any(den <= 0.0):
            raise ValueError("distortion model singular: radial denominator is not positive on r <= 1")

    @staticmethod
    def names() -> Tuple[str, ...]:
        return ("k1", "k2", "k3", "k4", "k5", "k6", "s1", "s2")

    def as_tuple(self) -> Tuple[float, ...]:
        return (self.k1, self.k2, self.k3, self.k4, self.k5, self.k6, self.s1, self.s2)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=float)

    @property
    def is_zero(self) -> bool:
        return not any(self.as_tuple())


@dataclass(frozen=True)
class CameraIntrinsics:
    half_angle_alpha: float
    resolution_w: int
    distortion: DistortionCoefficients = field(default_factory=DistortionCoefficients)

    def __post_init__(self):
        if not 0.0 < self.half_angle_alpha < math.pi / 2:
            raise ValueError(f"half_angle_alpha must lie in (0, pi/2), got {self.half_angle_alpha}")
        if int(self.resolution_w) != self.resolution_w or self.resolution_w < 1:
            raise ValueError(f"resolution_w must be a positive integer, got {self.resolution_w}")


@dataclass(frozen=True)
class CameraPose:
    position_o: Vec3
    pan: float = 0.0
    tilt: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position_o", _vec3(self.position_o, "position_o"))
        if not (math.isfinite(self.pan) and math.isfinite(self.tilt)):
            raise ValueError("pan and tilt must be finite")

    @property
    def axis(self) -> np.ndarray:
        return optical_axis(self)


@dataclass(frozen=True)
class CameraBounds:
    """Admissible range of a camera's decision variables.

    ``position_min``/``position_max`` of ``None`` mean "derive from the
    workspace" (drone mode fills them in).
    """

    pan: Tuple[float, float] = DEFAULT_PAN_BOUNDS
    tilt: Tuple[float, float] = DEFAULT_TILT_BOUNDS
    position_min: Optional[Vec3] = None
    position_max: Optional[Vec3] = None

    def __post_init__(self):
        for name in ("pan", "tilt"):
            lo, hi = (float(v) for v in getattr(self, name))
            if not lo <= hi:
                raise ValueError(f"{name} bounds must satisfy lo <= hi, got [{lo}, {hi}]")
            object.__setattr__(self, name, (lo, hi))
        if (self.position_min is None) != (self.position_max is None):
            raise ValueError("position_min and position_max must be given together")
        if self.position_min is not None:
            lo = _vec3(self.position_min, "position_min")
            hi = _vec3(self.position_max, "position_max")
            if any(a > b for a, b in zip(lo, hi)):
                raise ValueError(f"position bounds must satisfy min <= max, got {lo} / {hi}")
            object.__setattr__(self, "position_min", lo)
            object.__setattr__(self, "position_max", hi)


@dataclass(frozen=True)
class Camera:
    id: str
    intrinsics: CameraIntrinsics
    pose: CameraPose
    bounds: CameraBounds = field(default_factory=CameraBounds)


@dataclass(frozen=True)
class Target:
    id: str
    position_p: Vec3

    def __post_init__(self):
        object.__setattr__(self, "position_p", _vec3(self.position_p, "position_p"))


@dataclass(frozen=True)
class Workspace:
    min: Vec3
    max: Vec3

    def __post_init__(self):
        lo = _vec3(self.min, "workspace.min")
        hi = _vec3(self.max, "workspace.max")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"workspace min must not exceed max, got {lo} / {hi}")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    def contains(self, point: Sequence[float], tol: float = 1e-9) -> bool:
        return all(lo - tol <= v <= hi + tol for v, lo, hi in zip(point, self.min, self.max))


@dataclass(frozen=True)
class Scene:
    cameras: Tuple[Camera, ...]
    targets: Tuple[Target, ...]
    workspace: Workspace

    def __post_init__(self):
        object.__setattr__(self, "cameras", tuple(self.cameras))
        object.__setattr__(self, "targets", tuple(self.targets))
        if not self.cameras:
            raise ValueError("scene needs at least one camera")
        if not self.targets:
            raise ValueError("scene needs at least one target")
        for kind, items in (("camera", self.cameras), ("target", self.targets)):
            seen = set()
            for item in items:
                if item.id in seen:
                    raise ValueError(f"duplicate {kind} id {item.id!r}")
                seen.add(item.id)
        for cam in self.cameras:
            if not self.workspace.contains(cam.pose.position_o):
                raise ValueError(f"camera {cam.id!r} lies outside the workspace")
        for tgt in self.targets:
            if not self.workspace.contains(tgt.position_p):
                raise ValueError(f"target {tgt.id!r} lies outside the workspace")

    @property
    def n_cameras(self) -> int:
        return len(self.cameras)

    @property
    def n_targets(self) -> int:
        return len(self.targets)

    def with_poses(self, poses: Sequence[CameraPose]) -> "Scene":
        if len(poses) != self.n_cameras:
            raise ValueError(f"expected {self.n_cameras} poses, got {len(poses)}")
        cams = tuple(replace(cam, pose=pose) for cam, pose in zip(self.cameras, poses))
        return replace(self, cameras=cams)

    def target_positions(self) -> np.ndarray:
        return np.array([t.position_p for t in self.targets], dtype=float)


@dataclass(frozen=True)
class ViewGeometry:
    beta: float
    gamma: float
    distance: float


# ---------------------------------------------------------------------------
# Orientation
# ---------------------------------------------------------------------------


def axis_from_angles(pan, tilt) -> np.ndarray:
    """Optical axis for (arrays of) pan/tilt angles; last dimension is xyz."""
    pan = np.asarray(pan, dtype=float)
    tilt = np.asarray(tilt, dtype=float)
    st = np.sin(tilt)
    return np.stack([st * np.cos(pan), st * np.sin(pan), -np.cos(tilt)], axis=-1)


def image_x_from_pan(pan) -> np.ndarray:
    pan = np.asarray(pan, dtype=float)
    return np.stack([-np.sin(pan), np.cos(pan), np.zeros_like(pan)], axis=-1)


def optical_axis(pose: CameraPose) -> np.ndarray:
    return axis_from_angles(pose.pan, pose.tilt)


def camera_frame(pose: CameraPose) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(image_x, image_y, axis)`` as a right-handed orthonormal triple."""
    axis = optical_axis(pose)
    ex = image_x_from_pan(pose.pan)
    ey = np.cross(axis, ex)
    return ex, ey, axis


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------


def view_geometry(pose: CameraPose, target: Target) -> ViewGeometry:
    d = np.subtract(target.position_p, pose.position_o)
    dist = float(np.linalg.norm(d))
    if dist == 0.0:
        raise GeometryError("degenerate geometry: target coincides with camera position")
    ex, ey, axis = camera_frame(pose)
    cos_beta = min(1.0, max(-1.0, float(d @ axis) / dist))
    beta = math.acos(cos_beta)
    u, v = float(d @ ex), float(d @ ey)
    if beta == 0.0 or (u == 0.0 and v == 0.0):
        gamma = 0.0
    else:
        gamma = math.atan2(v, u)
        if gamma == -math.pi:
            gamma = math.pi
    return ViewGeometry(beta=beta, gamma=gamma, distance=dist)


def visibility(geom: ViewGeometry, intr: CameraIntrinsics) -> int:
    return int(geom.beta <= intr.half_angle_alpha)
