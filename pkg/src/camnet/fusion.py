"""Multi-camera fusion of per-pair quality into a per-target error bound.

Visible cameras combine harmonically, ``1 / sum(1 / Q_i)``; a target seen
by nobody is uncovered and carries ``inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .quality import (
    QualityBreakdown,
    distortion_quality_array,
    pair_quality,
    perspective_quality_array,
)
from .scene import (
    GeometryError,
    Scene,
    ViewGeometry,
    axis_from_angles,
    image_x_from_pan,
    view_geometry,
    visibility,
)


class NonPositiveQualityError(ValueError):
    pass


@dataclass(frozen=True)
class Contributor:
    camera_index: int
    q: Optional[float]
    visible: int


@dataclass(frozen=True)
class TargetFusion:
    target_id: str
    covered: bool
    fused_q: float
    contributors: Tuple[Contributor, ...] = ()


@dataclass(frozen=True)
class PairRecord:
    camera_index: int
    target_index: int
    camera_id: str
    target_id: str
    geometry: Optional[ViewGeometry]
    quality: Optional[QualityBreakdown]
    visible: int
    error: Optional[str] = None


@dataclass(frozen=True)
class QualityReport:
    pairs: Tuple[PairRecord, ...]
    targets: Tuple[TargetFusion, ...]

    @property
    def fused(self) -> np.ndarray:
        return np.array([t.fused_q for t in self.targets], dtype=float)

    @property
    def covered(self) -> np.ndarray:
        return np.array([t.covered for t in self.targets], dtype=bool)


def fuse_target(qualities: Sequence[Tuple[float, int]]) -> Tuple[bool, float]:
    """Fuse ``(Q, visible)`` pairs into ``(covered, fused_q)``.

    The reciprocal sum is exactly rounded (``math.fsum``), so the result
    does not depend on contributor order.  The exact value never exceeds
    the smallest contributor; capping at it removes the one-ulp excess the
    double reciprocal can leave (a lone camera reports exactly its own Q).
    """
    inverses = []
    smallest = math.inf
    for q, vis in qualities:
        if not vis:
            continue
        if not q > 0.0:
            raise NonPositiveQualityError(f"nonpositive quality {q}")
        inverses.append(1.0 / q)
        smallest = min(smallest, q)
    if not inverses:
        return False, math.inf
    return True, min(1.0 / math.fsum(inverses), smallest)


def fuse_scene(scene: Scene) -> QualityReport:
    pairs: List[PairRecord] = []
    per_target: List[List[Contributor]] = [[] for _ in scene.targets]
    for i, cam in enumerate(scene.cameras):
        for j, tgt in enumerate(scene.targets):
            geom = quality = None
            vis = 0
            error = None
            try:
                geom = view_geometry(cam.pose, tgt)
                if geom.beta < math.pi / 2:
                    quality = pair_quality(geom, cam.intrinsics)
                    vis = visibility(geom, cam.intrinsics)
                    if vis and not quality.q_total > 0.0:
                        raise NonPositiveQualityError(f"nonpositive quality {quality.q_total}")
            except (GeometryError, ValueError) as exc:
                vis = 0
                error = str(exc)
            pairs.append(PairRecord(i, j, cam.id, tgt.id, geom, quality, vis, error))
            per_target[j].append(Contributor(i, quality.q_total if quality else None, vis))

    targets = []
    for tgt, contribs in zip(scene.targets, per_target):
        covered, fused = fuse_target([(c.q, c.visible) for c in contribs])
        targets.append(TargetFusion(tgt.id, covered, fused, tuple(contribs)))
    return QualityReport(tuple(pairs), tuple(targets))


# ---------------------------------------------------------------------------
# Batched evaluation used by the optimizer, the grid oracle and raster maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CameraArrays:
    """Static per-camera parameters stacked for vectorised evaluation."""

    alpha: np.ndarray  # (Nc,)
    w: np.ndarray  # (Nc,)
    coeffs: np.ndarray  # (Nc, 8)
    undistorted: bool

    @classmethod
    def from_scene(cls, scene: Scene) -> "CameraArrays":
        alpha = np.array([c.intrinsics.half_angle_alpha for c in scene.cameras])
        w = np.array([c.intrinsics.resolution_w for c in scene.cameras], dtype=float)
        coeffs = np.array([c.intrinsics.distortion.as_tuple() for c in scene.cameras])
        return cls(alpha, w, coeffs, not coeffs.any())


def pair_quality_batch(cams: CameraArrays, positions, pans, tilts, targets,
                       component: str = "total", return_excess: bool = False):
    """Quality and visibility for every (config, camera, target) triple.

    ``positions`` is ``(B, Nc, 3)``, ``pans``/``tilts`` are ``(B, Nc)`` and
    ``targets`` is ``(Nt, 3)``.  Returns ``Q`` and ``V`` of shape
    ``(B, Nc, Nt)``; ``Q`` is ``nan`` wherever ``V`` is false.
    ``component`` selects ``"total"``, ``"perspective"`` or ``"distortion"``.
    With ``return_excess`` a third array ``beta - alpha`` (radians outside
    the cone, ``pi`` for coincident points) is appended.
    """
    positions = np.asarray(positions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    axis = axis_from_angles(pans, tilts)[:, :, None, :]
    ex = image_x_from_pan(pans)[:, :, None, :]
    ey = np.stack([axis[..., 1] * ex[..., 2] - axis[..., 2] * ex[..., 1],
                   axis[..., 2] * ex[..., 0] - axis[..., 0] * ex[..., 2],
                   axis[..., 0] * ex[..., 1] - axis[..., 1] * ex[..., 0]], axis=-1)
    d = targets[None, None, :, :] - positions[:, :, None, :]
    dist = np.sqrt(np.einsum("...k,...k->...", d, d))
    with np.errstate(invalid="ignore", divide="ignore"):
        cosb = np.clip(np.einsum("...k,...k->...", d, axis) / dist, -1.0, 1.0)
    beta = np.arccos(cosb)
    alpha = cams.alpha[None, :, None]
    vis = (dist > 0.0) & (beta <= alpha) & (beta < math.pi / 2)

    beta_v = np.where(vis, beta, 0.0)
    q = np.full(beta.shape, np.nan)
    if component in ("total", "perspective"):
        q_p = perspective_quality_array(beta_v, np.where(vis, dist, 1.0), alpha,
                                        cams.w[None, :, None])
    else:
        q_p = np.ones_like(beta_v)
    if component in ("total", "distortion") and not cams.undistorted:
        u = np.einsum("...k,...k->...", d, ex)
        v = np.einsum("...k,...k->...", d, ey)
        gamma = np.where(vis & (beta > 0.0), np.arctan2(v, u), 0.0)
        coeffs = np.broadcast_to(cams.coeffs[None, :, None, :], beta.shape + (8,))
        q_d = distortion_quality_array(beta_v, gamma, alpha, coeffs)
    else:
        q_d = 1.0
    total = q_p * q_d
    # a folded-over lens model gives no usable pixels; mirror fuse_scene
    vis &= total > 0.0
    q[vis] = total[vis]
    if return_excess:
        return q, vis, np.where(dist > 0.0, beta - alpha, math.pi)
    return q, vis


def fuse_batch(q: np.ndarray, vis: np.ndarray) -> np.ndarray:
    """Harmonic fusion over the camera axis; ``inf`` where nothing is visible."""
    with np.errstate(divide="ignore"):
        inv = np.where(vis, 1.0 / np.where(vis, q, 1.0), 0.0).sum(axis=-2)
        return np.where(inv > 0.0, 1.0 / np.where(inv > 0.0, inv, 1.0), np.inf)
