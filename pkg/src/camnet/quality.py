"""Single-camera sensing quality in millimetres per pixel.

The quality of a camera/target pair is the length on the target plane
covered by one pixel at the target's image location: a perspective part
that grows with axial depth, times a dimensionless distortion part taken
from the diagonal of the Brown-Conrady Jacobian.  Lower is better.

All array helpers broadcast; coefficient arrays carry the eight
coefficients ``k1..k6, s1, s2`` in their last dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .scene import CameraIntrinsics, DistortionCoefficients, ViewGeometry

FD_STEP = 1e-6
SINGULAR_TOL = 1e-12


class DistortionSingularError(ValueError):
    pass


class BehindCameraError(ValueError):
    pass


@dataclass(frozen=True)
class QualityBreakdown:
    q_p: float
    q_d: float
    q_total: float


def _coeff_array(coeffs) -> np.ndarray:
    if isinstance(coeffs, DistortionCoefficients):
        return coeffs.as_array()
    return np.asarray(coeffs, dtype=float)


def radial_factor(r2, coeffs) -> np.ndarray:
    c = _coeff_array(coeffs)
    k1, k2, k3, k4, k5, k6 = (c[..., i] for i in range(6))
    num = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))
    den = 1.0 + r2 * (k4 + r2 * (k5 + r2 * k6))
    if np.any(np.abs(den) < SINGULAR_TOL):
        raise DistortionSingularError("distortion model singular")
    return num / den


def distort_xy(x, y, coeffs) -> Tuple[np.ndarray, np.ndarray]:
    c = _coeff_array(coeffs)
    s1, s2 = c[..., 6], c[..., 7]
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r2 = x * x + y * y
    kr = radial_factor(r2, c)
    xd = x * kr + 2.0 * s1 * x * y + s2 * (r2 + 2.0 * x * x)
    yd = y * kr + s1 * (r2 + 2.0 * y * y) + 2.0 * s2 * x * y
    return xd, yd


def distort(point, coeffs: DistortionCoefficients) -> Tuple[float, float]:
    """Map an undistorted normalised point ``(x, y)`` to its distorted image."""
    xd, yd = distort_xy(point[0], point[1], coeffs)
    return float(xd), float(yd)


def jacobian_diagonal_xy(x, y, coeffs, h: float = FD_STEP) -> Tuple[np.ndarray, np.ndarray]:
    """Central-difference ``dx'/dx`` and ``dy'/dy``.

    The divisor is the representable step actually taken, so linear maps
    (in particular the identity) come out exact.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xp, xm = x + h, x - h
    yp, ym = y + h, y - h
    # one stacked evaluation: (x+h, y), (x-h, y), (x, y+h), (x, y-h)
    xd, yd = distort_xy(np.stack([xp, xm, x, x]), np.stack([y, y, yp, ym]), coeffs)
    dxx = (xd[0] - xd[1]) / (xp - xm)
    dyy = (yd[2] - yd[3]) / (yp - ym)
    return dxx, dyy


def distortion_jacobian(point, coeffs: DistortionCoefficients) -> Tuple[float, float]:
    dxx, dyy = jacobian_diagonal_xy(point[0], point[1], coeffs)
    return float(dxx), float(dyy)


def distortion_jacobian_analytic(point, coeffs: DistortionCoefficients) -> Tuple[float, float]:
    """Closed-form diagonal of the Brown-Conrady Jacobian (cross-check only)."""
    k1, k2, k3, k4, k5, k6, s1, s2 = coeffs.as_tuple()
    x, y = float(point[0]), float(point[1])
    r2 = x * x + y * y
    num = 1.0 + k1 * r2 + k2 * r2**2 + k3 * r2**3
    den = 1.0 + k4 * r2 + k5 * r2**2 + k6 * r2**3
    if abs(den) < SINGULAR_TOL:
        raise DistortionSingularError("distortion model singular")
    dnum = k1 + 2 * k2 * r2 + 3 * k3 * r2**2
    dden = k4 + 2 * k5 * r2 + 3 * k6 * r2**2
    kr = num / den
    dkr = (dnum * den - num * dden) / den**2  # d K / d(r^2)
    dxx = kr + 2 * x * x * dkr + 2 * s1 * y + 6 * s2 * x
    dyy = kr + 2 * y * y * dkr + 6 * s1 * y + 2 * s2 * x
    return dxx, dyy


# ---------------------------------------------------------------------------
# Per-pair quality, array form
# ---------------------------------------------------------------------------


def perspective_quality_array(beta, distance, alpha, w) -> np.ndarray:
    return 2.0 * distance * np.cos(beta) * np.tan(alpha) / w


def normalized_projection_array(beta, gamma, alpha) -> Tuple[np.ndarray, np.ndarray]:
    rho = np.tan(beta) / np.tan(alpha)
    return rho * np.cos(gamma), rho * np.sin(gamma)


def distortion_quality_array(beta, gamma, alpha, coeffs) -> np.ndarray:
    x, y = normalized_projection_array(beta, gamma, alpha)
    dxx, dyy = jacobian_diagonal_xy(x, y, coeffs)
    return dxx * dyy


# ---------------------------------------------------------------------------
# Per-pair quality, scalar form
# ---------------------------------------------------------------------------


def _check_front(geom: ViewGeometry) -> None:
    if not geom.beta < math.pi / 2:
        raise BehindCameraError("behind camera plane")


def perspective_quality(geom: ViewGeometry, intr: CameraIntrinsics) -> float:
    _check_front(geom)
    return float(perspective_quality_array(geom.beta, geom.distance,
                                           intr.half_angle_alpha, intr.resolution_w))


def normalized_projection(geom: ViewGeometry, intr: CameraIntrinsics) -> Tuple[float, float]:
    """Undistorted image point scaled so the edge of the cone has radius 1."""
    _check_front(geom)
    x, y = normalized_projection_array(geom.beta, geom.gamma, intr.half_angle_alpha)
    return float(x), float(y)


def distortion_quality(geom: ViewGeometry, intr: CameraIntrinsics) -> float:
    dxx, dyy = distortion_jacobian(normalized_projection(geom, intr), intr.distortion)
    return dxx * dyy


def pair_quality(geom: ViewGeometry, intr: CameraIntrinsics) -> QualityBreakdown:
    q_p = perspective_quality(geom, intr)
    q_d = distortion_quality(geom, intr)
    return QualityBreakdown(q_p=q_p, q_d=q_d, q_total=q_p * q_d)
