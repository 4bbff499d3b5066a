"""Independent checks: exhaustive grid search and a pixel quantisation simulator.

``grid_search`` evaluates the same scalarised objective as the optimizer on
every vertex of a regular grid over the decision box.  The simulator pushes
segment endpoints through the pinhole + distortion model, rounds them to
the pixel lattice, back-projects them onto the horizontal plane through the
target and measures what the rounding cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .fusion import fuse_scene
from .objective import is_feasible, objective_value
from .optimizer import BatchObjective, OptResult, ReconfigProblem, apply_configuration
from .quality import distort_xy, pair_quality
from .scene import Camera, Target, camera_frame, view_geometry, visibility

DEFAULT_GRID_CAP = 10**7
CHUNK = 20000


class GridTooLargeError(ValueError):
    def __init__(self, size: int, cap: int):
        super().__init__(f"grid of {size} vertices exceeds the cap of {cap}")
        self.size = size
        self.cap = cap


class NotVisibleError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    points_per_dimension: int
    cap: int = DEFAULT_GRID_CAP

    def __post_init__(self):
        if int(self.points_per_dimension) != self.points_per_dimension or self.points_per_dimension < 2:
            raise ValueError(f"points_per_dimension must be an integer >= 2, got {self.points_per_dimension}")

    def size(self, dims: int) -> int:
        return int(self.points_per_dimension) ** dims


@dataclass
class GridResult(OptResult):
    lipschitz_slack: float = 0.0
    grid_size: int = 0


def grid_search(problem: ReconfigProblem, grid: GridSpec,
                extra_candidates: Optional[Sequence[Sequence[float]]] = None) -> GridResult:
    """Exhaustively evaluate every grid vertex and return the best one.

    ``lipschitz_slack`` is the largest objective change between the best
    vertex and any axis neighbour of the same feasibility: a local estimate
    of how much a finer grid could still gain inside the winning cell.
    Extra candidates (e.g. a solver result) compete with the vertices.
    """
    n = problem.n_vars
    size = grid.size(n)
    if size > grid.cap:
        raise GridTooLargeError(size, grid.cap)
    objective = BatchObjective(problem)
    lo, hi = objective.lo, objective.hi
    k = int(grid.points_per_dimension)
    axes = [np.linspace(a, b, k) for a, b in zip(lo, hi)]
    shape = (k,) * n

    best_idx, best_val = 0, math.inf
    for start in range(0, size, CHUNK):
        flat = np.arange(start, min(start + CHUNK, size))
        idx = np.unravel_index(flat, shape)
        configs = np.stack([axes[d][idx[d]] for d in range(n)], axis=1)
        vals = objective(configs)
        j = int(np.argmin(vals))  # first minimum keeps the lowest flat index
        if vals[j] < best_val:
            best_idx, best_val = int(flat[j]), float(vals[j])

    best_multi = np.unravel_index(best_idx, shape)
    best_config = np.array([axes[d][best_multi[d]] for d in range(n)])

    # axis neighbours of the winning vertex
    neighbours = []
    for d in range(n):
        for step in (-1, 1):
            m = best_multi[d] + step
            if 0 <= m < k:
                nb = best_config.copy()
                nb[d] = axes[d][m]
                neighbours.append(nb)
    slack = 0.0
    if neighbours:
        nb = np.array(neighbours)
        nb_vals = objective(nb)
        best_ok = bool(np.all(np.isfinite(objective.fused(best_config))))
        nb_ok = np.all(np.isfinite(objective.fused(nb)), axis=-1)
        same = nb_ok == best_ok
        if np.any(same):
            slack = float(np.max(np.abs(nb_vals[same] - best_val)))

    if extra_candidates is not None and len(extra_candidates):
        extra = np.atleast_2d(np.asarray(extra_candidates, dtype=float))
        vals = objective(extra)
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val = float(vals[j])
            best_config = np.clip(extra[j], lo, hi)

    scene, _ = apply_configuration(problem.scene, problem.mode, best_config, (lo, hi))
    report = fuse_scene(scene)
    return GridResult(
        best_config=best_config,
        best_value=objective_value(report, problem.objective),
        feasible=is_feasible(report),
        report=report,
        evals_used=objective.n_evals,
        per_start_values=[],
        scene=scene,
        lipschitz_slack=slack,
        grid_size=size,
    )


# ---------------------------------------------------------------------------
# Quantisation error simulator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorTrialStats:
    trials: int
    violations: int
    length_violations: int
    max_ratio: float
    ratio_q99: float
    mean_length_error: float
    max_length_ratio: float
    bound_q: float

    def __post_init__(self):
        if not 0 <= self.violations <= self.trials:
            raise ValueError("violations must lie in [0, trials]")


def undistort_xy(xd, yd, coeffs, iterations: int = 50, tol: float = 1e-15):
    """Invert the Brown-Conrady map by Newton iteration (finite-difference Jacobian)."""
    xd = np.asarray(xd, dtype=float)
    yd = np.asarray(yd, dtype=float)
    x, y = xd.copy(), yd.copy()
    h = 1e-7
    for _ in range(iterations):
        fx, fy = distort_xy(x, y, coeffs)
        rx, ry = fx - xd, fy - yd
        if np.max(np.abs(rx), initial=0.0) < tol and np.max(np.abs(ry), initial=0.0) < tol:
            break
        ax, ay = distort_xy(x + h, y, coeffs)
        bx, by = distort_xy(x, y + h, coeffs)
        j11, j21 = (ax - fx) / h, (ay - fy) / h
        j12, j22 = (bx - fx) / h, (by - fy) / h
        det = j11 * j22 - j12 * j21
        x = x - (j22 * rx - j12 * ry) / det
        y = y - (-j21 * rx + j11 * ry) / det
    return x, y


class PixelModel:
    """Forward/backward pixel mapping of one posed camera.

    Pixel coordinates are centred on the principal point, and ``w / 2``
    pixels span the distance from the centre to the edge of the cone.
    """

    def __init__(self, camera: Camera):
        self.camera = camera
        self.origin = np.asarray(camera.pose.position_o, dtype=float)
        self.ex, self.ey, self.axis = camera_frame(camera.pose)
        self.tan_alpha = math.tan(camera.intrinsics.half_angle_alpha)
        self.half_w = camera.intrinsics.resolution_w / 2.0
        self.coeffs = camera.intrinsics.distortion.as_array()

    def project(self, points) -> np.ndarray:
        d = np.asarray(points, dtype=float) - self.origin
        depth = d @ self.axis
        if np.any(depth <= 0.0):
            raise ValueError("point behind camera plane")
        x = (d @ self.ex) / depth / self.tan_alpha
        y = (d @ self.ey) / depth / self.tan_alpha
        xd, yd = distort_xy(x, y, self.coeffs)
        return np.stack([xd * self.half_w, yd * self.half_w], axis=-1)

    def backproject_to_height(self, pixels, height: float) -> np.ndarray:
        pixels = np.asarray(pixels, dtype=float)
        x, y = undistort_xy(pixels[..., 0] / self.half_w, pixels[..., 1] / self.half_w, self.coeffs)
        ray = (x[..., None] * self.tan_alpha * self.ex + y[..., None] * self.tan_alpha * self.ey
               + self.axis)
        t = (height - self.origin[2]) / ray[..., 2]
        return self.origin + t[..., None] * ray


def quantize_points(camera: Camera, points, height: float) -> np.ndarray:
    """Round the images of ``points`` to the pixel lattice and recover them on ``z = height``."""
    model = PixelModel(camera)
    return model.backproject_to_height(np.rint(model.project(points)), height)


def simulate_quantization_error(camera: Camera, target: Target, segment_length: float,
                                trials: int, seed: int) -> ErrorTrialStats:
    """Monte Carlo check of the pixel-footprint error bounds for one pair.

    Each trial lays a segment of ``segment_length`` mm on the horizontal
    plane through the target, starting at the target shifted by a random
    sub-footprint offset and pointing in a random direction.  Both
    endpoints are quantised; the endpoint error is the larger of the two
    recovery errors and the length error is ``|l - l'|``.  The bounds are
    ``eps < Q`` and ``|l - l'| < 2 Q`` with ``Q`` the pair quality.
    """
    geom = view_geometry(camera.pose, target)
    if not visibility(geom, camera.intrinsics):
        raise NotVisibleError("target not visible")
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    if not segment_length > 0.0:
        raise ValueError(f"segment_length must be positive, got {segment_length}")
    q = pair_quality(geom, camera.intrinsics).q_total

    rng = np.random.default_rng(seed)
    offset = rng.random((trials, 2)) * q
    theta = rng.random(trials) * 2.0 * math.pi
    p = np.asarray(target.position_p, dtype=float)
    start = p + np.column_stack([offset, np.zeros(trials)])
    end = start + segment_length * np.column_stack([np.cos(theta), np.sin(theta), np.zeros(trials)])

    height = p[2]
    start_hat = quantize_points(camera, start, height)
    end_hat = quantize_points(camera, end, height)
    eps = np.maximum(np.linalg.norm(start_hat - start, axis=1), np.linalg.norm(end_hat - end, axis=1))
    length_err = np.abs(np.linalg.norm(end_hat - start_hat, axis=1) - segment_length)

    ratio = eps / q
    return ErrorTrialStats(
        trials=int(trials),
        violations=int(np.count_nonzero(eps >= q)),
        length_violations=int(np.count_nonzero(length_err >= 2.0 * q)),
        max_ratio=float(ratio.max()),
        ratio_q99=float(np.quantile(ratio, 0.99)),
        mean_length_error=float(length_err.mean()),
        max_length_ratio=float((length_err / (2.0 * q)).max()),
        bound_q=float(q),
    )
