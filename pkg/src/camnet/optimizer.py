"""Camera network reconfiguration by multi-start Nelder-Mead.

Decision variables are pan/tilt per camera (PTZ mode, mounts fixed) or a
3D position per camera (drone mode, axes fixed straight down).  Every
variable is rescaled to ``[0, 1]`` over its bounds before the simplex
search, and coverage is handled by the penalty in :mod:`camnet.objective`.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from .fusion import CameraArrays, QualityReport, fuse_batch, fuse_scene, pair_quality_batch
from .objective import ObjectiveKind, ObjectiveSpec, is_feasible, objective_value, penalized_values
from .scene import DRONE_MIN_HEIGHT, CameraPose, Scene

log = logging.getLogger(__name__)

DEFAULT_STARTS = 16
DEFAULT_MAX_EVALS = 20000
SIMPLEX_TOL = 1e-6
INITIAL_STEP = 0.1
SNAP_TOL = 1e-3


class Mode(str, enum.Enum):
    PTZ = "ptz"
    DRONE = "drone"


def variable_bounds(scene: Scene, mode: Mode) -> Tuple[np.ndarray, np.ndarray]:
    """Lower/upper bound vectors in the flat configuration layout."""
    mode = Mode(mode)
    lo: List[float] = []
    hi: List[float] = []
    ws = scene.workspace
    for cam in scene.cameras:
        b = cam.bounds
        if mode is Mode.PTZ:
            lo += [b.pan[0], b.tilt[0]]
            hi += [b.pan[1], b.tilt[1]]
            continue
        if b.position_min is None:
            z_lo = max(DRONE_MIN_HEIGHT, ws.min[2])
            if z_lo > ws.max[2]:
                raise ValueError(
                    f"workspace ceiling {ws.max[2]} mm is below the drone minimum height "
                    f"{DRONE_MIN_HEIGHT} mm")
            lo += [ws.min[0], ws.min[1], z_lo]
            hi += list(ws.max)
        else:
            if b.position_min[2] < DRONE_MIN_HEIGHT:
                raise ValueError(
                    f"camera {cam.id!r}: drone z bound {b.position_min[2]} mm is below the "
                    f"minimum height {DRONE_MIN_HEIGHT} mm")
            lo += list(b.position_min)
            hi += list(b.position_max)
    return np.array(lo, dtype=float), np.array(hi, dtype=float)


def current_configuration(scene: Scene, mode: Mode) -> np.ndarray:
    if Mode(mode) is Mode.PTZ:
        return np.array([v for c in scene.cameras for v in (c.pose.pan, c.pose.tilt)])
    return np.array([v for c in scene.cameras for v in c.pose.position_o])


def _dims(mode: Mode) -> int:
    return 2 if Mode(mode) is Mode.PTZ else 3


def apply_configuration(scene: Scene, mode: Mode, config,
                        bounds: Optional[Tuple[np.ndarray, np.ndarray]] = None
                        ) -> Tuple[Scene, Tuple[int, ...]]:
    """Return a copy of ``scene`` posed by ``config`` and the clamped indices.

    Components outside ``bounds`` (default: :func:`variable_bounds`) are
    clamped onto them rather than rejected.
    """
    mode = Mode(mode)
    config = np.asarray(config, dtype=float)
    expected = _dims(mode) * scene.n_cameras
    if config.shape != (expected,):
        raise ValueError(f"{mode.value} configuration needs length {expected}, got {config.size}")
    lo, hi = bounds if bounds is not None else variable_bounds(scene, mode)
    clamped = np.clip(config, lo, hi)
    moved = tuple(int(i) for i in np.flatnonzero(clamped != config))
    if moved:
        log.info("clamped configuration components %s onto their bounds", moved)
    poses = []
    for i, cam in enumerate(scene.cameras):
        if mode is Mode.PTZ:
            pan, tilt = clamped[2 * i:2 * i + 2]
            poses.append(CameraPose(cam.pose.position_o, float(pan), float(tilt)))
        else:
            poses.append(CameraPose(tuple(clamped[3 * i:3 * i + 3]), 0.0, 0.0))
    return scene.with_poses(poses), moved


@dataclass(frozen=True)
class ReconfigProblem:
    scene: Scene
    mode: Mode = Mode.PTZ
    objective: ObjectiveSpec = field(default_factory=ObjectiveSpec)
    starts: int = DEFAULT_STARTS
    seed: int = 0
    max_evals: int = DEFAULT_MAX_EVALS

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.starts < 1:
            raise ValueError(f"starts must be positive, got {self.starts}")
        if self.max_evals < 1:
            raise ValueError(f"max_evals must be positive, got {self.max_evals}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return variable_bounds(self.scene, self.mode)

    @property
    def n_vars(self) -> int:
        return _dims(self.mode) * self.scene.n_cameras


@dataclass
class OptResult:
    best_config: np.ndarray
    best_value: float
    feasible: bool
    report: QualityReport
    evals_used: int
    per_start_values: List[float]
    scene: Scene
    best_start: int = 0


class BatchObjective:
    """Scalarised objective evaluated on batches of configurations.

    Configurations are real-unit rows of shape ``(B, n_vars)``; they are
    clamped to the problem bounds before evaluation.
    """

    def __init__(self, problem: ReconfigProblem):
        self.problem = problem
        self.lo, self.hi = problem.bounds
        scene = problem.scene
        self.cams = CameraArrays.from_scene(scene)
        self.targets = scene.target_positions()
        self.mounts = np.array([c.pose.position_o for c in scene.cameras], dtype=float)
        self.n_evals = 0

    def _evaluate(self, configs, return_excess=False):
        x = np.clip(np.atleast_2d(np.asarray(configs, dtype=float)), self.lo, self.hi)
        b = x.shape[0]
        nc = self.mounts.shape[0]
        if self.problem.mode is Mode.PTZ:
            pans, tilts = x[:, 0::2], x[:, 1::2]
            positions = np.broadcast_to(self.mounts, (b, nc, 3))
        else:
            positions = x.reshape(b, nc, 3)
            pans = tilts = np.zeros((b, nc))
        out = pair_quality_batch(self.cams, positions, pans, tilts, self.targets,
                                 return_excess=return_excess)
        fused = fuse_batch(out[0], out[1])
        return (fused, out[2]) if return_excess else fused

    def fused(self, configs) -> np.ndarray:
        return self._evaluate(configs)

    def __call__(self, configs) -> np.ndarray:
        configs = np.atleast_2d(configs)
        self.n_evals += configs.shape[0]
        return penalized_values(self.fused(configs), self.problem.objective)

    def search_values(self, configs) -> np.ndarray:
        """Objective plus a feasibility-seeking term on uncovered targets.

        An uncovered target adds ``penalty / 2 * gap / pi`` where ``gap`` is
        its smallest angular distance to any camera cone.  The term is below
        half a penalty step, so it only orders configurations that miss the
        same number of targets; feasible configurations are unaffected.
        """
        configs = np.atleast_2d(configs)
        self.n_evals += configs.shape[0]
        fused, excess = self._evaluate(configs, return_excess=True)
        values = penalized_values(fused, self.problem.objective)
        uncovered = ~np.isfinite(fused)
        if uncovered.any():
            gap = np.clip(excess.min(axis=1), 0.0, math.pi) / math.pi
            shaping = 0.5 * self.problem.objective.coverage_penalty * np.where(uncovered, gap, 0.0)
            if self.problem.objective.kind is ObjectiveKind.MEAN:
                values = values + shaping.mean(axis=-1)
            else:
                values = values + shaping.max(axis=-1)
        return values


def _initial_simplex(u0: np.ndarray, step: float, basis: Optional[np.ndarray] = None) -> np.ndarray:
    """Simplex of edge ``step`` at ``u0`` along ``basis`` rows, folded into the unit box."""
    n = u0.size
    basis = np.eye(n) if basis is None else basis
    sim = np.tile(u0, (n + 1, 1))
    for k in range(n):
        vertex = u0 + step * basis[k]
        if np.any(vertex < 0.0) or np.any(vertex > 1.0):
            vertex = u0 - step * basis[k]
        sim[k + 1] = np.clip(vertex, 0.0, 1.0)
    return sim


def _local_search(f, u0: np.ndarray, budget: int, rng: np.random.Generator,
                  ) -> Tuple[np.ndarray, float, int]:
    """Nelder-Mead in the unit box with restarts while the budget lasts.

    A restart that fails to improve is retried once with a randomly rotated
    simplex (kinks of a max objective often trap axis-aligned simplices)
    before the step shrinks tenfold.
    """
    n = u0.size
    best_u = np.clip(u0, 0.0, 1.0)
    best_f = f(best_u)
    used = 1
    step = INITIAL_STEP
    basis = None
    while used + n + 1 <= budget:
        res = minimize(
            f, best_u, method="Nelder-Mead", bounds=[(0.0, 1.0)] * n,
            options={
                "initial_simplex": _initial_simplex(best_u, step, basis),
                "xatol": SIMPLEX_TOL,
                "fatol": math.inf,
                "maxfev": budget - used,
                "adaptive": n > 4,
            },
        )
        used += res.nfev
        if res.fun < best_f:
            best_u, best_f = np.clip(res.x, 0.0, 1.0), float(res.fun)
            basis = None
        elif basis is None:
            basis = np.linalg.qr(rng.standard_normal((n, n)))[0]
        else:
            basis = None
            step *= 0.1
            if step < SIMPLEX_TOL:
                break
    # pull near-bound coordinates exactly onto the bound when that helps
    for k in range(n):
        for edge in (0.0, 1.0):
            if 0.0 < abs(best_u[k] - edge) <= SNAP_TOL:
                trial = best_u.copy()
                trial[k] = edge
                val = f(trial)
                used += 1
                if val <= best_f:
                    best_u, best_f = trial, val
    return best_u, best_f, used


def solve(problem: ReconfigProblem) -> OptResult:
    objective = BatchObjective(problem)
    lo, hi = objective.lo, objective.hi
    span = hi - lo
    n = problem.n_vars

    def to_real(u):
        return lo + np.clip(u, 0.0, 1.0) * span

    def f(u):
        return float(objective.search_values(to_real(u))[0])

    with np.errstate(divide="ignore", invalid="ignore"):
        u_current = np.where(span > 0, (current_configuration(problem.scene, problem.mode) - lo) / span, 0.0)
    u_current = np.clip(u_current, 0.0, 1.0)

    budget = max(problem.max_evals // problem.starts, n + 2)
    per_start: List[float] = []
    best_u, best_f, best_k = None, math.inf, 0
    evals = 0
    for k in range(problem.starts):
        rng = np.random.default_rng([problem.seed, k])
        u0 = u_current if k == 0 else rng.random(n)
        u, _, used = _local_search(f, u0, budget, rng)
        evals += used
        val = float(objective(to_real(u))[0])
        per_start.append(val)
        if val < best_f:
            best_u, best_f, best_k = u, val, k

    best_config = to_real(best_u)
    scene, _ = apply_configuration(problem.scene, problem.mode, best_config, (lo, hi))
    report = fuse_scene(scene)
    return OptResult(
        best_config=best_config,
        best_value=objective_value(report, problem.objective),
        feasible=is_feasible(report),
        report=report,
        evals_used=evals,
        per_start_values=per_start,
        scene=scene,
        best_start=best_k,
    )


def solve_minimax(problem: ReconfigProblem) -> OptResult:
    spec = replace(problem.objective, kind=ObjectiveKind.MINIMAX)
    return solve(replace(problem, objective=spec))
