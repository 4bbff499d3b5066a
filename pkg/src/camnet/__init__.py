"""Pixel-density sensing quality and reconfiguration for camera networks."""

__version__ = "0.1.0"

from .fusion import QualityReport, TargetFusion, fuse_scene, fuse_target
from .io import load_scene, save_scene, scene_to_dict
from .objective import ObjectiveKind, ObjectiveSpec, is_feasible, objective_value
from .optimizer import Mode, OptResult, ReconfigProblem, apply_configuration, solve, solve_minimax
from .oracle import GridSpec, grid_search, simulate_quantization_error
from .quality import QualityBreakdown, distort, distortion_jacobian, distortion_quality, pair_quality, perspective_quality
from .raster import quality_map
from .scene import (
    Camera,
    CameraBounds,
    CameraIntrinsics,
    CameraPose,
    DistortionCoefficients,
    Scene,
    Target,
    ViewGeometry,
    Workspace,
    optical_axis,
    view_geometry,
    visibility,
)

__all__ = [
    "Camera", "CameraBounds", "CameraIntrinsics", "CameraPose", "DistortionCoefficients",
    "Mode", "ObjectiveKind", "ObjectiveSpec", "OptResult", "QualityBreakdown", "QualityReport",
    "ReconfigProblem", "Scene", "Target", "TargetFusion", "ViewGeometry", "Workspace",
    "apply_configuration", "distort", "distortion_jacobian", "distortion_quality", "fuse_scene",
    "fuse_target", "GridSpec", "grid_search", "is_feasible", "load_scene", "objective_value", "optical_axis", "pair_quality",
    "perspective_quality", "quality_map", "save_scene", "scene_to_dict",
    "simulate_quantization_error", "solve", "solve_minimax", "view_geometry", "visibility",
]
