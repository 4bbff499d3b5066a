"""Scene files and JSON result documents.

Scene files are JSON, millimetres and radians throughout::

    {
      "workspace": {"min": [x, y, z], "max": [x, y, z]},
      "cameras": [{"id": "cam0", "position_mm": [x, y, z],
                   "pan_rad": 0.0, "tilt_rad": 0.0,
                   "alpha_rad": 0.6, "resolution_w": 1920,
                   "distortion": {"k1": 0.0, ..., "s2": 0.0},
                   "bounds": {"pan": [lo, hi], "tilt": [lo, hi],
                              "position_min": [x, y, z],
                              "position_max": [x, y, z]}}],
      "targets": [{"id": "t0", "position_mm": [x, y, z]}]
    }

``distortion`` and ``bounds`` (and each key inside them) are optional.
Distortion coefficients are expressed in coordinates normalised so the
edge of the field of view sits at radius 1, i.e. pinhole coordinates
divided by ``tan(alpha)``.  Unknown keys are rejected.
"""

from __future__ import annotations

import json
import math
from typing import Any, Dict, List, Optional

import numpy as np

from .fusion import QualityReport
from .objective import ObjectiveKind, ObjectiveSpec, is_feasible, objective_value
from .scene import (
    Camera,
    CameraBounds,
    CameraIntrinsics,
    CameraPose,
    DistortionCoefficients,
    Scene,
    Target,
    Workspace,
)


class SceneFileError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


_CAMERA_KEYS = {"id", "position_mm", "pan_rad", "tilt_rad", "alpha_rad", "resolution_w",
                "distortion", "bounds"}
_CAMERA_REQUIRED = {"id", "position_mm", "alpha_rad", "resolution_w"}
_BOUNDS_KEYS = {"pan", "tilt", "position_min", "position_max"}


def _expect(obj, kind, path):
    if not isinstance(obj, kind):
        raise SceneFileError(path, f"expected {kind.__name__}, got {type(obj).__name__}")
    return obj


def _keys(obj: dict, allowed, required, path: str) -> None:
    for key in obj:
        if key not in allowed:
            raise SceneFileError(f"{path}.{key}" if path else key, "unknown field")
    for key in sorted(required):
        if key not in obj:
            raise SceneFileError(f"{path}.{key}" if path else key, "missing required field")


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SceneFileError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise SceneFileError(path, "must be finite")
    return float(value)


def _vector(value, n: int, path: str) -> tuple:
    _expect(value, list, path)
    if len(value) != n:
        raise SceneFileError(path, f"expected {n} numbers, got {len(value)}")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _string(value, path: str) -> str:
    if not isinstance(value, str) or not value:
        raise SceneFileError(path, "expected a non-empty string")
    return value


def _build(path: str, factory, *args, **kwargs):
    try:
        return factory(*args, **kwargs)
    except SceneFileError:
        raise
    except ValueError as exc:
        raise SceneFileError(path, str(exc)) from None


def _parse_camera(doc: Any, path: str) -> Camera:
    _expect(doc, dict, path)
    _keys(doc, _CAMERA_KEYS, _CAMERA_REQUIRED, path)
    cam_id = _string(doc["id"], f"{path}.id")
    position = _vector(doc["position_mm"], 3, f"{path}.position_mm")
    pan = _number(doc.get("pan_rad", 0.0), f"{path}.pan_rad")
    tilt = _number(doc.get("tilt_rad", 0.0), f"{path}.tilt_rad")
    alpha = _number(doc["alpha_rad"], f"{path}.alpha_rad")
    w = doc["resolution_w"]
    if isinstance(w, bool) or not isinstance(w, int):
        raise SceneFileError(f"{path}.resolution_w", f"expected an integer, got {w!r}")

    dist_doc = _expect(doc.get("distortion", {}), dict, f"{path}.distortion")
    names = DistortionCoefficients.names()
    _keys(dist_doc, set(names), set(), f"{path}.distortion")
    coeffs = {k: _number(v, f"{path}.distortion.{k}") for k, v in dist_doc.items()}
    distortion = _build(f"{path}.distortion", DistortionCoefficients, **coeffs)

    b_doc = _expect(doc.get("bounds", {}), dict, f"{path}.bounds")
    _keys(b_doc, _BOUNDS_KEYS, set(), f"{path}.bounds")
    b_kwargs: Dict[str, Any] = {}
    for key in ("pan", "tilt"):
        if key in b_doc:
            b_kwargs[key] = _vector(b_doc[key], 2, f"{path}.bounds.{key}")
    for key in ("position_min", "position_max"):
        if b_doc.get(key) is not None:
            b_kwargs[key] = _vector(b_doc[key], 3, f"{path}.bounds.{key}")
    bounds = _build(f"{path}.bounds", CameraBounds, **b_kwargs)

    intrinsics = _build(path, CameraIntrinsics, alpha, w, distortion)
    pose = _build(path, CameraPose, position, pan, tilt)
    return Camera(cam_id, intrinsics, pose, bounds)


def parse_scene(doc: Any) -> Scene:
    _expect(doc, dict, "")
    _keys(doc, {"workspace", "cameras", "targets"}, {"workspace", "cameras", "targets"}, "")
    ws_doc = _expect(doc["workspace"], dict, "workspace")
    _keys(ws_doc, {"min", "max"}, {"min", "max"}, "workspace")
    workspace = _build("workspace", Workspace,
                       _vector(ws_doc["min"], 3, "workspace.min"),
                       _vector(ws_doc["max"], 3, "workspace.max"))

    cams_doc = _expect(doc["cameras"], list, "cameras")
    if not cams_doc:
        raise SceneFileError("cameras", "scene needs at least one camera")
    cameras = [_parse_camera(c, f"cameras[{i}]") for i, c in enumerate(cams_doc)]

    tgts_doc = _expect(doc["targets"], list, "targets")
    if not tgts_doc:
        raise SceneFileError("targets", "scene needs at least one target")
    targets = []
    seen = set()
    for i, t in enumerate(tgts_doc):
        path = f"targets[{i}]"
        _expect(t, dict, path)
        _keys(t, {"id", "position_mm"}, {"id", "position_mm"}, path)
        tid = _string(t["id"], f"{path}.id")
        if tid in seen:
            raise SceneFileError(f"{path}.id", f"duplicate target id {tid!r}")
        seen.add(tid)
        targets.append(Target(tid, _vector(t["position_mm"], 3, f"{path}.position_mm")))
    seen = set()
    for i, c in enumerate(cameras):
        if c.id in seen:
            raise SceneFileError(f"cameras[{i}].id", f"duplicate camera id {c.id!r}")
        seen.add(c.id)
    return _build("", Scene, cameras, targets, workspace)


def load_scene(path) -> Scene:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SceneFileError("", f"invalid JSON: {exc}") from None
    return parse_scene(doc)


def scene_to_dict(scene: Scene) -> dict:
    cameras = []
    for cam in scene.cameras:
        b = cam.bounds
        bounds: Dict[str, Any] = {"pan": list(b.pan), "tilt": list(b.tilt)}
        if b.position_min is not None:
            bounds["position_min"] = list(b.position_min)
            bounds["position_max"] = list(b.position_max)
        d = cam.intrinsics.distortion
        cameras.append({
            "id": cam.id,
            "position_mm": list(cam.pose.position_o),
            "pan_rad": cam.pose.pan,
            "tilt_rad": cam.pose.tilt,
            "alpha_rad": cam.intrinsics.half_angle_alpha,
            "resolution_w": int(cam.intrinsics.resolution_w),
            "distortion": dict(zip(d.names(), d.as_tuple())),
            "bounds": bounds,
        })
    return {
        "workspace": {"min": list(scene.workspace.min), "max": list(scene.workspace.max)},
        "cameras": cameras,
        "targets": [{"id": t.id, "position_mm": list(t.position_p)} for t in scene.targets],
    }


# ---------------------------------------------------------------------------
# JSON output
# ---------------------------------------------------------------------------


def jsonable(value):
    """Plain JSON types; non-finite floats become the strings "inf"/"-inf"/"nan"."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def dumps(doc) -> str:
    return json.dumps(jsonable(doc), indent=2) + "\n"


def write_json(path, doc) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(doc))


def save_scene(path, scene: Scene) -> None:
    write_json(path, scene_to_dict(scene))


def report_to_dict(report: QualityReport) -> dict:
    pairs = []
    for p in report.pairs:
        entry: Dict[str, Any] = {"camera": p.camera_id, "target": p.target_id}
        if p.geometry is not None:
            entry.update(beta=p.geometry.beta, gamma=p.geometry.gamma, distance=p.geometry.distance)
        if p.quality is not None:
            entry.update(q_p=p.quality.q_p, q_d=p.quality.q_d, Q=p.quality.q_total)
        entry["visible"] = bool(p.visible)
        if p.error:
            entry["error"] = p.error
        pairs.append(entry)
    return {
        "pairs": pairs,
        "targets": [{"id": t.target_id, "fused_q": t.fused_q, "covered": t.covered}
                    for t in report.targets],
        "objectives": {kind.value: objective_value(report, ObjectiveSpec(kind))
                       for kind in ObjectiveKind},
        "feasible": is_feasible(report),
    }


def bounds_to_dict(scene: Scene, mode, lo, hi, defaults_applied: Optional[List[bool]] = None) -> list:
    out = []
    dims = 2 if str(getattr(mode, "value", mode)) == "ptz" else 3
    for i, cam in enumerate(scene.cameras):
        a, b = lo[dims * i:dims * (i + 1)], hi[dims * i:dims * (i + 1)]
        if dims == 2:
            entry = {"camera": cam.id, "pan": [a[0], b[0]], "tilt": [a[1], b[1]]}
        else:
            entry = {"camera": cam.id, "position_min": list(a), "position_max": list(b)}
            if defaults_applied is not None:
                entry["defaults_applied"] = defaults_applied[i]
        out.append(entry)
    return out
