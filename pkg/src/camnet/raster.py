"""Quality maps over an axis-aligned workspace plane, with CSV/PGM/PNG export."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .fusion import CameraArrays, fuse_batch, pair_quality_batch
from .scene import Scene

_AXES = {"x": 0, "y": 1, "z": 2}
# in-plane (column, row) axes for each plane normal
_INPLANE = {0: (1, 2), 1: (0, 2), 2: (0, 1)}


class PlaneError(ValueError):
    pass


@dataclass(frozen=True)
class QualityMapRaster:
    """Fused quality sampled at cell centres.

    ``values[r, c]`` is row-major with row 0 / column 0 at the workspace
    minimum corner; ``inf`` marks cells no camera covers.
    """

    values: np.ndarray
    plane_axis: str
    plane_value: float
    col_centers: np.ndarray
    row_centers: np.ndarray
    extent: Tuple[float, float, float, float]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


def parse_plane(spec: str) -> Tuple[str, float]:
    """``"z=0"`` -> ``("z", 0.0)``."""
    try:
        axis, value = spec.replace(" ", "").split("=")
        axis = axis.lower()
        if axis not in _AXES:
            raise ValueError
        return axis, float(value)
    except ValueError:
        raise PlaneError(f"plane must look like 'z=0', got {spec!r}") from None


def parse_grid(spec: str) -> Tuple[int, int]:
    try:
        w, h = (int(v) for v in spec.lower().split("x"))
    except ValueError:
        raise ValueError(f"grid must look like 'WxH', got {spec!r}") from None
    if w < 2 or h < 2:
        raise ValueError(f"grid dimensions must be >= 2, got {w}x{h}")
    return w, h


def quality_map(scene: Scene, width: int, height: int, plane: Tuple[str, float] = ("z", 0.0),
                component: str = "total") -> QualityMapRaster:
    """Sample fused quality on a ``width x height`` grid over a workspace plane.

    ``component`` picks the full model (``"total"``) or only its
    ``"perspective"`` / ``"distortion"`` factor.
    """
    if width < 2 or height < 2:
        raise ValueError(f"grid dimensions must be >= 2, got {width}x{height}")
    axis_name, value = plane
    axis = _AXES[axis_name]
    ws = scene.workspace
    if not ws.min[axis] <= value <= ws.max[axis]:
        raise PlaneError(f"plane {axis_name}={value} lies outside the workspace "
                         f"[{ws.min[axis]}, {ws.max[axis]}]")
    ca, ra = _INPLANE[axis]
    c_lo, c_hi = ws.min[ca], ws.max[ca]
    r_lo, r_hi = ws.min[ra], ws.max[ra]
    cols = c_lo + (np.arange(width) + 0.5) * (c_hi - c_lo) / width
    rows = r_lo + (np.arange(height) + 0.5) * (r_hi - r_lo) / height

    pts = np.empty((height, width, 3))
    pts[..., axis] = value
    pts[..., ca] = cols[None, :]
    pts[..., ra] = rows[:, None]

    cams = CameraArrays.from_scene(scene)
    positions = np.array([[c.pose.position_o for c in scene.cameras]])
    pans = np.array([[c.pose.pan for c in scene.cameras]])
    tilts = np.array([[c.pose.tilt for c in scene.cameras]])
    q, vis = pair_quality_batch(cams, positions, pans, tilts, pts.reshape(-1, 3), component)
    fused = fuse_batch(q, vis)[0].reshape(height, width)
    return QualityMapRaster(fused, axis_name, float(value), cols, rows, (c_lo, c_hi, r_lo, r_hi))


def to_csv(raster: QualityMapRaster) -> str:
    lines = []
    for row in raster.values:
        lines.append(",".join(repr(float(v)) if math.isfinite(v) else "inf" for v in row))
    return "\n".join(lines) + "\n"


def to_pgm_levels(values: np.ndarray) -> np.ndarray:
    """Grey levels: best (lowest) quality 255, worst covered 1, uncovered 0."""
    finite = np.isfinite(values)
    levels = np.zeros(values.shape, dtype=int)
    if not finite.any():
        return levels
    lo, hi = values[finite].min(), values[finite].max()
    if hi == lo:
        levels[finite] = 255
    else:
        levels[finite] = 1 + np.rint(254.0 * (hi - values[finite]) / (hi - lo)).astype(int)
    return levels


def to_pgm(raster: QualityMapRaster) -> str:
    levels = to_pgm_levels(raster.values)
    lines = ["P2", f"{raster.width} {raster.height}", "255"]
    lines += [" ".join(str(v) for v in row) for row in levels]
    return "\n".join(lines) + "\n"


def write_raster(path: str, raster: QualityMapRaster) -> None:
    lower = str(path).lower()
    if lower.endswith(".csv"):
        text = to_csv(raster)
    elif lower.endswith(".pgm"):
        text = to_pgm(raster)
    else:
        raise ValueError(f"raster output must end in .csv or .pgm, got {path!r}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)


def render_quality_panels(scene: Scene, width: int, height: int, plane: Tuple[str, float],
                          path: str) -> None:
    """Save perspective / distortion / complete quality maps side by side.

    Lighter colours mean better (smaller) quality values; uncovered cells
    are left blank.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    panels = [("perspective", "Perspective factor"), ("distortion", "Distortion factor"),
              ("total", "Complete model")]
    fig, axes = plt.subplots(1, 3, figsize=(13, 4), constrained_layout=True)
    axis = _AXES[plane[0]]
    ca, ra = _INPLANE[axis]
    labels = "xyz"
    for ax, (component, title) in zip(axes, panels):
        raster = quality_map(scene, width, height, plane, component)
        data = np.ma.masked_invalid(raster.values)
        im = ax.imshow(data, origin="lower", extent=raster.extent, cmap="magma_r",
                       interpolation="nearest", aspect="equal")
        for cam in scene.cameras:
            ax.plot(cam.pose.position_o[ca], cam.pose.position_o[ra], "c^", ms=6)
        for tgt in scene.targets:
            ax.plot(tgt.position_p[ca], tgt.position_p[ra], "o", mfc="none", mec="tab:green", ms=6)
        ax.set_title(title)
        ax.set_xlabel(f"{labels[ca]} [mm]")
        ax.set_ylabel(f"{labels[ra]} [mm]")
        fig.colorbar(im, ax=ax, shrink=0.8, label="mm / px" if component != "distortion" else "")
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
