import math

import numpy as np
import pytest

from camnet.cli import main
from camnet.fusion import fuse_scene
from camnet.raster import (
    PlaneError,
    parse_grid,
    parse_plane,
    quality_map,
    render_quality_panels,
    to_csv,
    to_pgm,
    to_pgm_levels,
)
from camnet.scene import Scene, Target, Workspace

from conftest import make_camera

FLOOR = Workspace((-3000.0, -3000.0, 0.0), (3000.0, 3000.0, 3000.0))


def undistorted_scene():
    return Scene([make_camera(position=(0, 0, 2500), alpha=0.6, w=1000)],
                 [Target("t", (0, 0, 0))], FLOOR)


def test_parsers():
    assert parse_plane("z=0") == ("z", 0.0)
    assert parse_plane(" X = 12.5 ") == ("x", 12.5)
    assert parse_grid("40x30") == (40, 30)
    for bad in ["w=1", "z", "z=a"]:
        with pytest.raises(PlaneError):
            parse_plane(bad)
    for bad in ["1x5", "4", "axb"]:
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_floor_quality_constant_inside_cone():
    # looking straight down at a floor, 2 d cos(beta) is twice the height for
    # every covered point, so the undistorted map is flat
    raster = quality_map(undistorted_scene(), 60, 60)
    covered = np.isfinite(raster.values)
    assert covered.any() and not covered.all()
    np.testing.assert_allclose(raster.values[covered], 2 * 2500 * math.tan(0.6) / 1000, rtol=1e-12)
    # coverage is exactly the disc of radius h tan(alpha)
    cx, cy = np.meshgrid(raster.col_centers, raster.row_centers)
    inside = np.hypot(cx, cy) <= 2500 * math.tan(0.6)
    np.testing.assert_array_equal(covered, inside)


def test_map_agrees_with_scene_evaluation():
    scene = Scene([make_camera("a", position=(-800, 0, 2500), tilt=0.3, pan=0.2, alpha=0.6, w=1000, k1=0.1),
                   make_camera("b", position=(900, 400, 2400), alpha=0.5, w=1600, k1=0.05)],
                  [Target("t", (0, 0, 0))], FLOOR)
    raster = quality_map(scene, 12, 8)
    for r in (0, 3, 7):
        for c in (0, 5, 11):
            probe = Scene(scene.cameras, [Target("p", (raster.col_centers[c], raster.row_centers[r], 0.0))],
                          FLOOR)
            expected = fuse_scene(probe).fused[0]
            if math.isinf(expected):
                assert math.isinf(raster.values[r, c])
            else:
                assert raster.values[r, c] == pytest.approx(expected, rel=1e-9)


def test_zero_distortion_total_equals_perspective():
    scene = undistorted_scene()
    total = quality_map(scene, 20, 20).values
    persp = quality_map(scene, 20, 20, component="perspective").values
    dist = quality_map(scene, 20, 20, component="distortion").values
    np.testing.assert_array_equal(total, persp)
    assert np.all(dist[np.isfinite(dist)] == pytest.approx(1.0, abs=1e-12))


def test_plane_outside_workspace():
    with pytest.raises(PlaneError, match="outside the workspace"):
        quality_map(undistorted_scene(), 10, 10, ("z", -1.0))


def test_pgm_levels():
    levels = to_pgm_levels(np.array([[1.0, 2.0], [3.0, np.inf]]))
    np.testing.assert_array_equal(levels, [[255, 128], [1, 0]])
    np.testing.assert_array_equal(to_pgm_levels(np.array([[np.inf, 5.0]])), [[0, 255]])


def test_csv_and_pgm_share_layout():
    raster = quality_map(undistorted_scene(), 7, 5)
    csv_rows = to_csv(raster).splitlines()
    pgm = to_pgm(raster).splitlines()
    assert pgm[:3] == ["P2", "7 5", "255"]
    assert len(csv_rows) == 5 and len(pgm) == 8
    for csv_row, pgm_row, values in zip(csv_rows, pgm[3:], raster.values):
        cells = csv_row.split(",")
        levels = pgm_row.split()
        assert len(cells) == len(levels) == 7
        for cell, level, v in zip(cells, levels, values):
            if math.isinf(v):
                assert cell == "inf" and level == "0"
            else:
                assert float(cell) == v and int(level) > 0


def test_map_cli_writes_raster_and_figure(tmp_path, capsys):
    from camnet.io import save_scene

    scene_path = tmp_path / "s.json"
    save_scene(scene_path, undistorted_scene())
    out, fig = tmp_path / "q.pgm", tmp_path / "q.png"
    assert main(["map", str(scene_path), "--grid", "30x20", "--out", str(out), "--figure", str(fig)]) == 0
    assert out.read_text().startswith("P2\n30 20\n255\n")
    assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert main(["map", str(scene_path), "--out", str(tmp_path / "q.txt")]) == 1
    assert main(["map", str(scene_path), "--plane", "z=9999", "--out", str(out)]) == 1


def test_render_panels_direct(tmp_path):
    path = tmp_path / "panels.png"
    render_quality_panels(undistorted_scene(), 16, 16, ("z", 0.0), str(path))
    assert path.stat().st_size > 0
