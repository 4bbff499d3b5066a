"""End-to-end acceptance checks.

Each test prints one ``PASS``/``FAIL`` line (visible with or without ``-s``)
and then asserts, so the pytest outcome and the printed verdict agree.
Run just this module with ``pytest tests/test_acceptance.py -v``.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from camnet.cli import main
from camnet.fusion import fuse_target
from camnet.objective import ObjectiveSpec
from camnet.optimizer import ReconfigProblem, solve
from camnet.oracle import GridSpec, grid_search, simulate_quantization_error
from camnet.quality import distortion_quality, jacobian_diagonal_xy
from camnet.raster import quality_map
from camnet.scene import (
    CameraIntrinsics,
    DistortionCoefficients,
    Scene,
    Target,
    ViewGeometry,
    Workspace,
)

from conftest import make_camera, random_room_scene

SCENES = Path(__file__).resolve().parent.parent / "scenes"


@pytest.fixture
def verdict(capsys, request):
    label = request.node.name.replace("test_", "", 1)

    def emit(ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {label}: {detail}")
        assert ok, detail

    return emit


def test_01_jacobian_correctness(verdict):
    t0 = time.perf_counter()
    r = np.linspace(0.0, 1.0, 10)
    th = np.linspace(0.0, 2 * math.pi, 10, endpoint=False)
    rr, tt = np.meshgrid(r, th)
    x, y = rr * np.cos(tt), rr * np.sin(tt)
    worst = 0.0
    for k1 in (0.25, 0.1, -0.1, -0.25):
        coeffs = DistortionCoefficients(k1=k1).as_array()
        dxx, dyy = jacobian_diagonal_xy(x, y, coeffs)
        ex = 1 + k1 * (3 * x**2 + y**2)
        ey = 1 + k1 * (x**2 + 3 * y**2)
        worst = max(worst, np.max(np.abs(dxx / ex - 1)), np.max(np.abs(dyy / ey - 1)))
    elapsed = time.perf_counter() - t0
    verdict(worst < 1e-6 and elapsed < 1.0,
            f"max relative error {worst:.2e} (< 1e-6) in {elapsed:.3f} s (< 1 s)")


def test_02_identity_collapse(verdict):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        alpha = rng.uniform(0.1, 1.4)
        intr = CameraIntrinsics(alpha, int(rng.integers(100, 4000)), DistortionCoefficients())
        geom = ViewGeometry(beta=rng.uniform(0.0, alpha), gamma=rng.uniform(-math.pi, math.pi),
                            distance=rng.uniform(100, 10000))
        worst = max(worst, abs(distortion_quality(geom, intr) - 1.0))

    ws = Workspace((0.0, 0.0, 0.0), (5000.0, 3000.0, 2500.0))
    scene = Scene([make_camera("a", (500, 500, 2500), pan=0.7, tilt=0.5, alpha=0.6, w=1280),
                   make_camera("b", (4500, 2500, 2400), pan=-2.5, tilt=0.3, alpha=0.5, w=1920)],
                  [Target("t", (2500, 1500, 0))], ws)
    total = quality_map(scene, 80, 48).values
    persp = quality_map(scene, 80, 48, component="perspective").values
    same_cover = np.array_equal(np.isfinite(total), np.isfinite(persp))
    cov = np.isfinite(total)
    map_err = float(np.max(np.abs(total[cov] / persp[cov] - 1))) if cov.any() else math.inf
    verdict(worst <= 1e-9 and same_cover and map_err <= 1e-9,
            f"max |q_d - 1| {worst:.1e} over 1000 geometries; map relative gap {map_err:.1e}, "
            f"{int(cov.sum())} covered cells")


def test_03_fusion_algebra(verdict):
    rng = np.random.default_rng(3)
    problems = []
    for _ in range(10_000):
        n = int(rng.integers(1, 9))
        qs = list(10 ** rng.uniform(-2, 3, n))
        _, fused = fuse_target([(q, 1) for q in qs])
        if not fused <= min(qs):
            problems.append("min")
        extra = float(10 ** rng.uniform(-2, 3))
        _, more = fuse_target([(q, 1) for q in qs + [extra]])
        if not more <= fused:
            problems.append("monotone")
        perm = list(rng.permutation(qs))
        if fuse_target([(q, 1) for q in perm])[1] != fused:
            problems.append("permutation")
        _, eq = fuse_target([(qs[0], 1)] * n)
        if abs(eq - qs[0] / n) > 2 * math.ulp(qs[0] / n):
            problems.append("equal")
    verdict(not problems, f"10000 random lists, {len(problems)} property violations "
                          f"(equal contributors checked to 2 ulp)")


def test_04_floor_depth_invariance(verdict):
    h, alpha, w = 2300.0, 0.65, 1440
    scene = Scene([make_camera(position=(0, 0, h), alpha=alpha, w=w)], [Target("t", (0, 0, 0))],
                  Workspace((-2500.0, -2500.0, 0.0), (2500.0, 2500.0, 2500.0)))
    values = quality_map(scene, 101, 101).values
    cov = np.isfinite(values)
    expected = 2 * h * math.tan(alpha) / w
    err = float(np.max(np.abs(values[cov] - expected)))
    verdict(cov.sum() > 1000 and err <= 1e-9,
            f"{int(cov.sum())} covered cells, max |fused_q - 2 h tan(alpha)/w| = {err:.1e}")


def test_05_oracle_dominance(verdict):
    t0 = time.perf_counter()
    failures, checked = [], 0
    for i in range(10):
        rng = np.random.default_rng(1000 + i)
        n_cams, n_tgts = 1 + i % 2, 1 + i % 3
        scene = random_room_scene(rng, n_cams, n_tgts)
        for mode in ("ptz", "drone"):
            k = 15 if mode == "ptz" else (9 if n_cams == 1 else 6)
            for kind in ("mean", "minimax"):
                problem = ReconfigProblem(scene, mode, ObjectiveSpec(kind), starts=8, seed=i,
                                          max_evals=4000)
                result = solve(problem)
                grid = grid_search(problem, GridSpec(k))
                checked += 1
                if not result.best_value <= grid.best_value + grid.lipschitz_slack:
                    failures.append((i, mode, kind, result.best_value, grid.best_value))
    elapsed = time.perf_counter() - t0
    verdict(not failures and elapsed < 120,
            f"{checked - len(failures)}/{checked} solve <= grid + slack in {elapsed:.1f} s (< 120 s)"
            + (f"; failures {failures}" if failures else ""))


def test_06_drone_analytic_optimum(verdict):
    alpha, w = 0.62, 1280
    scene = Scene([make_camera(position=(3500, 700, 2400), alpha=alpha, w=w)],
                  [Target("t", (1300, 2100, 0))],
                  Workspace((0.0, 0.0, 0.0), (5000.0, 3000.0, 2500.0)))
    result = solve(ReconfigProblem(scene, "drone", ObjectiveSpec("mean"), starts=4, seed=0,
                                   max_evals=2000))
    expected = 2 * 1000 * math.tan(alpha) / w
    z = result.best_config[2]
    verdict(abs(result.best_value - expected) <= 1e-6 and abs(z - 1000.0) <= 1e-6,
            f"value {result.best_value:.12f} vs {expected:.12f}, z = {z:.6f} mm")


def test_07_error_bound_check(verdict):
    h, alpha, w = 2500.0, 0.6, 1000
    lines, ok = [], True

    cam = make_camera(position=(0, 0, h), alpha=alpha, w=w)
    for frac in (0.0, 0.5, 0.9):
        off = h * math.tan(frac * alpha) / math.sqrt(2)
        s = simulate_quantization_error(cam, Target("t", (off, off, 0.0)), 100.0, 10_000, seed=7)
        ok &= s.length_violations == 0
        lines.append(f"k1=0 beta={frac}a: {s.length_violations} length violations")

    for k1 in (0.1, -0.1):
        cam = make_camera(position=(0, 0, h), alpha=alpha, w=w, k1=k1)
        for frac in (0.0, 0.5, 0.9):
            off = h * math.tan(frac * alpha) / math.sqrt(2)
            s = simulate_quantization_error(cam, Target("t", (off, off, 0.0)), 100.0, 10_000, seed=7)
            ok &= s.ratio_q99 <= 1.0
            lines.append(f"k1={k1} beta={frac}a: eps/Q q99={s.ratio_q99:.3f}")
    verdict(ok, "; ".join(lines))


def test_08_drone_beats_ptz_trend(verdict):
    wins = 0
    for i in range(20):
        scene = random_room_scene(np.random.default_rng(2000 + i), 3, 3)
        values = {}
        for mode in ("ptz", "drone"):
            values[mode] = solve(ReconfigProblem(scene, mode, ObjectiveSpec("mean"), starts=4,
                                                 seed=i, max_evals=2000)).best_value
        wins += values["drone"] < values["ptz"]
    verdict(wins >= 14, f"drone lower in {wins}/20 scenes (need >= 14)")


def _run_twice(argv_for, tmp_path, capsys, files):
    outputs = []
    for run in ("a", "b"):
        assert main(argv_for(run)) in (0, 2, 3)
        stdout = capsys.readouterr().out
        outputs.append([stdout] + [(tmp_path / f.format(run)).read_bytes() for f in files])
    return outputs[0] == outputs[1]


def test_09_determinism(verdict, tmp_path, capsys):
    room = str(SCENES / "room_3x3.json")
    single = str(SCENES / "single_camera.json")
    same_opt = _run_twice(
        lambda r: ["optimize", room, "--starts", "4", "--seed", "11", "--max-evals", "3000",
                   "--out", str(tmp_path / f"opt_{r}.json")],
        tmp_path, capsys, ["opt_{}.json", "opt_{}.result.json"])
    same_oracle = _run_twice(
        lambda r: ["oracle", single, "--grid-points", "41", "--out", str(tmp_path / f"or_{r}.json")],
        tmp_path, capsys, ["or_{}.json"])
    same_sim = _run_twice(
        lambda r: ["simulate-error", room, "--camera", "cam0", "--target", "robot0",
                   "--trials", "5000", "--seed", "3"],
        tmp_path, capsys, [])
    verdict(same_opt and same_oracle and same_sim,
            f"byte-identical reruns: optimize {same_opt}, oracle {same_oracle}, "
            f"simulate-error {same_sim}")


def test_10_scale_smoke(verdict):
    scene = random_room_scene(np.random.default_rng(10), 7, 20)
    t0 = time.perf_counter()
    result = solve(ReconfigProblem(scene, "ptz", ObjectiveSpec("mean"), starts=16, seed=0))
    elapsed = time.perf_counter() - t0
    verdict(elapsed < 60.0, f"7 cameras / 20 targets, 16 starts: {elapsed:.1f} s (< 60 s), "
                            f"value {result.best_value:.4f}, feasible {result.feasible}")
