"""Patch grid geometry and route extraction."""

import numpy as np
import pytest

from netwalk.grid import (
    PatchRoute,
    RelativeCellRoute,
    SceneConfig,
    Trajectory,
    cell_ring,
    locate_patch,
    locate_patches,
    relative_route,
    route_from_trajectory,
)

SCENE = SceneConfig(image_width=640, image_height=480, patch_size=48)


def test_grid_dimensions():
    # 640/48 and 480/48 round up
    assert SCENE.columns == 14
    assert SCENE.rows == 10
    assert SCENE.patch_count == 140


def test_locate_patch_frozen_values():
    # row 1 = 50 // 48, col 2 = 100 // 48 -> 1 * 14 + 2
    assert locate_patch(100, 50, SCENE) == 16
    # last row/col: 479 // 48 = 9, 639 // 48 = 13 -> 9 * 14 + 13
    assert locate_patch(639, 479, SCENE) == 139
    assert locate_patch(0, 0, SCENE) == 0


def test_locate_patch_clamps_out_of_bounds():
    assert locate_patch(-5, -5, SCENE) == 0
    assert locate_patch(1000, 1000, SCENE) == 139
    # the image boundary itself belongs to the border patch
    assert locate_patch(640, 480, SCENE) == 139


def test_locate_patches_matches_scalar():
    rng = np.random.default_rng(11)
    xs = rng.uniform(-50, 700, size=500)
    ys = rng.uniform(-50, 530, size=500)
    vec = locate_patches(xs, ys, SCENE)
    for k in range(len(xs)):
        assert vec[k] == locate_patch(xs[k], ys[k], SCENE)


def test_patch_cell_and_center():
    assert SCENE.patch_cell(16) == (1, 2)
    assert SCENE.patch_center(16) == (120.0, 72.0)
    assert SCENE.patch_cell(0) == (0, 0)


def test_scene_config_validation():
    with pytest.raises(ValueError):
        SceneConfig(image_width=640, image_height=480, patch_size=0)
    with pytest.raises(ValueError):
        SceneConfig(image_width=0, image_height=480, patch_size=48)
    with pytest.raises(ValueError):
        SceneConfig(image_width=640, image_height=480, patch_size=48,
                    entrance_patches=(140,))
    with pytest.raises(ValueError):
        SceneConfig(image_width=640, image_height=480, patch_size=48,
                    equivalence_sets=((0, 1), (1, 2)))


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(track_id=1, frames=[0, 1], xs=[0.0], ys=[0.0, 1.0])
    with pytest.raises(ValueError):
        Trajectory(track_id=1, frames=[0, 2, 1], xs=[0, 0, 0], ys=[0, 0, 0])
    t = Trajectory(track_id=1, frames=[0, 1, 2], xs=[1, 2, 3], ys=[4, 5, 6])
    assert len(t) == 3


def test_patch_route_rejects_consecutive_duplicates():
    with pytest.raises(ValueError):
        PatchRoute(patches=[3, 3, 4])
    with pytest.raises(ValueError):
        PatchRoute(patches=[])
    with pytest.raises(ValueError):
        PatchRoute(patches=[1, 2], entry_frames=[0.0])
    r = PatchRoute(patches=[3, 4, 3])
    assert r.start == 3 and r.end == 3 and len(r) == 3


def test_route_from_trajectory_collapses_and_keeps_entry_frames():
    # x walks through columns 0, 0, 1, 1, 2 along the first patch row
    traj = Trajectory(
        track_id=7,
        frames=[10, 11, 12, 13, 14],
        xs=[10.0, 20.0, 70.0, 80.0, 130.0],
        ys=[24.0] * 5,
    )
    route = route_from_trajectory(traj, SCENE)
    assert route.patches == [0, 1, 2]
    assert route.entry_frames == [10.0, 12.0, 14.0]


def test_route_from_trajectory_keeps_revisits():
    traj = Trajectory(
        track_id=7,
        frames=[0, 1, 2],
        xs=[10.0, 70.0, 10.0],
        ys=[24.0] * 3,
    )
    assert route_from_trajectory(traj, SCENE).patches == [0, 1, 0]


def test_cell_ring():
    assert cell_ring((0, 0), 15) == 0
    assert cell_ring((2, -1), 15) == 2
    assert cell_ring((-3, -3), 15) == 3
    # clamping at r_max
    assert cell_ring((5, 3), 4) == 4


def test_relative_route_quantization():
    # reference stands; the other walks three cells away along +x
    ref = Trajectory(track_id=1, frames=np.arange(5),
                     xs=np.full(5, 100.0), ys=np.full(5, 100.0))
    other = Trajectory(track_id=2, frames=np.arange(5),
                       xs=100.0 + np.array([0.0, 30.0, 60.0, 90.0, 90.0]),
                       ys=np.full(5, 100.0))
    rel = relative_route(ref, other, cell_size=48.0, r_max=15)
    assert rel.cells == [(0, 0), (1, 0), (2, 0)]
    assert rel.rings == [0, 1, 2]
    assert len(rel) == 3


def test_relative_route_rounds_to_nearest():
    ref = Trajectory(track_id=1, frames=[0, 1], xs=[0.0, 0.0], ys=[0.0, 0.0])
    near = Trajectory(track_id=2, frames=[0, 1], xs=[23.9, 24.1], ys=[0.0, 0.0])
    rel = relative_route(ref, near, cell_size=48.0, r_max=15)
    # 23.9 / 48 rounds to cell 0, 24.1 / 48 to cell 1
    assert rel.cells == [(0, 0), (1, 0)]


def test_relative_route_interpolates_other_track():
    ref = Trajectory(track_id=1, frames=np.arange(11),
                     xs=np.zeros(11), ys=np.zeros(11))
    other = Trajectory(track_id=2, frames=[0, 10], xs=[0.0, 480.0], ys=[0.0, 0.0])
    rel = relative_route(ref, other, cell_size=48.0, r_max=15)
    # linear motion at 48 px per frame crosses one cell per frame
    assert rel.cells == [(k, 0) for k in range(11)]


def test_relative_route_disjoint_tracks():
    ref = Trajectory(track_id=1, frames=[0, 1], xs=[0, 0], ys=[0, 0])
    other = Trajectory(track_id=2, frames=[5, 6], xs=[0, 0], ys=[0, 0])
    with pytest.raises(ValueError, match="disjoint"):
        relative_route(ref, other, cell_size=48.0, r_max=15)


def test_relative_cell_route_len():
    rel = RelativeCellRoute(cells=[(0, 0), (1, 0)], rings=[0, 1])
    assert len(rel) == 2
