"""File formats: exact round trips, malformed-input diagnostics."""

import json
import os

import numpy as np
import pytest

from netwalk.grid import SceneConfig, Trajectory
from netwalk.group import FlowVector, GroupFeatureVector
from netwalk.io import (
    DataError,
    load_flows,
    load_frame_labels,
    load_group_features,
    load_group_model,
    load_labels,
    load_model,
    load_motion_field,
    load_pair_labels,
    load_scene,
    load_trajectories,
    route_map_dot,
    save_flows,
    save_frame_labels,
    save_group_features,
    save_group_model,
    save_labels,
    save_model,
    save_motion_field,
    save_pair_labels,
    save_scene,
    save_trajectories,
)
from netwalk.classifier import LinearGroupClassifier
from netwalk.network import MotionField, TransmissionNetwork
from netwalk.routing import sbip
from netwalk.training import TrainedAbnormalityModel

SCENE = SceneConfig(image_width=640, image_height=480, patch_size=48,
                    entrance_patches=(126,), equivalence_sets=((0, 1),))


def random_trajectories(rng, count=5):
    out = []
    for track_id in range(count):
        n = int(rng.integers(2, 12))
        out.append(Trajectory(
            track_id=track_id,
            frames=np.cumsum(rng.uniform(0.5, 2.0, size=n)),
            xs=rng.uniform(0, 640, size=n),
            ys=rng.uniform(0, 480, size=n),
        ))
    return out


def test_trajectories_round_trip_exact(tmp_path):
    rng = np.random.default_rng(73)
    path = str(tmp_path / "t.csv")
    for _ in range(20):
        original = random_trajectories(rng)
        save_trajectories(path, original)
        loaded = load_trajectories(path)
        assert len(loaded) == len(original)
        for a, b in zip(original, loaded):
            assert a.track_id == b.track_id
            assert np.array_equal(a.frames, b.frames)
            assert np.array_equal(a.xs, b.xs)
            assert np.array_equal(a.ys, b.ys)


def test_trajectories_malformed_inputs(tmp_path):
    path = str(tmp_path / "bad.csv")

    def write(text):
        with open(path, "w") as fh:
            fh.write(text)

    write("track,frame,x,y\n")
    with pytest.raises(DataError, match="header"):
        load_trajectories(path)

    write("track_id,frame,x,y\n1,0,1\n")
    with pytest.raises(DataError, match=":2: expected 4 fields"):
        load_trajectories(path)

    write("track_id,frame,x,y\n1,0,a,2\n")
    with pytest.raises(DataError, match=":2:"):
        load_trajectories(path)

    write("track_id,frame,x,y\n1,5,0,0\n1,5,1,1\n")
    with pytest.raises(DataError, match="frames must increase"):
        load_trajectories(path)

    with pytest.raises(DataError):
        load_trajectories(str(tmp_path / "missing.csv"))


def test_labels_round_trip_and_duplicates(tmp_path):
    path = str(tmp_path / "labels.csv")
    labels = {3: "normal", 1: "II", 7: "I"}
    save_labels(path, labels)
    assert load_labels(path) == labels

    with open(path, "w") as fh:
        fh.write("track_id,label\n1,normal\n1,II\n")
    with pytest.raises(DataError, match="duplicate"):
        load_labels(path)


def test_motion_field_round_trip(tmp_path):
    rng = np.random.default_rng(79)
    path = str(tmp_path / "field.csv")
    field = MotionField()
    for _ in range(50):
        field.set(int(rng.integers(0, 100)), int(rng.integers(0, SCENE.patch_count)),
                  float(rng.uniform(0, 30)))
    save_motion_field(path, field, SCENE)
    assert load_motion_field(path, SCENE).values == field.values


def test_motion_field_rejects_out_of_grid_cells(tmp_path):
    path = str(tmp_path / "field.csv")
    with open(path, "w") as fh:
        fh.write("frame,patch_row,patch_col,magnitude\n0,99,0,1.5\n")
    with pytest.raises(DataError, match=":2:.*outside"):
        load_motion_field(path, SCENE)


def test_flows_round_trip(tmp_path):
    rng = np.random.default_rng(83)
    path = str(tmp_path / "flows.csv")
    flows = [FlowVector(frame=int(rng.integers(0, 50)),
                        x=float(rng.uniform(0, 640)), y=float(rng.uniform(0, 480)),
                        dx=float(rng.normal()), dy=float(rng.normal()))
             for _ in range(100)]
    save_flows(path, flows)
    loaded = load_flows(path)
    assert [(f.frame, f.x, f.y, f.dx, f.dy) for f in loaded] == \
           [(f.frame, f.x, f.y, f.dx, f.dy) for f in flows]


def test_frame_labels_round_trip(tmp_path):
    path = str(tmp_path / "frames.csv")
    truth = {0: False, 1: True, 2: True}
    save_frame_labels(path, truth)
    assert load_frame_labels(path) == truth


def test_pair_labels_round_trip(tmp_path):
    path = str(tmp_path / "pairs.csv")
    pairs = [(0, 1, 2, "meet"), (1, 3, 4, "follow")]
    save_pair_labels(path, pairs)
    assert load_pair_labels(path) == pairs


def test_group_features_round_trip_with_missing_motion(tmp_path):
    path = str(tmp_path / "features.csv")
    rng = np.random.default_rng(89)
    features = [
        GroupFeatureVector(pair_id=0, track_id_1=1, track_id_2=2,
                           e1=float(rng.uniform(0, 20)), e2=float(rng.uniform(0, 20)),
                           enr=float(rng.normal()), ewr=float(rng.normal()),
                           emi1=float(rng.uniform(0, 50)), emi2=float(rng.uniform(0, 50))),
        GroupFeatureVector(pair_id=1, track_id_1=3, track_id_2=4,
                           e1=1.5, e2=2.5, enr=-1.0, ewr=0.25),
    ]
    save_group_features(path, features, labels={0: "meet", 1: "follow"})
    loaded, labels = load_group_features(path)
    assert labels == {0: "meet", 1: "follow"}
    for a, b in zip(features, loaded):
        assert (a.pair_id, a.track_id_1, a.track_id_2) == (b.pair_id, b.track_id_1, b.track_id_2)
        assert (a.e1, a.e2, a.enr, a.ewr) == (b.e1, b.e2, b.enr, b.ewr)
        assert a.emi1 == b.emi1 and a.emi2 == b.emi2
    assert loaded[1].emi1 is None


def test_scene_json_round_trip(tmp_path):
    path = str(tmp_path / "scene.json")
    save_scene(path, SCENE)
    assert load_scene(path) == SCENE


def test_scene_json_strict_keys(tmp_path):
    path = str(tmp_path / "scene.json")
    good = {"image_width": 640, "image_height": 480, "patch_size": 48,
            "entrance_patches": [0], "equivalence_sets": []}

    missing = dict(good)
    del missing["patch_size"]
    with open(path, "w") as fh:
        json.dump(missing, fh)
    with pytest.raises(DataError, match="patch_size"):
        load_scene(path)

    unknown = dict(good, extra=1)
    with open(path, "w") as fh:
        json.dump(unknown, fh)
    with pytest.raises(DataError, match="extra"):
        load_scene(path)

    with open(path, "w") as fh:
        fh.write("{not json")
    with pytest.raises(DataError):
        load_scene(path)


def make_model(rng, scene=SCENE):
    n = scene.patch_count
    e = rng.uniform(0.01, 50.0, size=(n, n))
    e = (e + e.T) / 2.0
    np.fill_diagonal(e, 0.0)
    return TrainedAbnormalityModel(
        scene=scene, energy=e,
        t1=float(rng.uniform(0.5, 20.0)), alpha=float(rng.uniform(1.0, 10.0)),
        converged=bool(rng.integers(2)), iterations=int(rng.integers(1, 50)),
    )


def test_model_round_trip_exact(tmp_path):
    rng = np.random.default_rng(97)
    path = str(tmp_path / "model.json")
    small = SceneConfig(image_width=96, image_height=96, patch_size=48,
                        entrance_patches=(0,))
    for _ in range(10):
        model = make_model(rng, small)
        save_model(path, model)
        loaded = load_model(path)
        assert loaded.scene == model.scene
        assert np.array_equal(loaded.energy, model.energy)
        assert loaded.t1 == model.t1
        assert loaded.alpha == model.alpha
        assert loaded.large_energy == model.large_energy
        assert loaded.converged == model.converged
        assert loaded.iterations == model.iterations


def test_model_file_is_stable_across_saves(tmp_path):
    rng = np.random.default_rng(101)
    small = SceneConfig(image_width=96, image_height=96, patch_size=48)
    model = make_model(rng, small)
    first = str(tmp_path / "a.json")
    second = str(tmp_path / "b.json")
    save_model(first, model)
    save_model(second, load_model(first))
    with open(first, "rb") as fa, open(second, "rb") as fb:
        assert fa.read() == fb.read()


def test_model_json_validation(tmp_path):
    rng = np.random.default_rng(103)
    small = SceneConfig(image_width=96, image_height=96, patch_size=48)
    path = str(tmp_path / "model.json")
    save_model(path, make_model(rng, small))

    with open(path) as fh:
        data = json.load(fh)

    wrong_kind = dict(data, kind="something-else")
    with open(path, "w") as fh:
        json.dump(wrong_kind, fh)
    with pytest.raises(DataError, match="kind"):
        load_model(path)

    wrong_version = dict(data, format_version=99)
    with open(path, "w") as fh:
        json.dump(wrong_version, fh)
    with pytest.raises(DataError, match="format_version"):
        load_model(path)

    bad_shape = dict(data, energy=[[0.0, 1.0], [1.0, 0.0]])
    with open(path, "w") as fh:
        json.dump(bad_shape, fh)
    with pytest.raises(DataError):
        load_model(path)

    del data["t1"]
    with open(path, "w") as fh:
        json.dump(data, fh)
    with pytest.raises(DataError, match="t1"):
        load_model(path)


def test_group_model_round_trip(tmp_path):
    rng = np.random.default_rng(107)
    path = str(tmp_path / "group.json")
    x = rng.normal(size=(40, 4))
    labels = ["near" if v > 0 else "far" for v in x[:, 2]]
    clf = LinearGroupClassifier().fit(x, labels)
    save_group_model(path, clf, include_motion=False)
    loaded, include_motion = load_group_model(path)
    assert not include_motion
    assert loaded.classes == clf.classes
    assert np.array_equal(loaded.weights, clf.weights)
    assert np.array_equal(loaded.biases, clf.biases)
    assert np.array_equal(loaded.mean, clf.mean)
    assert np.array_equal(loaded.scale, clf.scale)


def test_route_map_dot_output():
    net = TransmissionNetwork(energy=np.array([
        [0.0, 1.0, 5.0],
        [1.0, 0.0, 1.0],
        [5.0, 1.0, 0.0],
    ]))
    text = route_map_dot(sbip(net, 0), net)
    assert text.startswith("digraph")
    assert "0 -> 1" in text
    assert "doublecircle" in text


def test_atomic_write_leaves_no_temp_files(tmp_path):
    path = str(tmp_path / "out.csv")
    save_labels(path, {1: "normal"})
    save_labels(path, {1: "II"})
    assert os.listdir(tmp_path) == ["out.csv"]
    assert load_labels(path) == {1: "II"}
