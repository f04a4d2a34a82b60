"""Synthetic corpora: determinism and the structure each label promises."""

import numpy as np

from netwalk.grid import cell_ring, route_from_trajectory
from netwalk.synth import (
    GROUP_CLASSES,
    MOTION_CLASSES,
    SCENE_H,
    SCENE_W,
    AbnormalityCorpusConfig,
    CrowdFlowConfig,
    GroupCorpusConfig,
    MotionGroupConfig,
    abnormality_scene,
    gen_abnormality_corpus,
    gen_crowd_flows,
    gen_group_corpus,
    gen_group_motion_corpus,
    group_scene,
)

SMALL = AbnormalityCorpusConfig(seed=3, n_normal=40, n_irregular=8,
                                n_repetition=8, n_excursion=8)


def same_traj(a, b):
    return (a.track_id == b.track_id
            and np.array_equal(a.frames, b.frames)
            and np.array_equal(a.xs, b.xs)
            and np.array_equal(a.ys, b.ys))


def test_abnormality_corpus_counts_and_bounds():
    trajectories, labels = gen_abnormality_corpus(SMALL)
    assert len(trajectories) == 64
    assert sorted(labels) == sorted(t.track_id for t in trajectories)
    counts = {kind: sum(1 for v in labels.values() if v == kind)
              for kind in ("normal", "I", "II", "III")}
    assert counts == {"normal": 40, "I": 8, "II": 8, "III": 8}
    for t in trajectories:
        assert np.all(t.xs >= 0) and np.all(t.xs < SCENE_W)
        assert np.all(t.ys >= 0) and np.all(t.ys < SCENE_H)


def test_abnormality_corpus_deterministic():
    a, _ = gen_abnormality_corpus(SMALL)
    b, _ = gen_abnormality_corpus(SMALL)
    assert all(same_traj(x, y) for x, y in zip(a, b))
    c, _ = gen_abnormality_corpus(AbnormalityCorpusConfig(
        seed=4, n_normal=40, n_irregular=8, n_repetition=8, n_excursion=8))
    assert not all(same_traj(x, y) for x, y in zip(a, c))


def test_type_i_tracks_leave_the_normal_transitions():
    # an irregular path crosses at least one patch transition that no
    # normal route uses
    scene = abnormality_scene()
    trajectories, labels = gen_abnormality_corpus(SMALL)
    routes = {t.track_id: route_from_trajectory(t, scene) for t in trajectories}
    normal_transitions = set()
    for t in trajectories:
        if labels[t.track_id] != "normal":
            continue
        p = routes[t.track_id].patches
        normal_transitions.update(
            (a, b) if a < b else (b, a) for a, b in zip(p, p[1:])
        )
    for t in trajectories:
        if labels[t.track_id] != "I":
            continue
        p = routes[t.track_id].patches
        used = {(a, b) if a < b else (b, a) for a, b in zip(p, p[1:])}
        assert used - normal_transitions


def test_type_ii_tracks_revisit_patches():
    scene = abnormality_scene()
    trajectories, labels = gen_abnormality_corpus(SMALL)
    for t in trajectories:
        if labels[t.track_id] != "II":
            continue
        patches = route_from_trajectory(t, scene).patches
        assert len(patches) > len(set(patches))


def test_group_corpus_counts_and_labels():
    config = GroupCorpusConfig(seed=5, pairs_per_class=4)
    pairs = gen_group_corpus(config)
    assert len(pairs) == 4 * len(GROUP_CLASSES)
    seen = {p.label for p in pairs}
    assert seen == set(GROUP_CLASSES)
    for p in pairs:
        assert p.traj_a.track_id != p.traj_b.track_id
        # members share their frame range, so relative routes exist
        assert p.traj_a.frames[0] <= p.traj_b.frames[-1]
        assert p.traj_b.frames[0] <= p.traj_a.frames[-1]


def test_group_corpus_deterministic():
    config = GroupCorpusConfig(seed=6, pairs_per_class=3)
    a = gen_group_corpus(config)
    b = gen_group_corpus(config)
    assert all(same_traj(x.traj_a, y.traj_a) and same_traj(x.traj_b, y.traj_b)
               for x, y in zip(a, b))


def test_motion_corpus_field_covers_route_transitions():
    config = MotionGroupConfig(seed=7, pairs_per_class=3)
    pairs, field = gen_group_motion_corpus(config)
    assert len(pairs) == 3 * len(MOTION_CLASSES)
    assert {p.label for p in pairs} == set(MOTION_CLASSES)
    assert all(v >= 0.0 for v in field.values.values())
    scene = group_scene()
    checked = 0
    for p in pairs:
        for traj in (p.traj_a, p.traj_b):
            route = route_from_trajectory(traj, scene)
            for k in range(1, len(route)):
                frame = int(route.entry_frames[k])
                for patch in (route.patches[k - 1], route.patches[k]):
                    assert field.get(frame, patch) is not None
                    checked += 1
    assert checked > 0


def test_crowd_flows_counts_and_truth():
    config = CrowdFlowConfig(seed=8, n_normal_frames=20, n_escape_frames=10,
                             vectors_per_frame=15)
    flows, truth = gen_crowd_flows(config)
    assert len(flows) == 30 * 15
    assert sorted(truth) == list(range(30))
    assert all(not truth[f] for f in range(20))
    assert all(truth[f] for f in range(20, 30))
    per_frame = {}
    for f in flows:
        per_frame[f.frame] = per_frame.get(f.frame, 0) + 1
    assert set(per_frame.values()) == {15}


def test_crowd_escape_flows_move_outward():
    config = CrowdFlowConfig(seed=9, n_normal_frames=5, n_escape_frames=40,
                             vectors_per_frame=20)
    flows, truth = gen_crowd_flows(config)
    spec = config.relative_spec
    outward = total = 0
    for f in flows:
        if not truth[f.frame]:
            continue
        total += 1
        sx = int(np.rint((f.x - config.center[0]) / config.cell_size))
        sy = int(np.rint((f.y - config.center[1]) / config.cell_size))
        tx = int(np.rint((f.x + f.dx - config.center[0]) / config.cell_size))
        ty = int(np.rint((f.y + f.dy - config.center[1]) / config.cell_size))
        outward += cell_ring((tx, ty), spec.r_max) > cell_ring((sx, sy), spec.r_max)
    assert total == 40 * 20
    assert outward / total >= 0.9


def test_crowd_flows_deterministic():
    config = CrowdFlowConfig(seed=10, n_normal_frames=6, n_escape_frames=6,
                             vectors_per_frame=5)
    a, _ = gen_crowd_flows(config)
    b, _ = gen_crowd_flows(config)
    assert [(f.frame, f.x, f.y, f.dx, f.dy) for f in a] == \
           [(f.frame, f.x, f.y, f.dx, f.dy) for f in b]
