"""Two-criterion detection along routes and abnormality typing."""

import numpy as np
import pytest

from netwalk.detection import (
    REASON_T1,
    REASON_T2,
    REASON_UNREACHABLE,
    TYPE_IRREGULAR_PATH,
    TYPE_NORMAL,
    TYPE_REPETITION,
    TYPE_UNUSUAL_REGION,
    classify_type,
    detect,
    energy_trace,
    trace_steps,
)
from netwalk.grid import PatchRoute, SceneConfig
from netwalk.network import LARGE_ENERGY
from netwalk.routing import sbip
from netwalk.training import TrainedAbnormalityModel

# one row of three patches
SCENE = SceneConfig(image_width=144, image_height=48, patch_size=48,
                    entrance_patches=(0,))


def model_with(energy, t1, alpha):
    return TrainedAbnormalityModel(
        scene=SCENE, energy=np.asarray(energy, dtype=float), t1=t1, alpha=alpha,
    )


def test_classify_type_table():
    assert classify_type(20.0, 8.0, 10.0) == TYPE_IRREGULAR_PATH
    assert classify_type(5.0, 8.0, 3.0) == TYPE_REPETITION
    assert classify_type(9.0, 8.0, 12.0) == TYPE_UNUSUAL_REGION
    assert classify_type(5.0, 8.0, 10.0) == TYPE_NORMAL
    # thresholds themselves do not flag
    assert classify_type(8.0, 8.0, 8.0) == TYPE_NORMAL


TRIANGLE = [
    [0.0, 1.0, 5.0],
    [1.0, 0.0, 1.0],
    [5.0, 1.0, 0.0],
]


def test_normal_route_passes():
    model = model_with(TRIANGLE, t1=8.0, alpha=2.0)
    verdict = detect(PatchRoute(patches=[0, 1, 2]), model)
    assert not verdict.abnormal
    assert verdict.abnormality_type == TYPE_NORMAL
    assert verdict.first_flag_step is None
    assert verdict.final_energy == 2.0


def test_repetition_flags_midway_then_recovers_to_type_ii():
    # revisiting the source drives cumulative energy over T2 = alpha * 0,
    # but the final totals stay under both thresholds
    model = model_with(TRIANGLE, t1=8.0, alpha=2.0)
    verdict = detect(PatchRoute(patches=[0, 1, 0, 1, 2]), model)
    assert verdict.abnormal
    assert verdict.first_flag_step == 2
    assert verdict.records[2].reason == REASON_T2
    assert verdict.abnormality_type == TYPE_REPETITION
    assert verdict.final_energy == 4.0
    # flags stick for the remaining steps
    assert all(r.flagged for r in verdict.records[2:])


def test_irregular_path_exceeds_both_thresholds():
    model = model_with(TRIANGLE, t1=8.0, alpha=2.0)
    verdict = detect(PatchRoute(patches=[0, 2, 0, 2]), model)
    assert verdict.abnormal
    assert verdict.abnormality_type == TYPE_IRREGULAR_PATH
    assert verdict.final_energy == 15.0


def test_unusual_region_exceeds_only_t1():
    # expensive direct transition, but T2 at the end patch is generous
    energy = [
        [0.0, 1.0, 9.0],
        [1.0, 0.0, 1.0],
        [9.0, 1.0, 0.0],
    ]
    model = model_with(energy, t1=8.0, alpha=6.0)
    verdict = detect(PatchRoute(patches=[0, 2]), model)
    assert verdict.abnormal
    assert verdict.records[1].reason == REASON_T1
    assert verdict.final_energy == 9.0
    assert verdict.t2_final == pytest.approx(12.0)
    assert verdict.abnormality_type == TYPE_UNUSUAL_REGION


def test_unreachable_patch_flags():
    energy = [
        [0.0, 1.0, LARGE_ENERGY],
        [1.0, 0.0, LARGE_ENERGY],
        [LARGE_ENERGY, LARGE_ENERGY, 0.0],
    ]
    # T1 sits above the cap so only the adaptive criterion can fire
    model = model_with(energy, t1=2.0 * LARGE_ENERGY, alpha=2.0)
    verdict = detect(PatchRoute(patches=[0, 1, 2]), model)
    assert verdict.abnormal
    assert verdict.records[2].reason == REASON_UNREACHABLE
    assert verdict.first_flag_step == 2


def test_criterion_toggles():
    model = model_with(TRIANGLE, t1=8.0, alpha=2.0)
    repetition = PatchRoute(patches=[0, 1, 0, 1, 2])
    # criterion 2 alone catches the repetition; criterion 1 alone cannot
    assert detect(repetition, model, use_criterion1=False).abnormal
    assert not detect(repetition, model, use_criterion2=False).abnormal

    expensive = model_with([[0.0, 1.0, 9.0], [1.0, 0.0, 1.0], [9.0, 1.0, 0.0]],
                           t1=8.0, alpha=6.0)
    direct = PatchRoute(patches=[0, 2])
    assert detect(direct, expensive, use_criterion2=False).abnormal
    assert not detect(direct, expensive, use_criterion1=False).abnormal


def test_trace_steps_records_cumulative_energy():
    model = model_with(TRIANGLE, t1=8.0, alpha=2.0)
    route_map = model.route_map(0)
    records = trace_steps(PatchRoute(patches=[0, 1, 2]), model.energy, route_map,
                          t1=8.0, alpha=2.0, large_energy=LARGE_ENERGY)
    assert [r.energy for r in records] == [0.0, 1.0, 2.0]
    assert [r.e_min for r in records] == [0.0, 1.0, 2.0]
    assert [r.t2 for r in records] == [0.0, 2.0, 4.0]
    assert [r.patch for r in records] == [0, 1, 2]


def test_trace_steps_requires_matching_source():
    model = model_with(TRIANGLE, t1=8.0, alpha=2.0)
    route_map = model.route_map(0)
    with pytest.raises(ValueError, match="source"):
        trace_steps(PatchRoute(patches=[1, 2]), model.energy, route_map,
                    t1=8.0, alpha=2.0, large_energy=LARGE_ENERGY)


def test_energy_trace_matches_detect_records():
    model = model_with(TRIANGLE, t1=8.0, alpha=2.0)
    route = PatchRoute(patches=[0, 1, 0, 1, 2])
    assert energy_trace(route, model) == detect(route, model).records


def test_detection_never_unflags():
    # once flagged, every later record stays flagged, whatever the energies
    rng = np.random.default_rng(59)
    for _ in range(100):
        n = 5
        e = rng.uniform(0.1, 4.0, size=(n, n))
        e = (e + e.T) / 2.0
        np.fill_diagonal(e, 0.0)
        scene = SceneConfig(image_width=48 * n, image_height=48, patch_size=48,
                            entrance_patches=(0,))
        model = TrainedAbnormalityModel(
            scene=scene, energy=e,
            t1=float(rng.uniform(0.5, 6.0)), alpha=float(rng.uniform(1.0, 4.0)),
        )
        patches = [0]
        for _ in range(10):
            nxt = int(rng.integers(n))
            if nxt != patches[-1]:
                patches.append(nxt)
        records = detect(PatchRoute(patches=patches), model).records
        flags = [r.flagged for r in records]
        assert flags == sorted(flags)
