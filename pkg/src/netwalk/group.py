"""Group activity features and crowd-escape detection.

A pair of tracked people yields a feature vector combining each person's
scene transmission energy with the relative-network energies of the second
person's motion around the first (ring-count and weighted-ring sums), and
optionally the two motion-intensity energies against a motion field.

Crowd analysis reuses the ring-count relative network, fixed at the image
center: every optical-flow vector is one package whose transition energy
is the ring change it causes, and a sliding window flags clips whose total
energy is a large negative number (everybody moving outward at once).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .classifier import LinearGroupClassifier
from .grid import SceneConfig, Trajectory, relative_route, route_from_trajectory
from .network import (
    MotionField,
    RelativeNetworkSpec,
    build_scene_group_network,
    cell_ring,
    enr_energy,
    motion_intensity_energy,
    relative_route_enr,
    relative_route_ewr,
    total_energy,
)

log = logging.getLogger(__name__)


@dataclass
class GroupFeatureVector:
    """Pair features: scene energies, relative energies, motion energies."""

    pair_id: int
    track_id_1: int
    track_id_2: int
    e1: float
    e2: float
    enr: float
    ewr: float
    emi1: float | None = None
    emi2: float | None = None

    def as_array(self, include_motion: bool = False) -> np.ndarray:
        base = [self.e1, self.e2, self.enr, self.ewr]
        if include_motion:
            if self.emi1 is None or self.emi2 is None:
                raise ValueError("motion energies were not extracted for this pair")
            base += [self.emi1, self.emi2]
        return np.asarray(base, dtype=float)


def extract_pair_features(
    traj_a: Trajectory,
    traj_b: Trajectory,
    scene: SceneConfig,
    spec: RelativeNetworkSpec,
    motion_field: MotionField | None = None,
    pair_id: int = 0,
) -> GroupFeatureVector:
    """Feature vector of a person pair.

    The person with the smaller track id is the reference; the relative
    route is the other person's path through the cell grid centred on the
    reference, with cell size equal to the scene patch size. Swapping the
    argument order therefore changes nothing.
    """
    if traj_a.track_id == traj_b.track_id:
        raise ValueError("pair needs two distinct tracks")
    first, second = (traj_a, traj_b) if traj_a.track_id < traj_b.track_id else (traj_b, traj_a)

    scene_net = build_scene_group_network(scene.rows, scene.columns)
    route_1 = route_from_trajectory(first, scene)
    route_2 = route_from_trajectory(second, scene)
    rel = relative_route(first, second, cell_size=scene.patch_size, r_max=spec.r_max)

    emi1 = emi2 = None
    if motion_field is not None:
        value_1, missing_1 = motion_intensity_energy(
            route_1, route_1.entry_frames[1:], motion_field, first
        )
        value_2, missing_2 = motion_intensity_energy(
            route_2, route_2.entry_frames[1:], motion_field, second
        )
        emi1, emi2 = value_1, value_2
        if missing_1 or missing_2:
            log.warning(
                "pair %d: %d missing motion-field entries treated as zero",
                pair_id, missing_1 + missing_2,
            )
    return GroupFeatureVector(
        pair_id=pair_id,
        track_id_1=first.track_id,
        track_id_2=second.track_id,
        e1=total_energy(route_1, scene_net),
        e2=total_energy(route_2, scene_net),
        enr=relative_route_enr(rel, spec),
        ewr=relative_route_ewr(rel, spec),
        emi1=emi1,
        emi2=emi2,
    )


# ---- pair classification ----

def train_group_classifier(
    features: list[GroupFeatureVector],
    labels: list[str],
    include_motion: bool = False,
) -> LinearGroupClassifier:
    x = np.asarray([f.as_array(include_motion) for f in features])
    return LinearGroupClassifier().fit(x, labels)


def classify_pair(
    model: LinearGroupClassifier,
    feature: GroupFeatureVector,
    include_motion: bool = False,
) -> tuple[str, dict[str, float]]:
    """Predicted class and the per-class scores for one pair."""
    labels, scores = model.predict(feature.as_array(include_motion)[None, :])
    return labels[0], dict(zip(model.classes, scores[0]))


# ---- crowd-escape detection ----

@dataclass
class FlowVector:
    """One optical-flow package: position and displacement at a frame."""

    frame: int
    x: float
    y: float
    dx: float
    dy: float


@dataclass
class CrowdWindow:
    """Sliding-window verdict over a span of frames."""

    start_frame: int
    end_frame: int            # inclusive
    energy: float
    abnormal: bool


def flow_cells(
    flow: FlowVector, center: tuple[float, float], cell_size: float
) -> tuple[tuple[int, int], tuple[int, int]]:
    """Source and destination cells of a flow vector around the center."""
    sx = int(np.rint((flow.x - center[0]) / cell_size))
    sy = int(np.rint((flow.y - center[1]) / cell_size))
    tx = int(np.rint((flow.x + flow.dx - center[0]) / cell_size))
    ty = int(np.rint((flow.y + flow.dy - center[1]) / cell_size))
    return (sx, sy), (tx, ty)


def flow_ring_change(
    flow: FlowVector,
    center: tuple[float, float],
    cell_size: float,
    spec: RelativeNetworkSpec,
) -> tuple[int, int]:
    """Rings of a flow vector's source and destination cells."""
    src, dst = flow_cells(flow, center, cell_size)
    return cell_ring(src, spec.r_max), cell_ring(dst, spec.r_max)


def crowd_window_energy(
    flows: list[FlowVector],
    center: tuple[float, float],
    cell_size: float,
    spec: RelativeNetworkSpec,
) -> float:
    """Total ring-count transmission energy of a set of flow packages.

    Each vector moves one package from the cell of its position to the
    cell of position + displacement; inward moves cost positive energy,
    outward ones negative, so a crowd rushing away from the center drives
    the total far below zero.
    """
    total = 0.0
    for flow in flows:
        src, dst = flow_cells(flow, center, cell_size)
        total += enr_energy(src, dst, spec)
    return total


def crowd_detect(
    flows: list[FlowVector],
    center: tuple[float, float],
    cell_size: float,
    spec: RelativeNetworkSpec,
    window_size: int,
    stride: int,
    threshold: float,
) -> tuple[list[CrowdWindow], dict[int, bool]]:
    """Sliding-window escape detection over per-frame flow vectors.

    A window is abnormal iff its total energy is below -threshold. Every
    frame inherits the flag of any abnormal window covering it.
    """
    if window_size <= 0 or stride <= 0:
        raise ValueError("window size and stride must be positive")
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    if not flows:
        return [], {}
    by_frame: dict[int, list[FlowVector]] = {}
    for flow in flows:
        by_frame.setdefault(int(flow.frame), []).append(flow)
    first = min(by_frame)
    last = max(by_frame)

    windows: list[CrowdWindow] = []
    frame_flags = {f: False for f in range(first, last + 1)}
    start = first
    while True:
        end = min(start + window_size - 1, last)
        bucket: list[FlowVector] = []
        for f in range(start, end + 1):
            bucket.extend(by_frame.get(f, ()))
        energy = crowd_window_energy(bucket, center, cell_size, spec)
        abnormal = energy < -threshold
        windows.append(
            CrowdWindow(start_frame=start, end_frame=end, energy=energy, abnormal=abnormal)
        )
        if abnormal:
            for f in range(start, end + 1):
                frame_flags[f] = True
        if end >= last:
            break
        start += stride
    return windows, frame_flags


def calibrate_crowd_threshold(normal_energies: list[float], k: float = 3.0) -> float:
    """Escape threshold set k standard deviations below the calibration mean.

    Isotropic flow carries a small negative energy bias (a random move
    weakly increases the expected ring because the ring function is
    convex), so the alarm level anchors at the observed mean rather than
    at zero: windows are flagged below mean - k*std, i.e. the returned
    threshold is k*std - mean, floored at zero.
    """
    if not normal_energies:
        raise ValueError("need at least one calibration window")
    energies = np.asarray(normal_energies, dtype=float)
    return max(k * float(np.std(energies)) - float(np.mean(energies)), 0.0)
