"""File formats: delimited tables for data, JSON for scenes and models.

All writers are atomic (temp file in the target directory, then replace)
so a crash never leaves a half-written artifact. All loaders validate
eagerly and raise ``DataError`` with the file and line that offended.
Model JSON is written with sorted keys and no timestamps, so re-saving
an unchanged model reproduces the file byte for byte.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from typing import Any, Iterable

import numpy as np

from .classifier import LinearGroupClassifier
from .detection import StepRecord
from .grid import SceneConfig, Trajectory
from .group import FlowVector, GroupFeatureVector
from .network import MotionField, TransmissionNetwork
from .routing import RouteMap, tree_edges
from .training import IterationRecord, TrainedAbnormalityModel

MODEL_FORMAT_VERSION = 1


class DataError(Exception):
    """A file could not be parsed or failed validation."""


# ---- low-level helpers ----

def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_csv(path: str, header: list[str], rows: Iterable[list]) -> None:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    _atomic_write(path, buf.getvalue())


def _read_csv(path: str, header: list[str]) -> list[tuple[int, list[str]]]:
    """Rows as (line_number, fields); the header row is checked verbatim."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            rows = [(i + 1, row) for i, row in enumerate(reader) if row]
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from exc
    if not rows:
        raise DataError(f"{path}:1: empty file, expected header {','.join(header)}")
    first_no, first = rows[0]
    if [f.strip() for f in first] != header:
        raise DataError(
            f"{path}:{first_no}: bad header {','.join(first)!r},"
            f" expected {','.join(header)!r}"
        )
    for line_no, row in rows[1:]:
        if len(row) != len(header):
            raise DataError(
                f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}"
            )
    return rows[1:]


def _as_float(value: str, path: str, line_no: int, name: str) -> float:
    try:
        return float(value)
    except ValueError as exc:
        raise DataError(f"{path}:{line_no}: field {name} is not a number: {value!r}") from exc


def _as_int(value: str, path: str, line_no: int, name: str) -> int:
    try:
        return int(value)
    except ValueError as exc:
        raise DataError(f"{path}:{line_no}: field {name} is not an integer: {value!r}") from exc


# ---- trajectories and labels ----

TRAJECTORY_HEADER = ["track_id", "frame", "x", "y"]


def save_trajectories(path: str, trajectories: list[Trajectory]) -> None:
    rows = []
    for traj in trajectories:
        for frame, x, y in zip(traj.frames, traj.xs, traj.ys):
            rows.append([traj.track_id, _num(frame), _num(x), _num(y)])
    _write_csv(path, TRAJECTORY_HEADER, rows)


def load_trajectories(path: str) -> list[Trajectory]:
    per_track: dict[int, list[tuple[float, float, float]]] = {}
    order: list[int] = []
    for line_no, row in _read_csv(path, TRAJECTORY_HEADER):
        track = _as_int(row[0], path, line_no, "track_id")
        frame = _as_float(row[1], path, line_no, "frame")
        x = _as_float(row[2], path, line_no, "x")
        y = _as_float(row[3], path, line_no, "y")
        if track not in per_track:
            per_track[track] = []
            order.append(track)
        samples = per_track[track]
        if samples and frame <= samples[-1][0]:
            raise DataError(
                f"{path}:{line_no}: track {track} frames must increase"
                f" ({_num(samples[-1][0])} then {_num(frame)})"
            )
        samples.append((frame, x, y))
    out = []
    for track in order:
        data = np.asarray(per_track[track])
        out.append(
            Trajectory(track_id=track, frames=data[:, 0], xs=data[:, 1], ys=data[:, 2])
        )
    return out


LABEL_HEADER = ["track_id", "label"]


def save_labels(path: str, labels: dict[int, str]) -> None:
    _write_csv(path, LABEL_HEADER, [[k, v] for k, v in labels.items()])


def load_labels(path: str) -> dict[int, str]:
    labels: dict[int, str] = {}
    for line_no, row in _read_csv(path, LABEL_HEADER):
        track = _as_int(row[0], path, line_no, "track_id")
        if track in labels:
            raise DataError(f"{path}:{line_no}: duplicate label for track {track}")
        labels[track] = row[1].strip()
    return labels


# ---- motion field and flows ----

FIELD_HEADER = ["frame", "patch_row", "patch_col", "magnitude"]


def save_motion_field(path: str, field: MotionField, scene: SceneConfig) -> None:
    rows = []
    for (frame, patch), magnitude in sorted(field.values.items()):
        r, c = scene.patch_cell(patch)
        rows.append([frame, r, c, _num(magnitude)])
    _write_csv(path, FIELD_HEADER, rows)


def load_motion_field(path: str, scene: SceneConfig) -> MotionField:
    field = MotionField()
    for line_no, row in _read_csv(path, FIELD_HEADER):
        frame = _as_int(row[0], path, line_no, "frame")
        r = _as_int(row[1], path, line_no, "patch_row")
        c = _as_int(row[2], path, line_no, "patch_col")
        magnitude = _as_float(row[3], path, line_no, "magnitude")
        if not (0 <= r < scene.rows and 0 <= c < scene.columns):
            raise DataError(
                f"{path}:{line_no}: patch cell ({r}, {c}) outside"
                f" {scene.rows}x{scene.columns} grid"
            )
        field.set(frame, r * scene.columns + c, magnitude)
    return field


FLOW_HEADER = ["frame", "x", "y", "dx", "dy"]


def save_flows(path: str, flows: list[FlowVector]) -> None:
    _write_csv(
        path,
        FLOW_HEADER,
        [[f.frame, _num(f.x), _num(f.y), _num(f.dx), _num(f.dy)] for f in flows],
    )


def load_flows(path: str) -> list[FlowVector]:
    flows = []
    for line_no, row in _read_csv(path, FLOW_HEADER):
        flows.append(
            FlowVector(
                frame=_as_int(row[0], path, line_no, "frame"),
                x=_as_float(row[1], path, line_no, "x"),
                y=_as_float(row[2], path, line_no, "y"),
                dx=_as_float(row[3], path, line_no, "dx"),
                dy=_as_float(row[4], path, line_no, "dy"),
            )
        )
    return flows


FRAME_LABEL_HEADER = ["frame", "abnormal"]


def save_frame_labels(path: str, truth: dict[int, bool]) -> None:
    _write_csv(path, FRAME_LABEL_HEADER, [[k, int(v)] for k, v in sorted(truth.items())])


def load_frame_labels(path: str) -> dict[int, bool]:
    truth = {}
    for line_no, row in _read_csv(path, FRAME_LABEL_HEADER):
        truth[_as_int(row[0], path, line_no, "frame")] = bool(
            _as_int(row[1], path, line_no, "abnormal")
        )
    return truth


# ---- pair labels and group features ----

PAIR_HEADER = ["pair_id", "track_id_1", "track_id_2", "label"]


def save_pair_labels(path: str, pairs: list[tuple[int, int, int, str]]) -> None:
    _write_csv(path, PAIR_HEADER, [list(p) for p in pairs])


def load_pair_labels(path: str) -> list[tuple[int, int, int, str]]:
    out = []
    for line_no, row in _read_csv(path, PAIR_HEADER):
        out.append(
            (
                _as_int(row[0], path, line_no, "pair_id"),
                _as_int(row[1], path, line_no, "track_id_1"),
                _as_int(row[2], path, line_no, "track_id_2"),
                row[3].strip(),
            )
        )
    return out


FEATURE_HEADER = [
    "pair_id",
    "track_id_1",
    "track_id_2",
    "scene_energy_1",
    "scene_energy_2",
    "ring_change_energy",
    "weighted_ring_energy",
    "motion_energy_1",
    "motion_energy_2",
    "label",
]


def save_group_features(
    path: str,
    features: list[GroupFeatureVector],
    labels: dict[int, str] | None = None,
) -> None:
    rows = []
    for f in features:
        rows.append(
            [
                f.pair_id,
                f.track_id_1,
                f.track_id_2,
                _num(f.e1),
                _num(f.e2),
                _num(f.enr),
                _num(f.ewr),
                "" if f.emi1 is None else _num(f.emi1),
                "" if f.emi2 is None else _num(f.emi2),
                "" if labels is None else labels.get(f.pair_id, ""),
            ]
        )
    _write_csv(path, FEATURE_HEADER, rows)


def load_group_features(
    path: str,
) -> tuple[list[GroupFeatureVector], dict[int, str]]:
    """Feature rows plus whatever labels the file carries (possibly none)."""
    features = []
    labels: dict[int, str] = {}
    for line_no, row in _read_csv(path, FEATURE_HEADER):
        pair_id = _as_int(row[0], path, line_no, "pair_id")
        features.append(
            GroupFeatureVector(
                pair_id=pair_id,
                track_id_1=_as_int(row[1], path, line_no, "track_id_1"),
                track_id_2=_as_int(row[2], path, line_no, "track_id_2"),
                e1=_as_float(row[3], path, line_no, "scene_energy_1"),
                e2=_as_float(row[4], path, line_no, "scene_energy_2"),
                enr=_as_float(row[5], path, line_no, "ring_change_energy"),
                ewr=_as_float(row[6], path, line_no, "weighted_ring_energy"),
                emi1=None if row[7] == "" else _as_float(row[7], path, line_no, "motion_energy_1"),
                emi2=None if row[8] == "" else _as_float(row[8], path, line_no, "motion_energy_2"),
            )
        )
        if row[9].strip():
            labels[pair_id] = row[9].strip()
    return features, labels


# ---- training, detection and evaluation artifacts ----

HISTORY_HEADER = [
    "iteration",
    "t1",
    "alpha",
    "err_fa",
    "err_miss",
    "objective",
    "false_alarms",
    "misses",
    "max_energy_change",
]


def save_training_history(path: str, history: list[IterationRecord]) -> None:
    _write_csv(
        path,
        HISTORY_HEADER,
        [
            [
                h.iteration,
                _num(h.t1),
                _num(h.alpha),
                _num(h.err_fa),
                _num(h.err_miss),
                _num(h.objective),
                h.false_alarms,
                h.misses,
                _num(h.max_energy_change),
            ]
            for h in history
        ],
    )


TRACE_HEADER = ["step", "patch", "energy", "min_energy", "t1", "t2", "flagged", "reason"]


def save_trace(path: str, records: list[StepRecord], t1: float) -> None:
    _write_csv(
        path,
        TRACE_HEADER,
        [
            [
                r.step,
                r.patch,
                _num(r.energy),
                _num(r.e_min),
                _num(t1),
                _num(r.t2),
                int(r.flagged),
                r.reason or "",
            ]
            for r in records
        ],
    )


PREDICTION_HEADER = [
    "track_id",
    "abnormal",
    "type",
    "final_energy",
    "first_flag_step",
]


def save_predictions(path: str, rows: list[dict[str, Any]]) -> None:
    _write_csv(
        path,
        PREDICTION_HEADER,
        [
            [
                r["track_id"],
                int(r["abnormal"]),
                r["type"],
                _num(r["final_energy"]),
                "" if r["first_flag_step"] is None else r["first_flag_step"],
            ]
            for r in rows
        ],
    )


ROUTE_MAP_HEADER = ["patch", "min_energy", "route"]


def save_route_map_csv(path: str, route_map: RouteMap) -> None:
    rows = []
    for patch in range(route_map.node_count):
        route = route_map.routes[patch]
        rows.append(
            [
                patch,
                _num(route_map.e_min[patch]),
                "" if route is None else " ".join(str(p) for p in route),
            ]
        )
    _write_csv(path, ROUTE_MAP_HEADER, rows)


def route_map_dot(route_map: RouteMap, network: TransmissionNetwork) -> str:
    """Graphviz rendering of the minimum-energy route tree."""
    lines = ["digraph route_map {", f'  {route_map.source} [shape=doublecircle];']
    for pred, node, energy in tree_edges(route_map, network):
        lines.append(f'  {pred} -> {node} [label="{energy:.6g}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def save_route_map_dot(path: str, route_map: RouteMap, network: TransmissionNetwork) -> None:
    _atomic_write(path, route_map_dot(route_map, network))


ROC_HEADER = ["threshold", "fpr", "tpr"]


def save_roc(path: str, points: list[tuple[float, float, float]]) -> None:
    _write_csv(path, ROC_HEADER, [[_num(t), _num(f), _num(p)] for t, f, p in points])


WINDOW_HEADER = ["start_frame", "end_frame", "energy", "abnormal"]


def save_windows(path: str, windows) -> None:
    _write_csv(
        path,
        WINDOW_HEADER,
        [[w.start_frame, w.end_frame, _num(w.energy), int(w.abnormal)] for w in windows],
    )


# ---- scenes and models (JSON) ----

_SCENE_KEYS = {
    "image_width",
    "image_height",
    "patch_size",
    "entrance_patches",
    "equivalence_sets",
}


def scene_to_dict(scene: SceneConfig) -> dict[str, Any]:
    return {
        "image_width": scene.image_width,
        "image_height": scene.image_height,
        "patch_size": scene.patch_size,
        "entrance_patches": list(scene.entrance_patches),
        "equivalence_sets": [list(group) for group in scene.equivalence_sets],
    }


def scene_from_dict(data: Any, where: str) -> SceneConfig:
    if not isinstance(data, dict):
        raise DataError(f"{where}: scene must be an object")
    missing = _SCENE_KEYS - set(data)
    unknown = set(data) - _SCENE_KEYS
    if missing:
        raise DataError(f"{where}: scene is missing keys {sorted(missing)}")
    if unknown:
        raise DataError(f"{where}: scene has unknown keys {sorted(unknown)}")
    try:
        return SceneConfig(
            image_width=int(data["image_width"]),
            image_height=int(data["image_height"]),
            patch_size=int(data["patch_size"]),
            entrance_patches=tuple(int(p) for p in data["entrance_patches"]),
            equivalence_sets=tuple(
                tuple(int(p) for p in group) for group in data["equivalence_sets"]
            ),
        )
    except (TypeError, ValueError) as exc:
        raise DataError(f"{where}: invalid scene: {exc}") from exc


def save_scene(path: str, scene: SceneConfig) -> None:
    _atomic_write(path, _json_text(scene_to_dict(scene)))


def load_scene(path: str) -> SceneConfig:
    return scene_from_dict(_load_json(path), path)


_MODEL_REQUIRED = {
    "format_version",
    "kind",
    "scene",
    "energy",
    "large_energy",
    "t1",
    "alpha",
}
_MODEL_OPTIONAL = {"converged", "iterations", "training_log", "created_by"}
MODEL_KIND = "route-energy-abnormality"
CREATED_BY = "netwalk"


def model_to_dict(
    model: TrainedAbnormalityModel, training_log: str | None = None
) -> dict[str, Any]:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": MODEL_KIND,
        "scene": scene_to_dict(model.scene),
        "energy": [[_round(v) for v in row] for row in model.energy],
        "large_energy": model.large_energy,
        "t1": model.t1,
        "alpha": model.alpha,
        "converged": model.converged,
        "iterations": model.iterations,
        "training_log": training_log,
        "created_by": CREATED_BY,
    }


def save_model(
    path: str, model: TrainedAbnormalityModel, training_log: str | None = None
) -> None:
    _atomic_write(path, _json_text(model_to_dict(model, training_log)))


def load_model(path: str) -> TrainedAbnormalityModel:
    data = _load_json(path)
    _check_keys(data, _MODEL_REQUIRED, _MODEL_OPTIONAL, path, MODEL_KIND)
    scene = scene_from_dict(data["scene"], path)
    energy = np.asarray(data["energy"], dtype=float)
    if energy.ndim != 2 or energy.shape[0] != energy.shape[1]:
        raise DataError(f"{path}: energy must be a square matrix")
    if energy.shape[0] != scene.patch_count:
        raise DataError(
            f"{path}: energy is {energy.shape[0]}x{energy.shape[1]} but the"
            f" scene has {scene.patch_count} patches"
        )
    try:
        return TrainedAbnormalityModel(
            scene=scene,
            energy=energy,
            t1=float(data["t1"]),
            alpha=float(data["alpha"]),
            large_energy=float(data["large_energy"]),
            converged=bool(data.get("converged", True)),
            iterations=int(data.get("iterations", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: invalid model: {exc}") from exc


_GROUP_MODEL_REQUIRED = {
    "format_version",
    "kind",
    "classes",
    "weights",
    "biases",
    "mean",
    "scale",
    "include_motion",
}
GROUP_MODEL_KIND = "group-linear"


def group_model_to_dict(model: LinearGroupClassifier, include_motion: bool) -> dict[str, Any]:
    if model.weights is None:
        raise ValueError("classifier is not fitted")
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": GROUP_MODEL_KIND,
        "classes": list(model.classes),
        "weights": [[_round(v) for v in row] for row in model.weights],
        "biases": [_round(v) for v in model.biases],
        "mean": [_round(v) for v in model.mean],
        "scale": [_round(v) for v in model.scale],
        "include_motion": include_motion,
    }


def save_group_model(path: str, model: LinearGroupClassifier, include_motion: bool) -> None:
    _atomic_write(path, _json_text(group_model_to_dict(model, include_motion)))


def load_group_model(path: str) -> tuple[LinearGroupClassifier, bool]:
    data = _load_json(path)
    _check_keys(data, _GROUP_MODEL_REQUIRED, set(), path, GROUP_MODEL_KIND)
    try:
        model = LinearGroupClassifier(
            classes=[str(c) for c in data["classes"]],
            weights=np.asarray(data["weights"], dtype=float),
            biases=np.asarray(data["biases"], dtype=float),
            mean=np.asarray(data["mean"], dtype=float),
            scale=np.asarray(data["scale"], dtype=float),
        )
        include_motion = bool(data["include_motion"])
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: invalid model: {exc}") from exc
    expected = 6 if include_motion else 4
    if model.weights.ndim != 2 or model.weights.shape != (
        len(model.classes),
        expected,
    ):
        raise DataError(
            f"{path}: weights must be {len(model.classes)}x{expected}"
            f" for include_motion={include_motion}"
        )
    return model, include_motion


# ---- shared JSON plumbing ----

def save_json(path: str, data: Any) -> None:
    """Deterministic JSON dump (sorted keys, fixed separators), atomic."""
    _atomic_write(path, _json_text(data))


def _json_text(data: dict[str, Any]) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ": "), indent=1) + "\n"


def _load_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc


def _check_keys(
    data: Any, required: set[str], optional: set[str], path: str, kind: str
) -> None:
    if not isinstance(data, dict):
        raise DataError(f"{path}: expected a JSON object")
    missing = required - set(data)
    unknown = set(data) - required - optional
    if missing:
        raise DataError(f"{path}: missing keys {sorted(missing)}")
    if unknown:
        raise DataError(f"{path}: unknown keys {sorted(unknown)}")
    if data.get("kind") != kind:
        raise DataError(f"{path}: kind is {data.get('kind')!r}, expected {kind!r}")
    version = data.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise DataError(
            f"{path}: format_version {version!r} is not supported"
            f" (expected {MODEL_FORMAT_VERSION})"
        )


def _num(value: float) -> str:
    """Shortest float rendering that parses back to exactly the same value."""
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def _round(value: float) -> float:
    return float(value)
