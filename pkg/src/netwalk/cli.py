"""Command-line interface.

Subcommands: train, detect, route-map, group extract|train|classify,
crowd, eval, synth. Every command writes its artifacts atomically under
--out and is deterministic given identical inputs, flags and seeds.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import io, plots
from .detection import detect
from .grid import SceneConfig, route_from_trajectory
from .group import (
    calibrate_crowd_threshold,
    classify_pair,
    crowd_detect,
    extract_pair_features,
    train_group_classifier,
)
from .metrics import (
    abnormality_metrics,
    group_metrics,
    render_report,
    roc_auc,
    roc_points,
)
from .network import RelativeNetworkSpec
from .routing import prune_route_map
from .synth import (
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
from .training import TrainingConfig, TrainingSample, train, train_with_classifier

log = logging.getLogger(__name__)

GROUP_PREDICTION_HEADER = ["pair_id", "label"]


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--seed", type=int, default=0, help="RNG seed where applicable")
    common.add_argument("--scene", help="scene JSON file")
    common.add_argument(
        "--no-figures", action="store_true", help="skip rendering PNG figures"
    )

    parser = _Parser(prog="netwalk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("train", parents=[common], help="train an abnormality model")
    p.add_argument("--trajectories", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--classifier-loop", action="store_true",
                   help="drive feedback with a linear classifier instead of the rules")
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1.0e-4)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("detect", parents=[common], help="run detection on trajectories")
    p.add_argument("--model", required=True)
    p.add_argument("--trajectories", required=True)
    p.add_argument("--trace", action="store_true",
                   help="write per-track energy trace CSV (and figure)")
    p.add_argument("--online", action="store_true",
                   help="stream per-step verdicts to standard output")
    p.set_defaults(handler=cmd_detect)

    p = sub.add_parser("route-map", parents=[common],
                       help="export a minimum-energy route map")
    p.add_argument("--model", required=True)
    p.add_argument("--start", type=int, help="start patch (default: first entrance)")
    p.add_argument("--prune", type=float,
                   help="drop routes that use any transition energy above this")
    p.set_defaults(handler=cmd_route_map)

    group = sub.add_parser("group", help="group-activity commands")
    gsub = group.add_subparsers(dest="group_command", parser_class=_Parser)

    p = gsub.add_parser("extract", parents=[common], help="extract pair features")
    p.add_argument("--trajectories", required=True)
    p.add_argument("--pairs", required=True, help="pair label CSV")
    p.add_argument("--field", help="motion field CSV (adds motion energies)")
    p.set_defaults(handler=cmd_group_extract)

    p = gsub.add_parser("train", parents=[common], help="train the group classifier")
    p.add_argument("--features", required=True)
    p.add_argument("--include-motion", action="store_true")
    p.set_defaults(handler=cmd_group_train)

    p = gsub.add_parser("classify", parents=[common], help="classify pair features")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.set_defaults(handler=cmd_group_classify)

    p = sub.add_parser("crowd", parents=[common], help="crowd escape detection")
    p.add_argument("--flows", required=True)
    p.add_argument("--cell-size", type=float, default=16.0)
    p.add_argument("--center-x", type=float, default=320.0)
    p.add_argument("--center-y", type=float, default=240.0)
    p.add_argument("--r-max", type=int, default=40)
    p.add_argument("--window", type=int, default=16)
    p.add_argument("--stride", type=int, default=8)
    p.add_argument("--threshold", type=float,
                   help="alarm level; windows with energy below its negative are abnormal")
    p.add_argument("--calibrate", type=int, metavar="FRAMES",
                   help="set the alarm level from windows inside the first FRAMES frames")
    p.add_argument("--sigma-k", type=float, default=3.0,
                   help="calibration multiplier on the window-energy spread")
    p.add_argument("--truth", help="frame label CSV; adds ROC outputs")
    p.set_defaults(handler=cmd_crowd)

    p = sub.add_parser("eval", parents=[common], help="evaluate predictions")
    p.add_argument("--task", required=True, choices=["abnormality", "group"])
    p.add_argument("--predictions", required=True)
    p.add_argument("--truth", required=True)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("synth", parents=[common], help="generate synthetic corpora")
    p.add_argument("--kind", required=True,
                   choices=["abnormality", "group", "group-motion", "crowd"])
    p.add_argument("--patch-size", type=int, default=48)
    p.add_argument("--pairs-per-class", type=int, default=50)
    p.set_defaults(handler=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(format="%(levelname)s: %(message)s", level=logging.WARNING)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits on usage errors and --help
        return int(exc.code or 0)
    handler = getattr(args, "handler", None)
    if handler is None:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: a subcommand is required", file=sys.stderr)
        return 1
    try:
        handler(args)
    except (io.DataError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    return 0


def _outdir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _path(args, name: str) -> str:
    return os.path.join(args.out, name)


# ---- train ----

def _load_samples(args) -> tuple[list[TrainingSample], SceneConfig]:
    if not args.scene:
        raise io.DataError("train requires --scene")
    scene = io.load_scene(args.scene)
    trajectories = io.load_trajectories(args.trajectories)
    labels = io.load_labels(args.labels)
    tracks = {t.track_id for t in trajectories}
    unlabeled = sorted(tracks - set(labels))
    orphaned = sorted(set(labels) - tracks)
    problems = []
    if unlabeled:
        problems.append(f"tracks with no label: {unlabeled}")
    if orphaned:
        problems.append(f"labels with no track: {orphaned}")
    if problems:
        raise io.DataError(
            f"{args.trajectories} / {args.labels}: " + "; ".join(problems)
        )
    samples = [
        TrainingSample(
            route=route_from_trajectory(traj, scene),
            label=labels[traj.track_id],
            track_id=traj.track_id,
        )
        for traj in trajectories
    ]
    return samples, scene


def cmd_train(args) -> None:
    samples, scene = _load_samples(args)
    _outdir(args)
    config = TrainingConfig(max_iterations=args.max_iters, tolerance=args.tol)
    if args.classifier_loop:
        model, _ = train_with_classifier(samples, scene, config=config)
    else:
        model = train(samples, scene, config=config)
    io.save_training_history(_path(args, "history.csv"), model.history)
    io.save_model(_path(args, "model.json"), model, training_log="history.csv")
    if not args.no_figures and model.history:
        plots.plot_training_history(model.history, _path(args, "training.png"))
    state = "converged" if model.converged else "did not converge"
    print(
        f"model: {_path(args, 'model.json')}"
        f" (T1={model.t1:.6g}, alpha={model.alpha:.3g},"
        f" {model.iterations} iterations, {state})"
    )


# ---- detect ----

def cmd_detect(args) -> None:
    model = io.load_model(args.model)
    if args.scene:
        scene = io.load_scene(args.scene)
        if scene != model.scene:
            raise io.DataError(
                f"{args.scene} does not match the scene stored in {args.model}"
            )
    trajectories = io.load_trajectories(args.trajectories)
    rows = []
    verdicts = []
    traces = []
    for traj in trajectories:
        route = route_from_trajectory(traj, model.scene)
        verdict = detect(route, model)
        if args.online:
            for r in verdict.records:
                print(
                    f"track {traj.track_id} step {r.step} patch {r.patch}"
                    f" energy {r.energy:.6g} flagged {int(r.flagged)}"
                    + (f" reason '{r.reason}'" if r.reason else "")
                )
        rows.append(
            {
                "track_id": traj.track_id,
                "abnormal": verdict.abnormal,
                "type": verdict.abnormality_type,
                "final_energy": verdict.final_energy,
                "first_flag_step": verdict.first_flag_step,
            }
        )
        verdicts.append(
            {
                "track_id": traj.track_id,
                "abnormal": verdict.abnormal,
                "type": verdict.abnormality_type,
                "final_energy": verdict.final_energy,
                "first_flag_step": verdict.first_flag_step,
                "t2_final": verdict.t2_final,
            }
        )
        if args.trace:
            traces.append((traj.track_id, verdict.records))
    _outdir(args)
    io.save_predictions(_path(args, "predictions.csv"), rows)
    io.save_json(
        _path(args, "verdicts.json"),
        {"t1": model.t1, "alpha": model.alpha, "verdicts": verdicts},
    )
    for track_id, records in traces:
        io.save_trace(_path(args, f"trace_{track_id}.csv"), records, model.t1)
        if not args.no_figures and records:
            plots.plot_energy_trace(records, model.t1, _path(args, f"trace_{track_id}.png"))
    n_abnormal = sum(r["abnormal"] for r in rows)
    print(
        f"verdicts: {_path(args, 'verdicts.json')}"
        f" ({len(rows)} tracks, {n_abnormal} abnormal)"
    )


# ---- route-map ----

def cmd_route_map(args) -> None:
    model = io.load_model(args.model)
    start = args.start
    if start is None:
        if not model.scene.entrance_patches:
            raise io.DataError(
                "the model's scene declares no entrances; pass --start"
            )
        start = model.scene.entrance_patches[0]
    route_map = model.route_map(start)
    network = model.network()
    if args.prune is not None:
        route_map = prune_route_map(route_map, network, args.prune)
    _outdir(args)
    io.save_route_map_csv(_path(args, "route_map.csv"), route_map)
    io.save_route_map_dot(_path(args, "route_map.dot"), route_map, network)
    if not args.no_figures:
        plots.plot_route_map(route_map, network, model.scene, _path(args, "route_map.png"))
    reached = sum(route_map.reachable(p) for p in range(route_map.node_count))
    print(
        f"route map: {_path(args, 'route_map.csv')}"
        f" (source {start}, {reached}/{route_map.node_count} patches reachable)"
    )


# ---- group ----

def cmd_group_extract(args) -> None:
    if not args.scene:
        raise io.DataError("group extract requires --scene")
    scene = io.load_scene(args.scene)
    trajectories = {t.track_id: t for t in io.load_trajectories(args.trajectories)}
    pairs = io.load_pair_labels(args.pairs)
    field = io.load_motion_field(args.field, scene) if args.field else None
    missing = sorted(
        {tid for _, a, b, _ in pairs for tid in (a, b) if tid not in trajectories}
    )
    if missing:
        raise io.DataError(f"{args.pairs}: tracks not in {args.trajectories}: {missing}")
    spec = RelativeNetworkSpec()
    features = []
    labels = {}
    for pair_id, tid_a, tid_b, label in pairs:
        features.append(
            extract_pair_features(
                trajectories[tid_a],
                trajectories[tid_b],
                scene,
                spec,
                motion_field=field,
                pair_id=pair_id,
            )
        )
        labels[pair_id] = label
    _outdir(args)
    io.save_group_features(_path(args, "features.csv"), features, labels)
    if not args.no_figures:
        plots.plot_group_features(features, labels, _path(args, "features.png"))
    print(f"features: {_path(args, 'features.csv')} ({len(features)} pairs)")


def cmd_group_train(args) -> None:
    features, labels = io.load_group_features(args.features)
    unlabeled = sorted(f.pair_id for f in features if f.pair_id not in labels)
    if unlabeled:
        raise io.DataError(f"{args.features}: pairs with no label: {unlabeled}")
    model = train_group_classifier(
        features, [labels[f.pair_id] for f in features], args.include_motion
    )
    _outdir(args)
    io.save_group_model(_path(args, "group_model.json"), model, args.include_motion)
    print(
        f"group model: {_path(args, 'group_model.json')}"
        f" ({len(model.classes)} classes, include_motion={args.include_motion})"
    )


def cmd_group_classify(args) -> None:
    model, include_motion = io.load_group_model(args.model)
    features, _ = io.load_group_features(args.features)
    rows = []
    for feature in features:
        label, _ = classify_pair(model, feature, include_motion)
        rows.append([feature.pair_id, label])
    _outdir(args)
    io._write_csv(_path(args, "group_predictions.csv"), GROUP_PREDICTION_HEADER, rows)
    print(f"predictions: {_path(args, 'group_predictions.csv')} ({len(rows)} pairs)")


# ---- crowd ----

def cmd_crowd(args) -> None:
    flows = io.load_flows(args.flows)
    if not flows:
        raise io.DataError(f"{args.flows}: no flow vectors")
    spec = RelativeNetworkSpec(r_max=args.r_max)
    center = (args.center_x, args.center_y)
    if args.threshold is None and args.calibrate is None:
        raise io.DataError("provide --threshold or --calibrate FRAMES")
    threshold = args.threshold
    if threshold is None:
        first = min(f.frame for f in flows)
        windows, _ = crowd_detect(
            flows, center, args.cell_size, spec, args.window, args.stride, 0.0
        )
        calibration = [
            w.energy for w in windows if w.end_frame < first + args.calibrate
        ]
        if not calibration:
            raise io.DataError(
                f"no complete windows inside the first {args.calibrate} frames"
            )
        threshold = calibrate_crowd_threshold(calibration, args.sigma_k)
    windows, frame_flags = crowd_detect(
        flows, center, args.cell_size, spec, args.window, args.stride, threshold
    )
    _outdir(args)
    io.save_windows(_path(args, "windows.csv"), windows)
    io.save_frame_labels(_path(args, "frame_flags.csv"), frame_flags)
    summary = {
        "threshold": threshold,
        "window_size": args.window,
        "stride": args.stride,
        "windows": len(windows),
        "abnormal_windows": sum(w.abnormal for w in windows),
    }
    if not args.no_figures:
        plots.plot_window_energies(windows, threshold, _path(args, "windows.png"))
    if args.truth:
        truth = io.load_frame_labels(args.truth)
        scores, labels = [], []
        for w in windows:
            frames = range(w.start_frame, w.end_frame + 1)
            votes = [truth.get(f, False) for f in frames]
            scores.append(-w.energy)
            labels.append(sum(votes) * 2 > len(votes))
        points = roc_points(np.asarray(scores), np.asarray(labels))
        auc = roc_auc(points)
        summary["roc_auc"] = auc
        io.save_roc(_path(args, "roc.csv"), points)
        if not args.no_figures:
            plots.plot_roc(points, auc, _path(args, "roc.png"))
    io.save_json(_path(args, "crowd.json"), summary)
    print(
        f"crowd: {_path(args, 'windows.csv')}"
        f" ({summary['abnormal_windows']}/{summary['windows']} windows abnormal,"
        f" threshold {threshold:.6g})"
    )


# ---- eval ----

def _aligned(predicted: dict, truth: dict, what: str) -> list:
    missing = sorted(set(truth) - set(predicted))
    extra = sorted(set(predicted) - set(truth))
    problems = []
    if missing:
        problems.append(f"{what}s missing from predictions: {missing}")
    if extra:
        problems.append(f"predicted {what}s not in truth: {extra}")
    if problems:
        raise io.DataError("; ".join(problems))
    return sorted(truth)


def cmd_eval(args) -> None:
    if args.task == "abnormality":
        rows = io._read_csv(args.predictions, io.PREDICTION_HEADER)
        predicted = {
            io._as_int(r[0], args.predictions, n, "track_id"): r[2] for n, r in rows
        }
        truth = io.load_labels(args.truth)
        keys = _aligned(predicted, truth, "track")
        report = abnormality_metrics(
            [predicted[k] for k in keys], [truth[k] for k in keys]
        )
    else:
        rows = io._read_csv(args.predictions, GROUP_PREDICTION_HEADER)
        predicted = {
            io._as_int(r[0], args.predictions, n, "pair_id"): r[1] for n, r in rows
        }
        truth = {p[0]: p[3] for p in io.load_pair_labels(args.truth)}
        keys = _aligned(predicted, truth, "pair")
        report = group_metrics([predicted[k] for k in keys], [truth[k] for k in keys])
    _outdir(args)
    text = render_report(report)
    io._atomic_write(_path(args, "report.txt"), text)
    if not args.no_figures:
        plots.plot_confusion(report, _path(args, "confusion.png"))
    print(text, end="")


# ---- synth ----

def cmd_synth(args) -> None:
    _outdir(args)
    if args.kind == "abnormality":
        scene = abnormality_scene(args.patch_size)
        trajectories, labels = gen_abnormality_corpus(
            AbnormalityCorpusConfig(seed=args.seed)
        )
        io.save_scene(_path(args, "scene.json"), scene)
        io.save_trajectories(_path(args, "trajectories.csv"), trajectories)
        io.save_labels(_path(args, "labels.csv"), labels)
        print(f"abnormality corpus: {len(trajectories)} tracks in {args.out}")
    elif args.kind in ("group", "group-motion"):
        scene = group_scene()
        io.save_scene(_path(args, "scene.json"), scene)
        if args.kind == "group":
            pairs = gen_group_corpus(
                GroupCorpusConfig(seed=args.seed, pairs_per_class=args.pairs_per_class)
            )
        else:
            pairs, field = gen_group_motion_corpus(
                MotionGroupConfig(seed=args.seed, pairs_per_class=args.pairs_per_class)
            )
            io.save_motion_field(_path(args, "field.csv"), field, scene)
        trajectories = [t for p in pairs for t in (p.traj_a, p.traj_b)]
        io.save_trajectories(_path(args, "trajectories.csv"), trajectories)
        io.save_pair_labels(
            _path(args, "pairs.csv"),
            [(p.pair_id, p.traj_a.track_id, p.traj_b.track_id, p.label) for p in pairs],
        )
        print(f"{args.kind} corpus: {len(pairs)} pairs in {args.out}")
    else:
        flows, truth = gen_crowd_flows(CrowdFlowConfig(seed=args.seed))
        io.save_flows(_path(args, "flows.csv"), flows)
        io.save_frame_labels(_path(args, "frame_labels.csv"), truth)
        print(f"crowd corpus: {len(flows)} flow vectors in {args.out}")


if __name__ == "__main__":
    sys.exit(main())
