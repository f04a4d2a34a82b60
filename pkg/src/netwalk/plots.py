"""Figure rendering for reports. Uses the non-interactive Agg backend."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .detection import StepRecord
from .grid import SceneConfig
from .metrics import EvalReport
from .network import TransmissionNetwork
from .routing import RouteMap, tree_edges
from .training import IterationRecord


def _save(fig, path: str) -> None:
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def plot_route_map(
    route_map: RouteMap,
    network: TransmissionNetwork,
    scene: SceneConfig,
    path: str,
) -> None:
    """Minimum-energy route tree drawn over the patch grid."""
    fig, ax = plt.subplots(figsize=(7, 5.5))
    for k in range(scene.columns + 1):
        ax.axvline(min(k * scene.patch_size, scene.image_width), color="0.9", lw=0.6)
    for k in range(scene.rows + 1):
        ax.axhline(min(k * scene.patch_size, scene.image_height), color="0.9", lw=0.6)
    for pred, node, _ in tree_edges(route_map, network):
        x0, y0 = scene.patch_center(pred)
        x1, y1 = scene.patch_center(node)
        ax.annotate(
            "",
            xy=(x1, y1),
            xytext=(x0, y0),
            arrowprops={"arrowstyle": "->", "color": "tab:blue", "lw": 1.0},
        )
    reached = [p for p in range(route_map.node_count) if route_map.reachable(p)]
    xs = [scene.patch_center(p)[0] for p in reached]
    ys = [scene.patch_center(p)[1] for p in reached]
    ax.scatter(xs, ys, s=12, color="tab:blue", zorder=3)
    sx, sy = scene.patch_center(route_map.source)
    ax.scatter([sx], [sy], s=80, color="tab:red", marker="*", zorder=4, label="source")
    ax.set_xlim(0, scene.image_width)
    ax.set_ylim(scene.image_height, 0)
    ax.set_xlabel("x (px)")
    ax.set_ylabel("y (px)")
    ax.set_title(f"Minimum-energy routes from patch {route_map.source}")
    ax.legend(loc="upper right")
    _save(fig, path)


def plot_energy_trace(records: list[StepRecord], t1: float, path: str) -> None:
    """Cumulative route energy against both thresholds, step by step."""
    steps = [r.step for r in records]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(steps, [r.energy for r in records], marker="o", label="route energy")
    ax.plot(steps, [r.t2 for r in records], ls="--", color="tab:orange", label="T2")
    ax.axhline(t1, ls=":", color="tab:red", label="T1")
    flagged = [r for r in records if r.flagged]
    if flagged:
        ax.scatter(
            [r.step for r in flagged],
            [r.energy for r in flagged],
            color="tab:red",
            zorder=3,
            label="flagged",
        )
    ax.set_xlabel("route step")
    ax.set_ylabel("energy")
    ax.set_yscale("log")
    ax.legend()
    ax.set_title("Detection trace")
    _save(fig, path)


def plot_training_history(history: list[IterationRecord], path: str) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    iters = [h.iteration for h in history]
    axes[0].plot(iters, [h.err_fa for h in history], marker="o", label="false-alarm rate")
    axes[0].plot(iters, [h.err_miss for h in history], marker="s", label="miss rate")
    axes[0].set_xlabel("iteration")
    axes[0].set_ylabel("rate")
    axes[0].legend()
    axes[0].set_title("Training errors")
    axes[1].plot(iters, [h.t1 for h in history], marker="o", label="T1")
    ax2 = axes[1].twinx()
    ax2.plot(iters, [h.alpha for h in history], marker="s", color="tab:orange", label="alpha")
    axes[1].set_xlabel("iteration")
    axes[1].set_ylabel("T1")
    ax2.set_ylabel("alpha")
    lines = axes[1].get_lines() + ax2.get_lines()
    axes[1].legend(lines, [ln.get_label() for ln in lines])
    axes[1].set_title("Thresholds")
    _save(fig, path)


def plot_roc(points: list[tuple[float, float, float]], auc: float, path: str) -> None:
    pts = sorted((fpr, tpr) for _, fpr, tpr in points)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot([p[0] for p in pts], [p[1] for p in pts], marker=".", label=f"AUC = {auc:.3f}")
    ax.plot([0, 1], [0, 1], ls=":", color="0.6")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title("ROC")
    ax.legend(loc="lower right")
    _save(fig, path)


def plot_window_energies(windows, threshold: float, path: str) -> None:
    """Sliding-window crowd energies with the alarm line."""
    fig, ax = plt.subplots(figsize=(7, 4))
    starts = [w.start_frame for w in windows]
    energies = [w.energy for w in windows]
    colors = ["tab:red" if w.abnormal else "tab:blue" for w in windows]
    ax.bar(starts, energies, width=0.8 * _window_stride(windows), color=colors, align="edge")
    ax.axhline(-threshold, ls="--", color="tab:red", label="alarm level")
    ax.set_xlabel("window start frame")
    ax.set_ylabel("window energy")
    ax.legend()
    ax.set_title("Crowd window energies")
    _save(fig, path)


def _window_stride(windows) -> int:
    if len(windows) > 1:
        return max(windows[1].start_frame - windows[0].start_frame, 1)
    return 1


def plot_group_features(features, labels: dict[int, str], path: str) -> None:
    """Ring-change against weighted-ring energy, one color per class."""
    fig, ax = plt.subplots(figsize=(7, 5))
    classes = sorted(set(labels.values()))
    cmap = plt.get_cmap("tab10")
    for k, name in enumerate(classes):
        xs = [f.enr for f in features if labels.get(f.pair_id) == name]
        ys = [f.ewr for f in features if labels.get(f.pair_id) == name]
        ax.scatter(xs, ys, s=14, color=cmap(k % 10), label=name, alpha=0.8)
    ax.set_xlabel("ring-change energy")
    ax.set_ylabel("weighted-ring energy")
    ax.set_title("Group features")
    if classes:
        ax.legend(fontsize=8)
    _save(fig, path)


def plot_confusion(report: EvalReport, path: str) -> None:
    names = report.classes or sorted(report.confusion)
    n = len(names)
    matrix = np.zeros((n, n))
    for i, truth in enumerate(names):
        for j, pred in enumerate(names):
            matrix[i, j] = report.confusion.get(truth, {}).get(pred, 0)
    fig, ax = plt.subplots(figsize=(1.0 + 0.7 * n, 0.8 + 0.7 * n))
    ax.imshow(matrix, cmap="Blues")
    for i in range(n):
        for j in range(n):
            count = int(matrix[i, j])
            if count:
                shade = "white" if matrix[i, j] > matrix.max() / 2 else "black"
                ax.text(j, i, str(count), ha="center", va="center", color=shade)
    ax.set_xticks(range(n), names, rotation=45, ha="right")
    ax.set_yticks(range(n), names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("truth")
    ax.set_title("Confusion")
    _save(fig, path)
