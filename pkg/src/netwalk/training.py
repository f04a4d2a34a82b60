"""Iterative training of transmission energies and detection thresholds.

Every training route k carries an impact weight tw_k(i, j) on each patch
transition it crosses. The accumulated crossings AC(i, j) = sum_k tw_k(i, j)
set the transmission energies e(i, j) = 1 / AC(i, j): frequently used
transitions become cheap, unused ones stay at the large-energy cap.

Training alternates two steps until the energies settle and the thresholds
stop moving: fit the detection thresholds to the current energies by grid
search, then soften or harden the impact weights of misclassified routes:
false alarms raise their weights (lowering energies on their transitions),
missed abnormalities lower them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .classifier import LogisticBinaryClassifier
from .grid import PatchRoute, SceneConfig
from .network import LARGE_ENERGY, TransmissionNetwork
from .routing import RouteMap, route_map_for_start, sbip

log = logging.getLogger(__name__)

LABELS = ("normal", "I", "II", "III")

# Impact weights never fall below this floor, and accumulated crossings
# below it count as zero support (large energy).
WEIGHT_FLOOR = 1.0e-9

Transition = tuple[int, int]


@dataclass
class TrainingSample:
    """One labelled training route."""

    route: PatchRoute
    label: str
    track_id: int | None = None

    def __post_init__(self) -> None:
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}, expected one of {LABELS}")

    @property
    def abnormal(self) -> bool:
        return self.label != "normal"


@dataclass
class TrainingConfig:
    max_iterations: int = 100
    tolerance: float = 1.0e-4          # max relative energy change to stop
    alpha_start: float = 1.0
    alpha_stop: float = 10.0
    alpha_step: float = 0.1
    weight_floor: float = WEIGHT_FLOOR
    large_energy: float = LARGE_ENERGY

    def alpha_grid(self) -> np.ndarray:
        count = int(round((self.alpha_stop - self.alpha_start) / self.alpha_step)) + 1
        return np.round(self.alpha_start + self.alpha_step * np.arange(count), 10)


@dataclass
class IterationRecord:
    """Training-loop state after one iteration."""

    iteration: int
    t1: float
    alpha: float
    err_fa: float
    err_miss: float
    objective: float
    false_alarms: int
    misses: int
    max_energy_change: float


@dataclass
class TrainedAbnormalityModel:
    """Trained scene network with its two detection thresholds."""

    scene: SceneConfig
    energy: np.ndarray
    t1: float
    alpha: float
    large_energy: float = LARGE_ENERGY
    converged: bool = True
    iterations: int = 0
    history: list[IterationRecord] = field(default_factory=list)
    impact_weights: list[dict[Transition, float]] | None = None
    _maps: dict[int, RouteMap] = field(default_factory=dict, repr=False)

    def network(self) -> TransmissionNetwork:
        return TransmissionNetwork(
            energy=self.energy, directed=False, large_energy=self.large_energy
        )

    def route_map(self, start: int) -> RouteMap:
        """Minimum-energy map from ``start``, cached; non-entrances warn."""
        return route_map_for_start(self.network(), self.scene, self._maps, start)


# ---- impact weights and energies ----

def route_transitions(route: PatchRoute) -> list[Transition]:
    """Unordered transitions crossed by a route, once each (binary per route)."""
    pairs = {
        (a, b) if a < b else (b, a)
        for a, b in zip(route.patches, route.patches[1:])
    }
    return sorted(pairs)


def init_impact_weights(samples: list[TrainingSample]) -> list[dict[Transition, float]]:
    """Binary initial weights: 1 on every transition a route crosses."""
    return [{t: 1.0 for t in route_transitions(s.route)} for s in samples]


def accumulate_crossings(
    weights: list[dict[Transition, float]], node_count: int
) -> np.ndarray:
    """AC matrix: per-transition sum of impact weights over all routes."""
    ac = np.zeros((node_count, node_count))
    for per_route in weights:
        for (i, j), w in per_route.items():
            ac[i, j] += w
            ac[j, i] += w
    return ac


def energies_from_crossings(
    ac: np.ndarray, scene: SceneConfig, large_energy: float = LARGE_ENERGY
) -> np.ndarray:
    """Energy matrix from accumulated crossings.

    e = 1/AC capped at the large energy; transitions with no support get
    the large energy; equivalence-linked patches and the diagonal are free.
    """
    with np.errstate(divide="ignore"):
        e = np.where(ac >= WEIGHT_FLOOR, 1.0 / np.maximum(ac, WEIGHT_FLOOR), large_energy)
    e = np.minimum(e, large_energy)
    np.fill_diagonal(e, 0.0)
    for group in scene.equivalence_sets:
        idx = np.asarray(group, dtype=int)
        e[np.ix_(idx, idx)] = 0.0
    return e


# ---- per-sample route statistics ----

@dataclass
class RouteStats:
    """Cumulative energies of one route against a route map."""

    prefix_energy: np.ndarray   # cumulative E at each step, starts at 0
    e_min: np.ndarray           # E_min(u, patch) at each step
    reachable: np.ndarray       # settled flag at each step

    @property
    def final_energy(self) -> float:
        return float(self.prefix_energy[-1])

    @property
    def ratio_max(self) -> float:
        """Largest prefix E / E_min ratio; inf where the adaptive criterion
        must fire at any alpha (unreachable patch, or revisit with energy)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(
                ~self.reachable,
                np.inf,
                np.where(
                    self.e_min > 0.0,
                    self.prefix_energy / np.where(self.e_min > 0.0, self.e_min, 1.0),
                    np.where(self.prefix_energy > 0.0, np.inf, 0.0),
                ),
            )
        return float(np.max(r))



def compute_route_stats(
    route: PatchRoute, energy: np.ndarray, route_map: RouteMap
) -> RouteStats:
    patches = np.asarray(route.patches)
    prefix = np.zeros(len(patches))
    if len(patches) > 1:
        prefix[1:] = np.cumsum(energy[patches[:-1], patches[1:]])
    return RouteStats(
        prefix_energy=prefix,
        e_min=route_map.e_min[patches],
        reachable=route_map.settled[patches],
    )


def _stats_for_samples(
    samples: list[TrainingSample], energy: np.ndarray, large_energy: float
) -> list[RouteStats]:
    net = TransmissionNetwork(energy=energy, directed=False, large_energy=large_energy)
    maps = {u: sbip(net, u) for u in sorted({s.route.start for s in samples})}
    return [compute_route_stats(s.route, energy, maps[s.route.start]) for s in samples]


# ---- threshold search ----

def search_thresholds(
    final_energies: np.ndarray,
    ratio_maxes: np.ndarray,
    is_abnormal: np.ndarray,
    alphas: np.ndarray,
    previous_t1: float | None = None,
) -> tuple[float, float, float, float]:
    """Grid search for (T1, alpha) minimizing err_fa^2 + err_miss^2.

    T1 candidates are the midpoints between consecutive sorted training
    energies plus one sentinel above the maximum (and the previous T1, so
    the objective never worsens across iterations). Ties prefer the
    smaller T1, then the smaller alpha.
    """
    e = np.asarray(final_energies, dtype=float)
    ratios = np.asarray(ratio_maxes, dtype=float)
    abnormal = np.asarray(is_abnormal, dtype=bool)

    levels = np.unique(e)
    cands = list((levels[:-1] + levels[1:]) / 2.0) + [levels[-1] + 1.0]
    if previous_t1 is not None:
        cands.append(previous_t1)
    t1s = np.unique(np.asarray(cands))
    t1s = t1s[t1s > 0.0]
    if len(t1s) == 0:
        t1s = np.asarray([1.0])

    n_neg = int((~abnormal).sum())
    n_pos = int(abnormal.sum())
    flag1 = e[None, :] > t1s[:, None]

    objective = np.empty((len(t1s), len(alphas)))
    fa_tab = np.empty_like(objective)
    miss_tab = np.empty_like(objective)
    for k, alpha in enumerate(alphas):
        flagged = flag1 | (ratios > alpha)[None, :]
        fa = flagged[:, ~abnormal].sum(axis=1) / n_neg if n_neg else np.zeros(len(t1s))
        miss = (~flagged)[:, abnormal].sum(axis=1) / n_pos if n_pos else np.zeros(len(t1s))
        fa_tab[:, k] = fa
        miss_tab[:, k] = miss
        objective[:, k] = fa**2 + miss**2

    flat = int(np.argmin(objective))  # row-major: smallest T1 first, then alpha
    ti, ai = divmod(flat, len(alphas))
    return float(t1s[ti]), float(alphas[ai]), float(fa_tab[ti, ai]), float(miss_tab[ti, ai])


# ---- weight updates ----

def _is_flagged(stats: RouteStats, t1: float, alpha: float) -> bool:
    return stats.final_energy > t1 or stats.ratio_max > alpha


def update_weights(
    samples: list[TrainingSample],
    stats: list[RouteStats],
    weights: list[dict[Transition, float]],
    t1: float,
    alpha: float,
    weight_floor: float = WEIGHT_FLOOR,
) -> tuple[list[dict[Transition, float]], int, int]:
    """One round of impact-weight updates; returns (weights, #fa, #miss).

    Correctly recognized routes keep their weights. A false alarm scales
    them by 1 + (E_k - T_l) / E_k; a miss by 1 - (T_l - E_k) / (2 T_l).
    T_l is the threshold of the criterion that fired (criterion 1
    preferred); for misses, the threshold the route came closest to.
    """
    if t1 <= 0.0:
        raise ValueError("T1 must be positive")
    new_weights: list[dict[Transition, float]] = []
    n_fa = n_miss = 0
    for sample, st, per_route in zip(samples, stats, weights):
        flagged = _is_flagged(st, t1, alpha)
        if flagged == sample.abnormal:
            new_weights.append(per_route)
            continue
        e_k = st.final_energy
        if flagged:  # false alarm
            n_fa += 1
            assert e_k > 0.0, "zero-energy route cannot be flagged"
            if e_k > t1:
                t_l = t1
            else:
                fired = (~st.reachable) | (st.prefix_energy > alpha * st.e_min)
                t_l = alpha * float(st.e_min[int(np.argmax(fired))])
            factor = max(1.0 + (e_k - t_l) / e_k, 1.0)
        else:  # miss
            n_miss += 1
            t2_final = alpha * float(st.e_min[-1])
            near_t1 = t2_final <= 0.0 or (e_k / t1) >= (e_k / t2_final)
            t_l = t1 if near_t1 else t2_final
            factor = 1.0 - (t_l - e_k) / (2.0 * t_l)
        new_weights.append(
            {t: max(w * factor, weight_floor) for t, w in per_route.items()}
        )
    return new_weights, n_fa, n_miss


def _max_relative_change(old: np.ndarray, new: np.ndarray) -> float:
    mask = old > 0.0
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(new[mask] - old[mask]) / old[mask]))


# ---- training loops ----

def _validate_samples(samples: list[TrainingSample], scene: SceneConfig) -> None:
    if not samples:
        raise ValueError("no training samples")
    n = scene.patch_count
    for s in samples:
        for p in s.route.patches:
            if not 0 <= p < n:
                raise ValueError(f"route patch {p} outside scene grid of {n} patches")


def train(
    samples: list[TrainingSample],
    scene: SceneConfig,
    config: TrainingConfig | None = None,
) -> TrainedAbnormalityModel:
    """Train energies and thresholds by the alternating loop.

    Stops once the largest relative energy change falls under the
    tolerance while the thresholds repeat, or after the iteration cap.
    """
    cfg = config or TrainingConfig()
    _validate_samples(samples, scene)
    alphas = cfg.alpha_grid()
    is_abnormal = np.asarray([s.abnormal for s in samples])

    weights = init_impact_weights(samples)
    energy = energies_from_crossings(
        accumulate_crossings(weights, scene.patch_count), scene, cfg.large_energy
    )

    history: list[IterationRecord] = []
    previous: tuple[float, float] | None = None
    converged = False
    t1 = alpha = float("nan")

    for iteration in range(1, cfg.max_iterations + 1):
        stats = _stats_for_samples(samples, energy, cfg.large_energy)
        finals = np.asarray([st.final_energy for st in stats])
        ratios = np.asarray([st.ratio_max for st in stats])
        t1, alpha, err_fa, err_miss = search_thresholds(
            finals, ratios, is_abnormal, alphas,
            previous_t1=previous[0] if previous else None,
        )
        weights, n_fa, n_miss = update_weights(
            samples, stats, weights, t1, alpha, cfg.weight_floor
        )
        new_energy = energies_from_crossings(
            accumulate_crossings(weights, scene.patch_count), scene, cfg.large_energy
        )
        change = _max_relative_change(energy, new_energy)
        history.append(
            IterationRecord(
                iteration=iteration, t1=t1, alpha=alpha,
                err_fa=err_fa, err_miss=err_miss,
                objective=err_fa**2 + err_miss**2,
                false_alarms=n_fa, misses=n_miss,
                max_energy_change=change,
            )
        )
        energy = new_energy
        same_thresholds = (
            previous == (t1, alpha) if previous is not None else n_fa + n_miss == 0
        )
        previous = (t1, alpha)
        if change < cfg.tolerance and same_thresholds:
            converged = True
            break

    if not converged:
        log.warning("training stopped at the %d-iteration cap", cfg.max_iterations)
    return TrainedAbnormalityModel(
        scene=scene, energy=energy, t1=t1, alpha=alpha,
        large_energy=cfg.large_energy, converged=converged,
        iterations=len(history), history=history, impact_weights=weights,
    )


def classifier_features(stats: list[RouteStats]) -> np.ndarray:
    """Per-route feature rows [total energy, peak prefix / minimum ratio].

    The peak ratio mirrors the stepwise adaptive check, so back-and-forth
    routes stay visible to the classifier even when their totals match
    ordinary traffic. Infinite ratios are capped to keep the fit finite.
    """
    return np.asarray([
        [st.final_energy, min(st.ratio_max, LARGE_ENERGY)] for st in stats
    ])


def train_with_classifier(
    samples: list[TrainingSample],
    scene: SceneConfig,
    classifier: LogisticBinaryClassifier | None = None,
    config: TrainingConfig | None = None,
) -> tuple[TrainedAbnormalityModel, LogisticBinaryClassifier]:
    """Training variant with a probability classifier in the loop.

    Each iteration refits the classifier on per-route features
    [total energy, peak prefix ratio] and scales misclassified routes'
    weights by the classifier's confidence: false alarms by 1 + P_k,
    misses by 1 - P_k.
    The returned model also carries grid-searched thresholds fitted to the
    final energies, so rule-based detection stays available.
    """
    cfg = config or TrainingConfig()
    _validate_samples(samples, scene)
    clf = classifier if classifier is not None else LogisticBinaryClassifier()
    is_abnormal = np.asarray([s.abnormal for s in samples])

    weights = init_impact_weights(samples)
    energy = energies_from_crossings(
        accumulate_crossings(weights, scene.patch_count), scene, cfg.large_energy
    )

    history: list[IterationRecord] = []
    prev_predictions: np.ndarray | None = None
    converged = False
    n_pos = int(is_abnormal.sum())
    n_neg = len(samples) - n_pos

    for iteration in range(1, cfg.max_iterations + 1):
        stats = _stats_for_samples(samples, energy, cfg.large_energy)
        clf.fit(classifier_features(stats), is_abnormal)
        predictions, confidence = clf.predict(classifier_features(stats))

        new_weights: list[dict[Transition, float]] = []
        n_fa = n_miss = 0
        for k, (sample, per_route) in enumerate(zip(samples, weights)):
            if predictions[k] == sample.abnormal:
                new_weights.append(per_route)
                continue
            if predictions[k]:  # false alarm
                n_fa += 1
                factor = 1.0 + float(confidence[k])
            else:  # miss
                n_miss += 1
                p = min(float(confidence[k]), 1.0 - cfg.weight_floor)
                factor = 1.0 - p
            new_weights.append(
                {t: max(w * factor, cfg.weight_floor) for t, w in per_route.items()}
            )

        new_energy = energies_from_crossings(
            accumulate_crossings(new_weights, scene.patch_count), scene, cfg.large_energy
        )
        change = _max_relative_change(energy, new_energy)
        history.append(
            IterationRecord(
                iteration=iteration, t1=float("nan"), alpha=float("nan"),
                err_fa=n_fa / n_neg if n_neg else 0.0,
                err_miss=n_miss / n_pos if n_pos else 0.0,
                objective=float("nan"),
                false_alarms=n_fa, misses=n_miss, max_energy_change=change,
            )
        )
        weights, energy = new_weights, new_energy
        same = prev_predictions is None or np.array_equal(predictions, prev_predictions)
        prev_predictions = predictions
        if change < cfg.tolerance and same:
            converged = True
            break

    if not converged:
        log.warning(
            "classifier-loop training stopped at the %d-iteration cap",
            cfg.max_iterations,
        )

    # Fit rule thresholds to the final energies so detect() works too.
    stats = _stats_for_samples(samples, energy, cfg.large_energy)
    t1, alpha, _, _ = search_thresholds(
        np.asarray([st.final_energy for st in stats]),
        np.asarray([st.ratio_max for st in stats]),
        is_abnormal, cfg.alpha_grid(),
    )
    model = TrainedAbnormalityModel(
        scene=scene, energy=energy, t1=t1, alpha=alpha,
        large_energy=cfg.large_energy, converged=converged,
        iterations=len(history), history=history, impact_weights=weights,
    )
    return model, clf
