"""Network-transmission activity recognition.

Trajectories become package-transmission routes over patch-grid networks.
Trained transition energies, minimum-energy route maps and relative-network
energies drive abnormality detection and typing, group-activity
classification, and crowd-escape detection.
"""

from .classifier import LinearGroupClassifier, LogisticBinaryClassifier
from .detection import (
    REASON_T1,
    REASON_T2,
    REASON_UNREACHABLE,
    TYPE_IRREGULAR_PATH,
    TYPE_NORMAL,
    TYPE_REPETITION,
    TYPE_UNUSUAL_REGION,
    DetectionVerdict,
    StepRecord,
    classify_type,
    detect,
    energy_trace,
    trace_steps,
)
from .grid import (
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
from .group import (
    CrowdWindow,
    FlowVector,
    GroupFeatureVector,
    calibrate_crowd_threshold,
    classify_pair,
    crowd_detect,
    crowd_window_energy,
    extract_pair_features,
    flow_cells,
    flow_ring_change,
    train_group_classifier,
)
from .metrics import (
    EvalReport,
    abnormality_metrics,
    group_metrics,
    render_report,
    roc_auc,
    roc_points,
    split_dataset,
)
from .network import (
    LARGE_ENERGY,
    MotionField,
    RelativeNetworkSpec,
    TransmissionNetwork,
    build_scene_group_network,
    enr_energy,
    ewr_energy,
    motion_intensity_energy,
    relative_route_enr,
    relative_route_ewr,
    total_energy,
)
from .routing import (
    RouteMap,
    prune_route_map,
    route_map_for_start,
    route_maps_for_entrances,
    sbip,
    tree_edges,
)
from .training import (
    IterationRecord,
    TrainedAbnormalityModel,
    TrainingConfig,
    TrainingSample,
    accumulate_crossings,
    compute_route_stats,
    energies_from_crossings,
    init_impact_weights,
    route_transitions,
    search_thresholds,
    train,
    train_with_classifier,
    update_weights,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
