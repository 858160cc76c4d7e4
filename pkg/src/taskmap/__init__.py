"""Task-driven semantic object mapping for Gaussian-splat scenes.

Converts multi-view vision-language observations into a compact set of
task-relevant 3D objects: cosine scores become relevance probabilities,
probabilities fuse across views with recursive Bayesian updates, and 3D
primitives cluster at task-determined granularity via the agglomerative
information bottleneck.
"""

from .estimators import (
    InfoBottleneckClustering,
    KnnOutlierFilter,
    ScoreCalibrator,
    TaskObjectMapper,
)
from .evaluation import (
    GroundTruthObject,
    MetricsReport,
    box_contains,
    obb_iou,
    relaxed_os_match,
    score_run,
    strict_os_match,
)
from .ib import (
    MergeGraph,
    StoppingRule,
    agglomerate,
    build_graph,
    merge_cost,
    mutual_information,
    prune_irrelevant,
)
from .pipeline import PipelineConfig, PipelineResult, run_pipeline
from .postprocess import fit_obb, knn_filter, select_fraction, select_top_k
from .primitives import assign_primitives, primitive_distribution
from .relevance import (
    LikelihoodModel,
    UpdateOutcome,
    average_scores_posterior,
    bayes_update,
    fit_gaussian,
    posterior_single,
    update_gaussians,
)
from .synth import SynthConfig, SynthDataset, generate
from .types import (
    CameraFrame,
    DepthMap,
    Frame,
    GaussianRecord,
    MapState,
    MaskObservation,
    ObjectCluster,
    OrientedBox,
    Primitive,
    TaskList,
    new_map_state,
)

__version__ = "0.1.0"

__all__ = [
    "CameraFrame",
    "DepthMap",
    "Frame",
    "GaussianRecord",
    "GroundTruthObject",
    "InfoBottleneckClustering",
    "KnnOutlierFilter",
    "LikelihoodModel",
    "MapState",
    "MaskObservation",
    "MergeGraph",
    "MetricsReport",
    "ObjectCluster",
    "OrientedBox",
    "PipelineConfig",
    "PipelineResult",
    "Primitive",
    "ScoreCalibrator",
    "StoppingRule",
    "SynthConfig",
    "SynthDataset",
    "TaskList",
    "TaskObjectMapper",
    "UpdateOutcome",
    "agglomerate",
    "assign_primitives",
    "average_scores_posterior",
    "bayes_update",
    "box_contains",
    "build_graph",
    "fit_gaussian",
    "fit_obb",
    "generate",
    "knn_filter",
    "merge_cost",
    "mutual_information",
    "new_map_state",
    "obb_iou",
    "posterior_single",
    "primitive_distribution",
    "prune_irrelevant",
    "relaxed_os_match",
    "run_pipeline",
    "score_run",
    "select_fraction",
    "select_top_k",
    "strict_os_match",
    "update_gaussians",
]
