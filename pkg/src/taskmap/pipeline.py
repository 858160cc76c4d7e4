"""End-to-end mapping: observation stream in, task-relevant objects out.

Frames are consumed strictly in order. Each frame is associated, fused into
the per-Gaussian posteriors (with the outlier gate unless disabled), and
folded into the primitive partition; after the last frame the primitives are
clustered, pruned, cleaned per object, and boxed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .association import (
    DEFAULT_DEPTH_TOL,
    DEFAULT_DEPTH_TOL_REL,
    FrameProjection,
    associate_mask,
)
from .ib import StoppingRule, agglomerate, build_graph, prune_irrelevant
from .io import semantic_payload_sizes
from .postprocess import fit_obb, knn_filter
from .primitives import assign_primitives, materialize_primitives
from .relevance import (
    LikelihoodModel,
    UpdateOutcome,
    clamp_posterior,
    log_likelihood_ratio,
    update_gaussians,
    would_decrease_all,
)
from .types import Frame, MapState, ObjectCluster, Primitive, TaskList, new_map_state


@dataclass(frozen=True)
class PipelineConfig:
    model: LikelihoodModel = field(default_factory=LikelihoodModel)
    outlier_reject: bool = True
    use_bayes_update: bool = True  # False switches to score averaging
    use_knn: bool = True
    knn_k: int = 8
    knn_alpha: float = 2.0
    prune_threshold: float = 0.1
    stop_delta: float = 1e-3
    retain_fraction: Optional[float] = None
    depth_tol: float = DEFAULT_DEPTH_TOL
    depth_tol_rel: float = DEFAULT_DEPTH_TOL_REL


@dataclass
class PipelineResult:
    objects: List[ObjectCluster]
    primitives: List[Primitive]
    state: MapState
    n_frames: int
    n_clusters_raw: int

    def payload_sizes(self) -> Tuple[int, int, int]:
        return semantic_payload_sizes(self.state, self.primitives, self.objects)


def run_pipeline(
    scene: Sequence[Tuple[int, Sequence[float]]],
    tasks: TaskList | Sequence[str],
    frames: Iterable[Frame],
    config: PipelineConfig | None = None,
) -> PipelineResult:
    if config is None:
        config = PipelineConfig()
    if not isinstance(tasks, TaskList):
        tasks = TaskList(tuple(tasks))
    state = new_map_state(scene, tasks, prior_relevant=config.model.prior_relevant)
    n_tasks = len(tasks)

    averaging = not config.use_bayes_update
    score_sums = np.zeros_like(state.posteriors) if averaging else None
    score_counts = np.zeros(state.n_gaussians, dtype=np.int64) if averaging else None

    n_frames = 0
    for frame in frames:
        n_frames += 1
        projection = None
        needs_geometry = any(m.gaussian_ids is None for m in frame.masks)
        if needs_geometry:
            if frame.depth is None:
                raise ValueError(
                    f"frame {frame.frame_id}: geometric masks require a depth map"
                )
            projection = FrameProjection(state, frame.camera)

        frame_sets = []
        seen: set = set()
        for mask in frame.masks:
            if mask.scores is None:
                raise ValueError(
                    f"frame {frame.frame_id} mask {mask.mask_id}: "
                    "pipeline requires per-task scores"
                )
            if mask.scores.size != n_tasks:
                raise ValueError(
                    f"frame {frame.frame_id} mask {mask.mask_id}: scores length "
                    f"{mask.scores.size} does not match task count {n_tasks}"
                )
            gids = associate_mask(
                mask,
                frame.camera,
                frame.depth,
                state,
                depth_tol=config.depth_tol,
                depth_tol_rel=config.depth_tol_rel,
                projection=projection,
            )
            overlap = seen & gids
            if overlap:
                raise ValueError(
                    f"frame {frame.frame_id} mask {mask.mask_id}: Gaussian "
                    f"{next(iter(overlap))} already claimed by an earlier mask"
                )
            seen |= gids

            if averaging:
                if config.outlier_reject and would_decrease_all(mask.scores, config.model):
                    outcome = UpdateOutcome.REJECTED_AS_OUTLIER
                else:
                    outcome = UpdateOutcome.ACCEPTED
                    rows = state.rows_for(gids)
                    if rows.size:
                        score_sums[rows] += mask.scores[np.newaxis, :]
                        score_counts[rows] += 1
            else:
                outcome = update_gaussians(
                    state, gids, mask.scores, config.model,
                    outlier_reject=config.outlier_reject,
                )
            frame_sets.append((mask.mask_id, gids, outcome))
        assign_primitives(state, frame_sets)

    if averaging:
        observed = score_counts > 0
        if np.any(observed):
            means = score_sums[observed] / score_counts[observed, np.newaxis]
            prior = config.model.prior_relevant
            log_odds = log_likelihood_ratio(means, config.model) + np.log(
                prior / (1.0 - prior)
            )
            state.posteriors[observed] = clamp_posterior(
                np.where(
                    log_odds >= 0,
                    1.0 / (1.0 + np.exp(-log_odds)),
                    np.exp(log_odds) / (1.0 + np.exp(log_odds)),
                )
            )
            state.update_counts[observed] = score_counts[observed]

    primitives = materialize_primitives(state)
    if not primitives:
        return PipelineResult(
            objects=[], primitives=[], state=state, n_frames=n_frames, n_clusters_raw=0
        )

    centers = {int(g): state.centers[r] for g, r in state.id_to_row.items()}
    graph = build_graph(primitives, centers)
    clusters = agglomerate(
        graph,
        StoppingRule(delta=config.stop_delta, retain_fraction=config.retain_fraction),
    )
    kept = prune_irrelevant(clusters, threshold=config.prune_threshold)

    objects = []
    for cluster in kept:
        gids = sorted(cluster.gaussian_ids)
        pts = np.asarray([centers[g] for g in gids])
        if config.use_knn:
            keep_idx = knn_filter(pts, k=config.knn_k, alpha=config.knn_alpha)
            gids = [gids[i] for i in keep_idx]
            pts = pts[keep_idx]
        cluster.gaussian_ids = set(gids)
        cluster.obb = fit_obb(pts)
        objects.append(cluster)

    # Map-level IDs are assigned by salience (larger objects first), so the
    # documented lowest-ID tie-break on queries prefers the substantial
    # cluster over any stray fragment with an identical distribution.
    objects.sort(key=lambda c: (-len(c.gaussian_ids), min(c.gaussian_ids)))
    for new_id, cluster in enumerate(objects):
        cluster.id = new_id

    return PipelineResult(
        objects=objects,
        primitives=primitives,
        state=state,
        n_frames=n_frames,
        n_clusters_raw=len(clusters),
    )
