"""Estimator-style wrappers so the algorithms compose with the sklearn ecosystem.

Each estimator follows the usual contract: constructor stores hyperparameters
verbatim, ``fit`` validates and computes, fitted state lands in trailing
underscore attributes, and ``get_params``/``set_params``/``clone`` work.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, OutlierMixin

from .ib import MergeGraph, MergeNode, StoppingRule, agglomerate
from .pipeline import PipelineConfig, run_pipeline
from .postprocess import knn_filter, select_fraction, select_top_k
from .relevance import LikelihoodModel, fit_gaussian, posterior_single
from .validation import check_is_fitted


class ScoreCalibrator(BaseEstimator):
    """Fit the per-class Gaussian score model from calibration samples.

    Negative samples are required; positive samples are optional since they
    are hard to collect for a new configuration. Without them the positive
    mean falls back to ``default_mu_pos`` and the positive std mirrors the
    fitted negative one.
    """

    def __init__(self, default_mu_pos=0.27, sigma_eps=0.0, prior_relevant=0.05):
        self.default_mu_pos = default_mu_pos
        self.sigma_eps = sigma_eps
        self.prior_relevant = prior_relevant

    def fit(self, negative_scores, positive_scores=None):
        self.mu_neg_, self.sigma_neg_ = fit_gaussian(negative_scores)
        if positive_scores is not None:
            self.mu_pos_, self.sigma_pos_ = fit_gaussian(positive_scores)
        else:
            self.mu_pos_ = float(self.default_mu_pos)
            self.sigma_pos_ = self.sigma_neg_
        self.model_ = LikelihoodModel(
            mu_neg=self.mu_neg_,
            sigma_neg=self.sigma_neg_,
            mu_pos=self.mu_pos_,
            sigma_pos=self.sigma_pos_,
            sigma_eps=self.sigma_eps,
            prior_relevant=self.prior_relevant,
        )
        return self

    def predict_proba(self, scores):
        """Single-observation relevance probabilities under uninformative priors."""
        check_is_fitted(self, "model_")
        return np.asarray(
            [posterior_single(float(s), self.model_, prior_relevant=0.5) for s in np.ravel(scores)]
        )


class InfoBottleneckClustering(BaseEstimator, ClusterMixin):
    """Agglomerative information-bottleneck clustering of distribution rows.

    ``X`` holds one conditional distribution per row. Rows may carry unequal
    prior mass, and merging can be restricted to an edge list; without one
    the graph is complete.
    """

    def __init__(self, stop_delta=1e-3, retain_fraction=None):
        self.stop_delta = stop_delta
        self.retain_fraction = retain_fraction

    def fit(self, X, y=None, mass=None, edges=None):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("X must be 2-dimensional (rows are distributions)")
        n = X.shape[0]
        if np.any(X < 0) or np.max(np.abs(X.sum(axis=1) - 1.0)) > 1e-6:
            raise ValueError("rows of X must be probability distributions")
        if mass is None:
            mass = np.full(n, 1.0 / n)
        else:
            mass = np.asarray(mass, dtype=np.float64)
            mass = mass / mass.sum()

        graph = MergeGraph(next_id=n)
        for i in range(n):
            graph.nodes[i] = MergeNode(
                id=i,
                mass=float(mass[i]),
                dist=X[i].copy(),
                primitive_ids={i},
                gaussian_ids=set(),
            )
            graph.adj[i] = set()
        if edges is None:
            for i in range(n):
                graph.adj[i] = set(range(n)) - {i}
        else:
            for a, b in edges:
                if a != b:
                    graph.adj[int(a)].add(int(b))
                    graph.adj[int(b)].add(int(a))

        clusters = agglomerate(
            graph,
            StoppingRule(delta=self.stop_delta, retain_fraction=self.retain_fraction),
        )
        labels = np.empty(n, dtype=np.int64)
        for label, cluster in enumerate(clusters):
            for i in cluster.primitive_ids:
                labels[i] = label
        self.labels_ = labels
        self.n_clusters_ = len(clusters)
        self.cluster_dists_ = np.asarray([c.task_dist for c in clusters])
        self.merge_log_ = list(graph.merge_log)
        return self

    def fit_predict(self, X, y=None, **fit_params):
        return self.fit(X, y, **fit_params).labels_


class KnnOutlierFilter(BaseEstimator, OutlierMixin):
    """Statistical floater removal with the sklearn outlier convention."""

    def __init__(self, k=8, alpha=2.0):
        self.k = k
        self.alpha = alpha

    def fit_predict(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        kept = knn_filter(X, k=self.k, alpha=self.alpha)
        labels = np.full(X.shape[0], -1, dtype=np.int64)
        labels[kept] = 1
        return labels


class TaskObjectMapper(BaseEstimator):
    """Full mapping pipeline behind a fit-and-query interface.

    ``fit`` consumes a scene, an observation-frame iterable, and the task
    list; the fitted map is exposed as ``objects_`` plus the query helpers
    ``top_k`` and ``relevant_set``.
    """

    def __init__(
        self,
        mu_neg=0.20,
        sigma_neg=0.035,
        mu_pos=0.27,
        sigma_pos=0.035,
        sigma_eps=0.0,
        prior_relevant=0.05,
        outlier_reject=True,
        use_bayes_update=True,
        use_knn=True,
        knn_k=8,
        knn_alpha=2.0,
        prune_threshold=0.1,
        stop_delta=1e-3,
        retain_fraction=None,
        depth_tol=0.05,
        depth_tol_rel=0.02,
    ):
        self.mu_neg = mu_neg
        self.sigma_neg = sigma_neg
        self.mu_pos = mu_pos
        self.sigma_pos = sigma_pos
        self.sigma_eps = sigma_eps
        self.prior_relevant = prior_relevant
        self.outlier_reject = outlier_reject
        self.use_bayes_update = use_bayes_update
        self.use_knn = use_knn
        self.knn_k = knn_k
        self.knn_alpha = knn_alpha
        self.prune_threshold = prune_threshold
        self.stop_delta = stop_delta
        self.retain_fraction = retain_fraction
        self.depth_tol = depth_tol
        self.depth_tol_rel = depth_tol_rel

    def _config(self) -> PipelineConfig:
        return PipelineConfig(
            model=LikelihoodModel(
                mu_neg=self.mu_neg,
                sigma_neg=self.sigma_neg,
                mu_pos=self.mu_pos,
                sigma_pos=self.sigma_pos,
                sigma_eps=self.sigma_eps,
                prior_relevant=self.prior_relevant,
            ),
            outlier_reject=self.outlier_reject,
            use_bayes_update=self.use_bayes_update,
            use_knn=self.use_knn,
            knn_k=self.knn_k,
            knn_alpha=self.knn_alpha,
            prune_threshold=self.prune_threshold,
            stop_delta=self.stop_delta,
            retain_fraction=self.retain_fraction,
            depth_tol=self.depth_tol,
            depth_tol_rel=self.depth_tol_rel,
        )

    def fit(self, scene, frames, tasks):
        result = run_pipeline(scene, tasks, frames, self._config())
        self.result_ = result
        self.objects_ = result.objects
        self.primitives_ = result.primitives
        self.state_ = result.state
        return self

    def top_k(self, task_index: int, k: int):
        check_is_fitted(self, "objects_")
        return select_top_k(self.objects_, task_index, k)

    def relevant_set(self, task_index: int, fraction: float = 0.8):
        check_is_fitted(self, "objects_")
        return select_fraction(self.objects_, task_index, fraction)
