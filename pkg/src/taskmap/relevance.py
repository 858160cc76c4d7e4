"""Probabilistic interpretation of vision-language cosine scores.

Cosine scores against a task embedding are modeled with one Gaussian per
class (relevant / not relevant). A single score converts to a relevance
probability through Bayes' rule on those two densities, and repeated
observations of the same region fold in recursively, with an outlier gate
that skips measurements which would lower every task's posterior.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .types import MapState

# Posteriors are clamped away from 0/1 after every update: the exact update
# never reaches the boundary, and float saturation would freeze all later
# updates at that Gaussian.
POSTERIOR_FLOOR = 1e-6
POSTERIOR_CEIL = 1.0 - 1e-6

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class LikelihoodModel:
    """Gaussian class-conditional score model plus measurement noise.

    ``sigma_eps`` is the std of the zero-mean measurement noise added on top
    of the per-class score distributions; evaluation always uses the
    effective per-class std sqrt(sigma^2 + sigma_eps^2).
    """

    mu_neg: float = 0.20
    sigma_neg: float = 0.035
    mu_pos: float = 0.27
    sigma_pos: float = 0.035
    sigma_eps: float = 0.0
    prior_relevant: float = 0.05

    def __post_init__(self):
        if self.sigma_neg <= 0 or self.sigma_pos <= 0:
            raise ValueError("class stds must be positive")
        if self.sigma_eps < 0:
            raise ValueError("sigma_eps must be nonnegative")
        if self.mu_pos <= self.mu_neg:
            raise ValueError("mu_pos must exceed mu_neg")
        if not (0.0 < self.prior_relevant < 1.0):
            raise ValueError("prior_relevant must be in (0, 1)")

    @property
    def sigma_neg_eff(self) -> float:
        # Guard the sigma_eps == 0 case so the effective std is bit-identical
        # to the configured one (sqrt(s*s) may round).
        if self.sigma_eps == 0.0:
            return self.sigma_neg
        return math.sqrt(self.sigma_neg**2 + self.sigma_eps**2)

    @property
    def sigma_pos_eff(self) -> float:
        if self.sigma_eps == 0.0:
            return self.sigma_pos
        return math.sqrt(self.sigma_pos**2 + self.sigma_eps**2)


class UpdateOutcome(enum.Enum):
    ACCEPTED = "accepted"
    REJECTED_AS_OUTLIER = "rejected_as_outlier"


def fit_gaussian(samples: Sequence[float]) -> tuple[float, float]:
    """Best-fit Gaussian of a score sample: mean and unbiased std."""
    arr = np.asarray(samples, dtype=np.float64).reshape(-1)
    if arr.size < 2:
        raise ValueError("need at least 2 samples to fit a Gaussian")
    return float(arr.mean()), float(arr.std(ddof=1))


def _log_pdf(phi, mu: float, sigma: float):
    z = (phi - mu) / sigma
    return -0.5 * z * z - math.log(sigma) - 0.5 * _LOG_2PI


def log_likelihood_ratio(phi, model: LikelihoodModel):
    """log p(phi | relevant) - log p(phi | not relevant), effective stds."""
    return _log_pdf(phi, model.mu_pos, model.sigma_pos_eff) - _log_pdf(
        phi, model.mu_neg, model.sigma_neg_eff
    )


def _posterior_from_log_odds(log_odds):
    # Numerically stable logistic; exp never sees a positive argument, so no
    # overflow on either branch. Works on scalars and arrays.
    ex = np.exp(-np.abs(log_odds))
    return np.where(log_odds >= 0, 1.0 / (1.0 + ex), ex / (1.0 + ex))


def clamp_posterior(p):
    return np.clip(p, POSTERIOR_FLOOR, POSTERIOR_CEIL)


def posterior_single(
    phi: float, model: LikelihoodModel, prior_relevant: float | None = None
) -> float:
    """Relevance probability of a single score via Bayes' rule.

    ``prior_relevant`` overrides the model prior; pass 0.5 for the
    uninformative-prior calibration setting.
    """
    prior = model.prior_relevant if prior_relevant is None else float(prior_relevant)
    if not (0.0 < prior < 1.0):
        raise ValueError("prior must be in (0, 1)")
    log_odds = log_likelihood_ratio(phi, model) + math.log(prior / (1.0 - prior))
    return float(_posterior_from_log_odds(np.float64(log_odds)))


def bayes_update(prior_t: float, phi_hat: float, model: LikelihoodModel) -> float:
    """One recursive fusion step: fold score ``phi_hat`` into posterior ``prior_t``.

    Measurement noise at each step is independent, so the update is a pure
    log-odds shift by the (effective-std) likelihood ratio. The result is
    clamped to [1e-6, 1 - 1e-6].
    """
    prior_t = float(prior_t)
    if not (0.0 < prior_t < 1.0):
        raise ValueError("prior_t must be strictly inside (0, 1)")
    log_odds = math.log(prior_t / (1.0 - prior_t)) + log_likelihood_ratio(
        phi_hat, model
    )
    return float(clamp_posterior(_posterior_from_log_odds(np.float64(log_odds))))


def would_decrease_all(scores, model: LikelihoodModel) -> bool:
    """True iff a fusion step would strictly lower the posterior for every task.

    Equivalent to p(phi | relevant) < p(phi | not relevant) for every task's
    score, independent of the current posterior. Ties count as non-decreasing.
    """
    scores = np.asarray(scores, dtype=np.float64)
    return bool(np.all(log_likelihood_ratio(scores, model) < 0.0))


def update_gaussians(
    state: MapState,
    gaussian_ids,
    scores,
    model: LikelihoodModel,
    outlier_reject: bool = True,
) -> UpdateOutcome:
    """Fuse one mask's per-task scores into every listed Gaussian.

    With ``outlier_reject`` on, a measurement that would lower the posterior
    for all tasks leaves the state untouched and reports
    ``REJECTED_AS_OUTLIER``; otherwise every listed Gaussian's posterior for
    every task is replaced by the fused value.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if scores.size != state.n_tasks:
        raise ValueError(
            f"scores length {scores.size} does not match task count {state.n_tasks}"
        )
    rows = state.rows_for(gaussian_ids)
    llr = log_likelihood_ratio(scores, model)
    if outlier_reject and bool(np.all(llr < 0.0)):
        return UpdateOutcome.REJECTED_AS_OUTLIER
    if rows.size:
        post = state.posteriors[rows]
        log_odds = np.log(post / (1.0 - post)) + llr[np.newaxis, :]
        state.posteriors[rows] = clamp_posterior(_posterior_from_log_odds(log_odds))
        state.update_counts[rows] += 1
    return UpdateOutcome.ACCEPTED


def average_scores_posterior(
    all_scores: Sequence[float],
    model: LikelihoodModel,
    prior_relevant: float | None = None,
) -> float:
    """Averaging fallback: single Bayes conversion of the mean score.

    Used when recursive fusion is disabled; repeated identical scores give
    the same answer as one, in contrast to the sharpening recursion.
    """
    arr = np.asarray(all_scores, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ValueError("need at least one score to average")
    return posterior_single(float(arr.mean()), model, prior_relevant=prior_relevant)
