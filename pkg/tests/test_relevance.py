import math

import numpy as np
import pytest

from taskmap import (
    LikelihoodModel,
    TaskList,
    UpdateOutcome,
    average_scores_posterior,
    bayes_update,
    fit_gaussian,
    new_map_state,
    posterior_single,
    update_gaussians,
)
from taskmap.relevance import POSTERIOR_CEIL, POSTERIOR_FLOOR, would_decrease_all

from oracles import posterior_direct

# Alternative calibration: wider class separation, as fitted on full-image
# caption data rather than masked crops.
WIDE_MODEL = LikelihoodModel(mu_neg=0.092, sigma_neg=0.039, mu_pos=0.243, sigma_pos=0.035)


class TestFitGaussian:
    def test_two_samples(self):
        mean, std = fit_gaussian([0.1, 0.3])
        assert mean == pytest.approx(0.2)
        assert std == pytest.approx(math.sqrt(0.02))

    def test_constant_samples(self):
        mean, std = fit_gaussian([0.2, 0.2, 0.2])
        assert mean == pytest.approx(0.2)
        assert std == pytest.approx(0.0, abs=1e-12)

    def test_synthetic_negative_distribution(self):
        rng = np.random.default_rng(42)
        samples = rng.normal(0.092, 0.039, size=32_000)
        mean, std = fit_gaussian(samples)
        assert abs(mean - 0.092) < 0.002
        assert abs(std - 0.039) < 0.002

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            fit_gaussian([0.2])


class TestPosteriorSingle:
    def test_midpoint_with_flat_priors(self):
        model = LikelihoodModel()
        mid = (model.mu_neg + model.mu_pos) / 2
        assert posterior_single(mid, model, prior_relevant=0.5) == pytest.approx(0.5, abs=1e-9)

    def test_wide_separation_example(self):
        p = posterior_single(0.15, WIDE_MODEL, prior_relevant=0.5)
        expected = posterior_direct(0.15, 0.5, 0.092, 0.039, 0.243, 0.035)
        assert p == pytest.approx(expected, rel=1e-12)
        assert p == pytest.approx(0.090, abs=1e-3)

    def test_high_score_limit(self):
        assert posterior_single(1.0, LikelihoodModel(), prior_relevant=0.5) > 0.999

    def test_strictly_increasing_in_phi_with_equal_sigmas(self):
        # Strictness is checked away from float saturation; the full range is
        # still non-decreasing.
        model = LikelihoodModel()
        rng = np.random.default_rng(0)
        phis = np.sort(rng.uniform(0.0, 0.47, size=200))
        posts = [posterior_single(p, model) for p in phis]
        assert all(b > a for a, b in zip(posts, posts[1:]))
        wide = np.sort(rng.uniform(-1, 1, size=200))
        wide_posts = [posterior_single(p, model) for p in wide]
        assert all(b >= a for a, b in zip(wide_posts, wide_posts[1:]))


class TestBayesUpdate:
    def test_single_update_from_prior(self):
        p = bayes_update(0.05, 0.27, LikelihoodModel())
        expected = posterior_direct(0.27, 0.05, 0.20, 0.035, 0.27, 0.035)
        assert p == pytest.approx(expected, rel=1e-12)
        assert p == pytest.approx(0.280, abs=5e-4)

    def test_midpoint_leaves_prior_unchanged(self):
        assert bayes_update(0.5, 0.235, LikelihoodModel()) == pytest.approx(0.5, abs=1e-9)

    def test_five_updates_saturate(self):
        p = 0.05
        for _ in range(5):
            p = bayes_update(p, 0.27, LikelihoodModel())
        assert p > 0.999

    def test_degenerate_prior_rejected(self):
        with pytest.raises(ValueError):
            bayes_update(0.0, 0.2, LikelihoodModel())
        with pytest.raises(ValueError):
            bayes_update(1.0, 0.2, LikelihoodModel())

    def test_output_clamped(self):
        model = LikelihoodModel()
        hi = bayes_update(1 - 1e-9, 0.8, model)
        lo = bayes_update(1e-9, -0.8, model)
        assert hi == POSTERIOR_CEIL
        assert lo == POSTERIOR_FLOOR

    def test_order_invariance_of_accepted_multiset(self):
        model = LikelihoodModel(sigma_eps=0.01)
        rng = np.random.default_rng(7)
        scores = rng.uniform(0.1, 0.35, size=12)
        final = []
        for perm_seed in range(4):
            order = np.random.default_rng(perm_seed).permutation(scores)
            p = 0.05
            for phi in order:
                p = bayes_update(p, float(phi), model)
            final.append(p)
        assert max(final) - min(final) < 1e-9

    def test_effective_variance_consistency(self):
        s_eps = 0.02
        a = LikelihoodModel(sigma_eps=s_eps)
        b = LikelihoodModel(
            sigma_neg=math.sqrt(0.035**2 + s_eps**2),
            sigma_pos=math.sqrt(0.035**2 + s_eps**2),
        )
        for phi in (-0.3, 0.1, 0.235, 0.29, 0.6):
            assert bayes_update(0.3, phi, a) == bayes_update(0.3, phi, b)


class TestModelValidation:
    def test_bad_params(self):
        with pytest.raises(ValueError):
            LikelihoodModel(sigma_neg=0.0)
        with pytest.raises(ValueError):
            LikelihoodModel(mu_pos=0.1, mu_neg=0.2)
        with pytest.raises(ValueError):
            LikelihoodModel(sigma_eps=-0.1)
        with pytest.raises(ValueError):
            LikelihoodModel(prior_relevant=0.0)

    def test_effective_std_exact_when_no_noise(self):
        model = LikelihoodModel(sigma_neg=0.0123)
        assert model.sigma_neg_eff == 0.0123


def _fresh_state(n=4, tasks=("a", "b")):
    scene = [(i, (float(i), 0.0, 0.0)) for i in range(n)]
    return new_map_state(scene, TaskList(tuple(tasks)))


class TestUpdateGaussians:
    def test_all_low_scores_rejected(self):
        state = _fresh_state()
        before = state.posteriors.copy()
        out = update_gaussians(state, {0, 1}, [0.15, 0.15], LikelihoodModel())
        assert out is UpdateOutcome.REJECTED_AS_OUTLIER
        assert np.array_equal(state.posteriors, before)
        assert np.all(state.update_counts == 0)

    def test_one_rising_task_accepted(self):
        state = _fresh_state()
        out = update_gaussians(state, {0, 1}, [0.30, 0.15], LikelihoodModel())
        assert out is UpdateOutcome.ACCEPTED
        assert state.posteriors[0, 0] > 0.05
        assert state.posteriors[0, 1] < 0.05
        assert state.posteriors[2, 0] == 0.05  # untouched gaussian
        assert state.update_counts.tolist() == [1, 1, 0, 0]

    def test_gate_disabled_accepts_decreases(self):
        state = _fresh_state()
        out = update_gaussians(
            state, {0}, [0.15, 0.15], LikelihoodModel(), outlier_reject=False
        )
        assert out is UpdateOutcome.ACCEPTED
        assert np.all(state.posteriors[0] < 0.05)

    def test_unknown_id(self):
        state = _fresh_state()
        with pytest.raises(KeyError):
            update_gaussians(state, {99}, [0.3, 0.3], LikelihoodModel())

    def test_score_length_mismatch(self):
        state = _fresh_state()
        with pytest.raises(ValueError, match="task count"):
            update_gaussians(state, {0}, [0.3], LikelihoodModel())

    def test_posteriors_stay_in_unit_interval_under_fuzz(self):
        state = _fresh_state(n=6, tasks=("a", "b", "c"))
        rng = np.random.default_rng(11)
        for _ in range(300):
            ids = set(rng.choice(6, size=rng.integers(1, 6), replace=False).tolist())
            scores = rng.uniform(-1, 1, size=3)
            update_gaussians(
                state, ids, scores, LikelihoodModel(), outlier_reject=bool(rng.integers(2))
            )
            assert np.all(state.posteriors >= POSTERIOR_FLOOR)
            assert np.all(state.posteriors <= POSTERIOR_CEIL)

    def test_gate_never_passes_all_decreasing_step(self):
        # With the gate on, no accepted update may lower every task.
        state = _fresh_state(n=3, tasks=("a", "b"))
        model = LikelihoodModel()
        rng = np.random.default_rng(5)
        for _ in range(200):
            scores = rng.uniform(-0.5, 0.8, size=2)
            before = state.posteriors.copy()
            out = update_gaussians(state, {0, 1, 2}, scores, model)
            if out is UpdateOutcome.ACCEPTED:
                delta = state.posteriors - before
                assert np.any(delta >= 0)
            else:
                assert np.array_equal(state.posteriors, before)


class TestAveraging:
    def test_single_score(self):
        model = LikelihoodModel()
        assert average_scores_posterior([0.27], model) == posterior_single(0.27, model)

    def test_mean_of_two(self):
        model = LikelihoodModel()
        assert average_scores_posterior([0.20, 0.34], model) == pytest.approx(
            posterior_single(0.27, model), rel=1e-12
        )

    def test_repetition_is_idempotent(self):
        model = LikelihoodModel()
        one = average_scores_posterior([0.3], model)
        many = average_scores_posterior([0.3] * 50, model)
        assert one == pytest.approx(many, rel=1e-12)
        # contrast: recursion sharpens
        p = 0.05
        for _ in range(50):
            p = bayes_update(p, 0.3, model)
        assert p > many

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            average_scores_posterior([], LikelihoodModel())


def test_would_decrease_all_matches_likelihood_rule():
    model = LikelihoodModel(sigma_eps=0.01)
    rng = np.random.default_rng(3)
    for _ in range(500):
        scores = rng.uniform(-0.5, 0.8, size=rng.integers(1, 5))
        by_likelihood = would_decrease_all(scores, model)
        by_update = all(
            bayes_update(0.37, float(s), model) < 0.37 for s in scores
        )
        assert by_likelihood == by_update
