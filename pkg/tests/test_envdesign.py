"""Tests for the Gaussian process surrogate and the design loop."""

import json

import numpy as np
import numpy.testing as npt
import pytest

from prefdesign.belief import BeliefSamples
from prefdesign.envdesign import (
    DesignBudget,
    GPModel,
    fit_gp,
    gp_posterior,
    propose_next,
    run_environment_design,
    ucb,
)
from prefdesign.domains import gridnav_spec
from prefdesign.errors import (
    DegenerateDesignError,
    IllConditionedModelError,
    InvalidArgumentError,
)
from prefdesign.queries import CandidatePair

from oracles import gp_posterior_dense, grid_argmax_ucb, uniform_ball_rejection

UNIT_BOX = np.array([[0.0, 1.0]])


def toy_model(seed=0, n=6, dim=2):
    rng = np.random.default_rng(seed)
    x = rng.random((n, dim))
    y = np.sin(3.0 * x[:, 0]) * 0.4 + 0.3 * x[:, -1]
    return GPModel(
        inputs=x,
        observations=y,
        length_scales=np.full(dim, 0.4),
        signal_variance=1.0,
    )


def negative_belief(k=200, d=5, seed=0):
    rng = np.random.default_rng(seed)
    samples = -np.abs(uniform_ball_rejection(d, k, rng))
    samples[:, 0] -= 0.1
    norms = np.linalg.norm(samples, axis=1)
    samples[norms > 1.0] /= norms[norms > 1.0, None]
    return BeliefSamples(samples=samples, acceptance_rate=0.5, seed=seed)


class TestGPPosterior:
    def test_matches_dense_solve(self):
        model = toy_model()
        rng = np.random.default_rng(1)
        for query in rng.random((10, 2)):
            mean, std = gp_posterior(model, query)
            ref_mean, ref_std = gp_posterior_dense(
                model.inputs, model.observations, query,
                model.length_scales, model.signal_variance, model.noise_variance,
            )
            assert mean == pytest.approx(ref_mean, abs=1e-10)
            assert std == pytest.approx(ref_std, abs=1e-10)

    def test_interpolates_training_points_when_noise_free(self):
        base = toy_model(n=8)
        model = GPModel(
            inputs=base.inputs,
            observations=base.observations,
            length_scales=base.length_scales,
            signal_variance=base.signal_variance,
            noise_variance=1e-10,
        )
        for x, y in zip(model.inputs, model.observations):
            mean, std = gp_posterior(model, x)
            assert mean == pytest.approx(y, abs=1e-4)
            assert std < 0.01

    def test_posterior_variance_never_exceeds_prior(self):
        model = toy_model(n=10)
        rng = np.random.default_rng(17)
        prior_std = np.sqrt(model.signal_variance)
        for q in rng.random((50, 2)) * 3.0 - 1.0:
            _, std = gp_posterior(model, q)
            assert 0.0 <= std <= prior_std + 1e-12

    def test_empty_model_returns_prior(self):
        model = GPModel(
            inputs=np.zeros((0, 3)),
            observations=np.zeros(0),
            length_scales=np.ones(3),
            signal_variance=2.25,
        )
        mean, std = gp_posterior(model, np.array([0.5, 0.5, 0.5]))
        assert mean == 0.0
        assert std == pytest.approx(1.5)

    def test_uncertainty_grows_away_from_data(self):
        model = toy_model()
        _, near = gp_posterior(model, model.inputs[0] + 0.01)
        _, far = gp_posterior(model, model.inputs[0] + 10.0)
        assert near < far
        assert far == pytest.approx(np.sqrt(model.signal_variance), abs=1e-6)

    def test_ill_conditioned_duplicates_raise(self):
        # Gigantic signal variance pushes the noise below the representable
        # gap between duplicated rows, so no jitter in the ladder can help.
        model = GPModel(
            inputs=np.array([[0.5], [0.5]]),
            observations=np.array([0.0, 1.0]),
            length_scales=np.array([1.0]),
            signal_variance=1e20,
        )
        with pytest.raises(IllConditionedModelError):
            gp_posterior(model, np.array([0.3]))

    def test_validation(self):
        with pytest.raises(InvalidArgumentError):
            GPModel(
                inputs=np.zeros((2, 1)),
                observations=np.zeros(3),
                length_scales=np.ones(1),
                signal_variance=1.0,
            )
        with pytest.raises(InvalidArgumentError):
            GPModel(
                inputs=np.zeros((2, 1)),
                observations=np.zeros(2),
                length_scales=np.array([-1.0]),
                signal_variance=1.0,
            )


class TestUCB:
    def test_kappa_zero_is_the_mean(self):
        model = toy_model()
        q = np.array([0.3, 0.7])
        assert ucb(model, q, 0.0) == pytest.approx(gp_posterior(model, q)[0])

    def test_monotone_in_kappa(self):
        model = toy_model()
        q = np.array([0.9, 0.1])
        assert ucb(model, q, 2.0) > ucb(model, q, 1.0) > ucb(model, q, 0.0)

    def test_negative_kappa_rejected(self):
        with pytest.raises(InvalidArgumentError):
            ucb(toy_model(), np.array([0.5, 0.5]), -1.0)


class TestProposeNext:
    def test_beats_dense_grid_in_1d(self):
        model = GPModel(
            inputs=np.array([[0.15], [0.4], [0.75]]),
            observations=np.array([0.1, 0.85, 0.3]),
            length_scales=np.array([0.2]),
            signal_variance=1.0,
        )
        for kappa in (0.0, 1.0, 2.576):
            proposal = propose_next(model, UNIT_BOX, kappa, seed=3)
            grid_arg, grid_best = grid_argmax_ucb(model, UNIT_BOX, kappa, points_per_dim=10000)
            assert ucb(model, proposal, kappa) >= grid_best - 1e-9
            assert abs(proposal[0] - grid_arg[0]) <= 1.0 / 9999

    def test_beats_dense_grid_in_2d(self):
        model = toy_model(seed=2, n=8, dim=2)
        bounds = np.array([[0.0, 1.0], [0.0, 1.0]])
        proposal = propose_next(model, bounds, 1.0, seed=5)
        _, grid_best = grid_argmax_ucb(model, bounds, 1.0, points_per_dim=100)
        assert ucb(model, proposal, 1.0) >= grid_best - 1e-6
        assert np.all(proposal >= 0.0) and np.all(proposal <= 1.0)

    def test_empty_model_returns_in_bounds_probe(self):
        model = GPModel(
            inputs=np.zeros((0, 2)),
            observations=np.zeros(0),
            length_scales=np.ones(2),
            signal_variance=1.0,
        )
        bounds = np.array([[0.0, 2.0], [-1.0, 1.0]])
        proposal = propose_next(model, bounds, 1.0, seed=0)
        assert bounds[0, 0] <= proposal[0] <= bounds[0, 1]
        assert bounds[1, 0] <= proposal[1] <= bounds[1, 1]

    def test_deterministic(self):
        model = toy_model()
        bounds = np.array([[0.0, 1.0], [0.0, 1.0]])
        npt.assert_array_equal(
            propose_next(model, bounds, 1.0, seed=9),
            propose_next(model, bounds, 1.0, seed=9),
        )


class TestFitGP:
    def test_recovers_a_smooth_function(self):
        rng = np.random.default_rng(4)
        x = rng.random((12, 1))
        y = 0.5 * np.sin(6.0 * x[:, 0])
        model = fit_gp(x, y, UNIT_BOX)
        for xi, yi in zip(x, y):
            mean, _ = gp_posterior(model, xi)
            assert mean == pytest.approx(yi, abs=5e-3)
        mean_mid, _ = gp_posterior(model, np.array([0.5]))
        assert mean_mid == pytest.approx(0.5 * np.sin(3.0), abs=0.1)

    def test_under_two_observations_uses_defaults(self):
        model = fit_gp(np.zeros((0, 2)), np.zeros(0), np.array([[0.0, 2.0], [0.0, 4.0]]))
        npt.assert_allclose(model.length_scales, [0.4, 0.8])
        assert model.signal_variance == 1.0
        one = fit_gp(np.array([[0.5, 0.5]]), np.array([0.3]), np.array([[0.0, 2.0], [0.0, 4.0]]))
        assert one.n == 1

    def test_length_scales_come_from_the_box(self):
        rng = np.random.default_rng(8)
        x = rng.random((10, 2)) * [2.0, 4.0]
        y = rng.random(10)
        model = fit_gp(x, y, np.array([[0.0, 2.0], [0.0, 4.0]]))
        factor = model.length_scales[0] / 2.0
        assert factor in (0.05, 0.1, 0.2, 0.5, 1.0)
        assert model.length_scales[1] / 4.0 == pytest.approx(factor)


class TestDesignBudget:
    def test_defaults(self):
        budget = DesignBudget()
        assert budget.total_evals == 15
        assert budget.init_random == 5
        assert budget.kappa == pytest.approx(2.576)

    def test_minimal_budget_is_allowed(self):
        budget = DesignBudget(total_evals=1, init_random=1)
        assert budget.total_evals == 1

    def test_invalid_budgets_rejected(self):
        with pytest.raises(InvalidArgumentError):
            DesignBudget(total_evals=0)
        with pytest.raises(InvalidArgumentError):
            DesignBudget(total_evals=5, init_random=0)
        with pytest.raises(InvalidArgumentError):
            DesignBudget(total_evals=5, init_random=6)
        with pytest.raises(InvalidArgumentError):
            DesignBudget(kappa=-0.5)


class TestRunEnvironmentDesign:
    def scripted_inner(self, peak):
        pair = CandidatePair(np.array([1.0]), np.array([0.0]))

        def inner(belief, env, seed):
            theta = env.theta
            return pair, float(np.exp(-np.sum(((theta - peak) / 0.15) ** 2)))

        return inner

    def test_finds_a_scripted_peak(self):
        spec = gridnav_spec(n_theta_edges=1)
        belief = negative_belief()
        result = run_environment_design(
            belief, spec, DesignBudget(total_evals=12, init_random=4), seed=2,
            inner=self.scripted_inner(np.array([0.7])),
        )
        assert abs(result.theta[0] - 0.7) < 0.1
        assert result.gain == max(it.gain for it in result.trace)
        assert len(result.trace) == 12

    def test_budget_extension_keeps_prefix_and_never_hurts(self):
        spec = gridnav_spec(n_theta_edges=2)
        belief = negative_belief()
        inner = self.scripted_inner(np.array([0.3, 0.8]))
        short = run_environment_design(
            belief, spec, DesignBudget(total_evals=4, init_random=3), seed=11, inner=inner
        )
        long = run_environment_design(
            belief, spec, DesignBudget(total_evals=9, init_random=3), seed=11, inner=inner
        )
        for a, b in zip(short.trace, long.trace):
            npt.assert_array_equal(a.theta, b.theta)
            assert a.gain == b.gain
        assert long.gain >= short.gain

    def test_runs_with_real_counterfactual_inner(self):
        spec = gridnav_spec()
        belief = negative_belief()
        result = run_environment_design(
            belief, spec, DesignBudget(total_evals=3, init_random=2), seed=0, n=30, m=5
        )
        assert 0.0 <= result.gain <= 1.0
        assert result.pair.gain_bits == result.gain
        payload = json.dumps(result.trace_payload())
        assert "degenerate" in payload

    def test_all_degenerate_raises(self):
        spec = gridnav_spec()
        single = np.tile([-0.9, -0.05, -0.1, -0.1, -0.05], (50, 1))
        belief = BeliefSamples(samples=single, acceptance_rate=0.5, seed=0)
        with pytest.raises(DegenerateDesignError):
            run_environment_design(belief, spec, DesignBudget(total_evals=2, init_random=2), seed=0)

    def test_degenerate_iterations_recorded_but_never_win(self):
        spec = gridnav_spec(n_theta_edges=1)
        belief = negative_belief()
        pair = CandidatePair(np.array([1.0]), np.array([0.0]))
        calls = []

        def flaky_inner(b, env, seed):
            calls.append(env.theta[0])
            if len(calls) % 2 == 1:
                from prefdesign.errors import DegenerateQueryError

                raise DegenerateQueryError("scripted")
            return pair, 0.5

        result = run_environment_design(
            belief, spec, DesignBudget(total_evals=4, init_random=4), seed=1, inner=flaky_inner
        )
        assert result.gain == 0.5
        assert [it.degenerate for it in result.trace] == [True, False, True, False]
        assert all(it.gain == 0.0 for it in result.trace if it.degenerate)
