import math

import numpy as np
import pytest

from centered_bandit.environments import (
    HEARTSTEPS_THETA,
    EnvironmentModel,
    OraclePolicy,
    RegretTrace,
    make_environment,
    oracle_from_effects,
    oracle_policy,
    step_regret,
)
from centered_bandit.policy import Decision, FeatureMap, ProbabilityBounds

BOUNDS = ProbabilityBounds(0.2, 0.8)


def decision_for(env, context, action, pi):
    s = env.feature_map.build(context, action)
    return Decision(candidate_action=action, pi=pi, realized_action=action, candidate_features=s)


def brute_force_best(effects, bounds, grid=101):
    """Best expected differential reward over arms x a grid of feasible pi."""
    pis = np.linspace(bounds.pi_min, bounds.pi_max, grid)
    return max(p * e for e in effects for p in pis)


class TestDefaults:
    def test_heartsteps_coefficients(self):
        np.testing.assert_array_equal(HEARTSTEPS_THETA[0], [0.116, -0.275, -0.233, 0.0425])
        np.testing.assert_array_equal(HEARTSTEPS_THETA[1], [0.116, 0.275, -0.233, 0.0425])
        env = make_environment()
        np.testing.assert_array_equal(
            env.theta_true, [0.116, -0.275, -0.233, 0.0425, 0.116, 0.275, -0.233, 0.0425]
        )
        assert env.context_dim == 7 and env.feature_map.dim == 8 and env.noise_sigma == 1.0

    def test_gp_starts_at_ones(self):
        env = make_environment("nonstationary")
        np.testing.assert_array_equal(env.gp_state, np.ones(7))
        assert env.gp_rho == 0.1

    def test_theta_dimension_checked(self):
        with pytest.raises(ValueError):
            EnvironmentModel(theta_true=np.zeros(5))

    @pytest.mark.parametrize("rho", [0.0, 1.0, -0.5])
    def test_rho_range(self, rho):
        with pytest.raises(ValueError):
            make_environment("nonstationary", gp_rho=rho)

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            make_environment("adversarial")


class TestContexts:
    def test_moments(self):
        env = make_environment()
        rng = np.random.default_rng(0)
        x = np.array([env.gen_context(rng) for _ in range(100_000)])
        assert x.shape[1] == 7
        assert np.all(np.abs(x.mean(axis=0)) <= 0.02)
        np.testing.assert_allclose(x.var(axis=0), 1.0, rtol=0.05)

    def test_seeded(self):
        env = make_environment()
        a = [env.gen_context(np.random.default_rng(42)) for _ in range(3)]
        np.testing.assert_array_equal(a[0], a[1])
        r1, r2 = np.random.default_rng(5), np.random.default_rng(5)
        for _ in range(10):
            np.testing.assert_array_equal(env.gen_context(r1), env.gen_context(r2))


class TestBaseline:
    def test_nonlinear_inside(self):
        ctx = np.zeros(7)
        ctx[0] = 0.5
        assert make_environment().baseline_reward(ctx) == 2.0

    def test_nonlinear_outside(self):
        ctx = np.zeros(7)
        ctx[0] = 1.0
        assert make_environment().baseline_reward(ctx) == 0.0
        ctx[0] = -0.8
        assert make_environment().baseline_reward(ctx) == 0.0

    def test_nonstationary_dot(self):
        env = make_environment("nonstationary")
        e1 = np.zeros(7)
        e1[0] = 1.0
        assert env.baseline_reward(e1) == 1.0


class TestGaussianProcess:
    def test_zero_noise_step(self):
        env = make_environment("nonstationary")
        env.gp_step(noise=np.zeros(7))
        np.testing.assert_allclose(env.gp_state, math.sqrt(0.99) * np.ones(7), rtol=1e-15)
        assert env.gp_state[0] == pytest.approx(0.994987, abs=1e-6)

    def test_rejected_on_nonlinear(self):
        with pytest.raises(ValueError):
            make_environment().gp_step(np.random.default_rng(0))

    def test_stationary_variance(self):
        # var <- (1 - rho^2) var + rho^2 has fixed point 1; one chain has only
        # ~500 effective samples per coordinate, so coordinates are pooled
        env = make_environment("nonstationary")
        rng = np.random.default_rng(2024)
        burn, n = 1_000, 100_000
        for _ in range(burn):
            env.gp_step(rng)
        path = np.empty((n, 7))
        for t in range(n):
            env.gp_step(rng)
            path[t] = env.gp_state
        assert path.var(axis=0).mean() == pytest.approx(1.0, rel=0.10)

    def test_cross_sectional_variance(self):
        # many independent coordinates, each started at 1, after 1000 steps
        env = make_environment("nonstationary", context_dim=20_000)
        rng = np.random.default_rng(7)
        for _ in range(1_000):
            env.gp_step(rng)
        # second moment: variance 1 - 0.99^t plus squared mean 0.99^t
        assert np.mean(env.gp_state**2) == pytest.approx(1.0, rel=0.05)
        assert env.gp_state.var() == pytest.approx(1 - 0.99**1000, rel=0.05)


class TestRewards:
    def test_zero_action_baseline_only(self):
        env = make_environment(noise_sigma=0.0)
        ctx = np.zeros(7)
        ctx[0] = 0.5
        ctx[1:4] = [1.0, -1.0, 2.0]
        assert env.realize_reward(ctx, 0, np.random.default_rng(0)) == 2.0

    def test_additive_decomposition(self):
        env = make_environment(noise_sigma=0.0)
        ctx = np.array([0.5, 1.0, -1.0, 2.0, 0.3, 0.3, 0.3])
        s = env.feature_map.build(ctx, 1)
        expected = 2.0 + float(s @ env.theta_true)
        assert env.realize_reward(ctx, 1, np.random.default_rng(0)) == pytest.approx(expected, abs=1e-15)
        # hand-computed interaction for action 1
        hand = 0.116 * 0.5 - 0.275 * 1.0 - 0.233 * -1.0 + 0.0425 * 2.0
        assert env.effect(ctx, 1) == pytest.approx(hand, abs=1e-15)

    def test_noise_variance(self):
        env = make_environment(noise_sigma=1.0)
        ctx = np.array([0.1, 0.2, 0.3, 0.4, 0.0, 0.0, 0.0])
        rng = np.random.default_rng(8)
        r = np.array([env.realize_reward(ctx, 2, rng) for _ in range(100_000)])
        assert r.var() == pytest.approx(1.0, rel=0.05)
        assert r.mean() == pytest.approx(2.0 + env.effect(ctx, 2), abs=0.02)

    def test_effects_match_feature_map(self):
        env = make_environment()
        rng = np.random.default_rng(1)
        for _ in range(50):
            ctx = rng.normal(size=7)
            for a in (1, 2):
                assert env.effect(ctx, a) == pytest.approx(env.feature_map.build(ctx, a) @ env.theta_true, abs=1e-14)


class TestOracle:
    def test_positive_best(self):
        o = oracle_from_effects([0.5, 0.2], BOUNDS)
        assert (o.a_star, o.best_nonzero, o.pi_star) == (1, 1, 0.8)
        assert o.expected_differential == pytest.approx(0.4, abs=1e-15)

    def test_all_negative(self):
        o = oracle_from_effects([-0.5, -0.2], BOUNDS)
        assert (o.a_star, o.best_nonzero, o.pi_star) == (0, 2, 0.2)
        assert o.expected_differential == pytest.approx(-0.04, abs=1e-15)

    def test_all_zero(self):
        o = oracle_from_effects([0.0, 0.0], BOUNDS)
        assert (o.a_star, o.best_nonzero, o.expected_differential) == (0, 1, 0.0)

    def test_pi_star_invariant(self):
        rng = np.random.default_rng(0)
        env = make_environment()
        for _ in range(200):
            o = oracle_policy(env, rng.normal(size=7), BOUNDS)
            assert o.pi_star == (BOUNDS.pi_max if o.a_star != 0 else BOUNDS.pi_min)

    def test_dominance_against_brute_force(self):
        env = make_environment()
        rng = np.random.default_rng(1)
        for _ in range(2_000):
            ctx = rng.normal(size=7)
            o = oracle_policy(env, ctx, BOUNDS)
            best = brute_force_best(env.effects(ctx), BOUNDS)
            assert o.expected_differential >= best - 1e-12
            assert o.expected_differential == pytest.approx(best, abs=1e-12)


class TestRegret:
    def test_matching_oracle(self):
        env = make_environment()
        ctx = np.random.default_rng(2).normal(size=7)
        o = oracle_policy(env, ctx, BOUNDS)
        d = decision_for(env, ctx, o.best_nonzero, o.pi_star)
        assert step_regret(o, d, env, ctx) == 0.0

    def test_hand_value(self):
        # oracle (0.8, value 0.5) against bandit (0.3, value 0.2)
        env = make_environment(n_actions=2, selector=(0,), theta=np.array([0.5, 0.2]))
        ctx = np.array([1.0] + [0.0] * 6)
        o = oracle_policy(env, ctx, BOUNDS)
        d = decision_for(env, ctx, 2, 0.3)
        assert step_regret(o, d, env, ctx) == pytest.approx(0.34, abs=1e-15)

    def test_zero_branch(self):
        env = make_environment(n_actions=2, selector=(0,), theta=np.array([-0.1, -0.3]))
        ctx = np.array([1.0] + [0.0] * 6)
        o = oracle_policy(env, ctx, BOUNDS)
        assert o.a_star == 0 and o.pi_star == 0.2
        assert step_regret(o, decision_for(env, ctx, 1, 0.2), env, ctx) == pytest.approx(0.0, abs=1e-15)

    def test_nonnegative_and_decomposition(self):
        env = make_environment()
        rng = np.random.default_rng(3)
        for _ in range(5_000):
            ctx = rng.normal(size=7)
            o = oracle_policy(env, ctx, BOUNDS)
            a = int(rng.integers(1, 3))
            pi = rng.uniform(0.2, 0.8)
            reg = step_regret(o, decision_for(env, ctx, a, pi), env, ctx)
            assert reg >= -1e-12
            v_a = env.effect(ctx, a)
            v_star = env.effect(ctx, o.best_nonzero)
            decomposed = (o.pi_star - pi) * v_a + o.pi_star * (v_star - v_a)
            assert reg == pytest.approx(decomposed, abs=1e-12)

    def test_trace_prefix_sum(self):
        tr = RegretTrace([0.1, 0.0, 0.3])
        np.testing.assert_allclose(tr.cumulative, [0.1, 0.1, 0.4])
        assert len(tr) == 3
