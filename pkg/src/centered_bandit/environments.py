"""Simulated reward models, the constrained-optimal oracle and per-step regret."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .policy import Decision, FeatureMap, ProbabilityBounds

NONLINEAR = "nonlinear"
NONSTATIONARY = "nonstationary"
VARIANTS = (NONLINEAR, NONSTATIONARY)

# Interaction effects fitted on HeartSteps data; one row per action, columns:
# messages sent, location 1, location 2, step-count variability.
HEARTSTEPS_THETA = np.array(
    [
        [0.116, -0.275, -0.233, 0.0425],
        [0.116, 0.275, -0.233, 0.0425],
    ]
)


def default_theta() -> np.ndarray:
    return HEARTSTEPS_THETA.ravel().copy()


@dataclass
class EnvironmentModel:
    """Reward model ``r = theta^T s_a 1[a>0] + g_t(context) + sigma * n``.

    ``variant`` picks the baseline ``g_t``: a thresholded bump on the first
    context feature (``nonlinear``) or ``eta_t^T context`` with ``eta_t`` an
    AR(1) Gaussian process (``nonstationary``).
    """

    variant: str = NONLINEAR
    theta_true: np.ndarray = field(default_factory=default_theta)
    context_dim: int = 7
    noise_sigma: float = 1.0
    feature_map: FeatureMap = field(default_factory=FeatureMap)
    gp_rho: float = 0.1
    gp_state: Optional[np.ndarray] = None
    nonlinear_threshold: float = 0.8
    nonlinear_amplitude: float = 2.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        self.theta_true = np.asarray(self.theta_true, dtype=float)
        if self.theta_true.shape != (self.feature_map.dim,):
            raise ValueError(
                f"theta_true has shape {self.theta_true.shape}, "
                f"feature map produces {self.feature_map.dim} features"
            )
        if self.context_dim <= max(self.feature_map.selector):
            raise ValueError("context_dim too small for the feature map selector")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if self.variant == NONSTATIONARY:
            if not 0.0 < self.gp_rho < 1.0:
                raise ValueError(f"gp_rho must lie in (0, 1), got {self.gp_rho}")
            if self.gp_state is None:
                self.gp_state = np.ones(self.context_dim)
            self.gp_state = np.asarray(self.gp_state, dtype=float)

    @property
    def n_actions(self) -> int:
        return self.feature_map.n_actions

    def gen_context(self, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal(self.context_dim)

    def gp_step(self, rng: Optional[np.random.Generator] = None, noise=None) -> None:
        """Advance ``eta <- sqrt(1 - rho^2) eta + rho n``; ``noise`` overrides ``n``."""
        if self.variant != NONSTATIONARY:
            raise ValueError("gp_step is only defined for the nonstationary variant")
        if noise is None:
            noise = rng.standard_normal(self.context_dim)
        rho = self.gp_rho
        self.gp_state = math.sqrt(1.0 - rho * rho) * self.gp_state + rho * np.asarray(noise)

    def baseline_reward(self, context) -> float:
        if self.variant == NONLINEAR:
            return self.nonlinear_amplitude * float(abs(context[0]) < self.nonlinear_threshold)
        return float(self.gp_state @ context)

    def effects(self, context) -> np.ndarray:
        """Expected differential rewards ``s_a^T theta`` of actions ``1..N``."""
        blocks = self.theta_true.reshape(self.n_actions, self.feature_map.per_action_dim)
        return blocks @ np.asarray(context, dtype=float)[list(self.feature_map.selector)]

    def effect(self, context, action: int) -> float:
        """Expected differential reward of one action (0 for action 0)."""
        if action == 0:
            return 0.0
        if not 1 <= action <= self.n_actions:
            raise ValueError(f"action must be in 0..{self.n_actions}, got {action}")
        return float(self.effects(context)[action - 1])

    def realize_reward(self, context, action: int, rng: np.random.Generator) -> float:
        # the noise draw happens for every action so the stream stays aligned
        noise = rng.standard_normal()
        return self.effect(context, action) + self.baseline_reward(context) + self.noise_sigma * noise


@dataclass(frozen=True)
class OraclePolicy:
    a_star: int
    pi_star: float
    best_nonzero: int
    expected_differential: float


def oracle_from_effects(effects, bounds: ProbabilityBounds) -> OraclePolicy:
    """Constrained-optimal policy given the nonzero actions' true effects."""
    effects = np.asarray(effects, dtype=float)
    best = int(np.argmax(effects)) + 1
    value = float(effects[best - 1])
    if value > 0:
        return OraclePolicy(best, bounds.pi_max, best, bounds.pi_max * value)
    return OraclePolicy(0, bounds.pi_min, best, bounds.pi_min * value)


def oracle_policy(env: EnvironmentModel, context, bounds: ProbabilityBounds) -> OraclePolicy:
    return oracle_from_effects(env.effects(context), bounds)


def step_regret(oracle: OraclePolicy, decision: Decision, env: EnvironmentModel, context) -> float:
    return oracle.expected_differential - decision.pi * env.effect(context, decision.candidate_action)


@dataclass
class RegretTrace:
    per_step: np.ndarray
    cumulative: np.ndarray = None

    def __post_init__(self):
        self.per_step = np.asarray(self.per_step, dtype=float)
        if self.cumulative is None:
            self.cumulative = np.cumsum(self.per_step)

    def __len__(self):
        return len(self.per_step)


def make_environment(
    variant: str = NONLINEAR,
    n_actions: int = 2,
    selector=(0, 1, 2, 3),
    context_dim: int = 7,
    theta=None,
    **kwargs,
) -> EnvironmentModel:
    """Environment with the HeartSteps defaults (N=2, K=4, L=7, d=8)."""
    fmap = FeatureMap(n_actions=n_actions, selector=tuple(selector))
    if theta is None:
        if n_actions <= HEARTSTEPS_THETA.shape[0] and fmap.per_action_dim == HEARTSTEPS_THETA.shape[1]:
            theta = HEARTSTEPS_THETA[:n_actions].ravel().copy()
        else:
            raise ValueError("theta must be given when the HeartSteps defaults do not apply")
    return EnvironmentModel(
        variant=variant, theta_true=theta, context_dim=context_dim, feature_map=fmap, **kwargs
    )
