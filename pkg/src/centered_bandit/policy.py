"""Decision rules: action-centered Thompson sampling and a linear-TS benchmark."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .posterior import PosteriorState, normal_cdf


@dataclass(frozen=True)
class ProbabilityBounds:
    pi_min: float = 0.2
    pi_max: float = 0.8

    def __post_init__(self):
        if not (0.0 < self.pi_min <= self.pi_max < 1.0):
            raise ValueError(
                f"need 0 < pi_min <= pi_max < 1, got [{self.pi_min}, {self.pi_max}]"
            )


@dataclass(frozen=True)
class FeatureMap:
    """Stacked per-action interaction features.

    Action ``a`` (1-based) gets ``context[selector]`` in block ``a``; every
    other block is zero, so the output has length ``n_actions * len(selector)``.
    """

    n_actions: int = 2
    selector: tuple = (0, 1, 2, 3)

    def __post_init__(self):
        object.__setattr__(self, "selector", tuple(int(i) for i in self.selector))
        if self.n_actions < 1:
            raise ValueError("n_actions must be >= 1")
        if not self.selector or min(self.selector) < 0:
            raise ValueError("selector must be a non-empty list of non-negative indices")

    @property
    def per_action_dim(self) -> int:
        return len(self.selector)

    @property
    def dim(self) -> int:
        return self.n_actions * self.per_action_dim

    def build(self, context, action: int) -> np.ndarray:
        if not 1 <= action <= self.n_actions:
            raise ValueError(f"action must be in 1..{self.n_actions}, got {action}")
        context = np.asarray(context, dtype=float)
        if context.ndim != 1 or context.shape[0] <= max(self.selector):
            raise ValueError(
                f"context of shape {context.shape} too short for selector {self.selector}"
            )
        out = np.zeros(self.dim)
        k = self.per_action_dim
        out[(action - 1) * k: action * k] = context[list(self.selector)]
        return out

    def build_all(self, context) -> list:
        return [self.build(context, a) for a in range(1, self.n_actions + 1)]


def build_features(fmap: FeatureMap, context, action: int) -> np.ndarray:
    return fmap.build(context, action)


@dataclass
class Decision:
    candidate_action: int
    pi: float
    realized_action: int
    candidate_features: np.ndarray
    # width of the candidate direction at decision time (sumz diagnostic)
    width: float = 0.0
    # benchmark only: features of the zero action
    zero_features: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def realized_features(self) -> np.ndarray:
        if self.realized_action > 0 or self.zero_features is None:
            return self.candidate_features
        return self.zero_features


def clip_probability(p: float, bounds: ProbabilityBounds) -> float:
    return max(bounds.pi_min, min(bounds.pi_max, p))


def _argmax_lowest(values: Sequence[float]) -> int:
    # np.argmax returns the first maximum, i.e. the lowest index on ties
    return int(np.argmax(np.asarray(values)))


def choose_action_centered(
    state: PosteriorState,
    features_per_action: Sequence,
    bounds: ProbabilityBounds,
    rng: np.random.Generator,
    theta_sample: Optional[np.ndarray] = None,
) -> Decision:
    """One step of action-centered Thompson sampling.

    ``features_per_action[i]`` holds the features of action ``i + 1``.
    Passing ``theta_sample`` bypasses the posterior draw (test seam); the
    send/no-send uniform is still drawn from ``rng``.
    """
    if len(features_per_action) == 0:
        raise ValueError("need at least one nonzero action")
    if theta_sample is None:
        theta_sample = state.sample_theta(rng)
    values = [float(np.dot(s, theta_sample)) for s in features_per_action]
    idx = _argmax_lowest(values)
    s = np.asarray(features_per_action[idx], dtype=float)
    pi = clip_probability(state.prob_positive(s), bounds)
    send = rng.random() < pi
    return Decision(
        candidate_action=idx + 1,
        pi=pi,
        realized_action=idx + 1 if send else 0,
        candidate_features=s,
        width=state.z_width(s),
    )


def observe_action_centered(state: PosteriorState, decision: Decision, reward: float) -> None:
    # the candidate's features are used even when action 0 was played
    state.update(
        decision.candidate_features, decision.pi, decision.realized_action > 0, reward
    )


def choose_benchmark(
    state: PosteriorState,
    features_per_action: Sequence,
    bounds: ProbabilityBounds,
    rng: np.random.Generator,
    theta_sample: Optional[np.ndarray] = None,
) -> Decision:
    """Probability-constrained linear Thompson sampling.

    ``features_per_action[0]`` is the zero action; entries ``1..N`` are the
    nonzero actions. The sending probability is the clipped posterior
    probability that the candidate beats action 0.
    """
    if len(features_per_action) < 2:
        raise ValueError("benchmark needs the zero action plus at least one nonzero action")
    if theta_sample is None:
        theta_sample = state.sample_theta(rng)
    x0 = np.asarray(features_per_action[0], dtype=float)
    values = [float(np.dot(x, theta_sample)) for x in features_per_action[1:]]
    idx = _argmax_lowest(values)
    x = np.asarray(features_per_action[idx + 1], dtype=float)
    pi = clip_probability(state.prob_positive(x - x0), bounds)
    send = rng.random() < pi
    return Decision(
        candidate_action=idx + 1,
        pi=pi,
        realized_action=idx + 1 if send else 0,
        candidate_features=x,
        width=state.z_width(x - x0),
        zero_features=x0,
    )


def observe_benchmark(
    state: PosteriorState, decision: Decision, reward: float, realized_features=None
) -> None:
    if realized_features is None:
        realized_features = decision.realized_features
    state.update_unweighted(realized_features, reward)


class ActionCenteredTS:
    """Action-centered Thompson sampling bandit over a :class:`FeatureMap`."""

    name = "action_centered"

    def __init__(self, feature_map: FeatureMap, bounds: ProbabilityBounds, v: float = 1.0):
        self.feature_map = feature_map
        self.bounds = bounds
        self.state = PosteriorState(feature_map.dim, v)

    def features(self, context) -> list:
        return self.feature_map.build_all(context)

    def choose(self, context, rng, theta_sample=None) -> Decision:
        return choose_action_centered(
            self.state, self.features(context), self.bounds, rng, theta_sample
        )

    def observe(self, decision: Decision, reward: float) -> None:
        observe_action_centered(self.state, decision, reward)


class BenchmarkTS:
    """Standard linear Thompson sampling on the total reward.

    Features are ``[baseline block, interaction block]``; the baseline block
    is shared by all actions (including 0) and the interaction block is the
    stacked :class:`FeatureMap` output (all zeros for action 0).

    ``baseline`` selects the baseline block: ``"context"`` gives
    ``[1, context]``, ``"intercept"`` gives ``[1]`` and ``"none"`` drops it.
    """

    name = "benchmark"
    BASELINES = ("context", "intercept", "none")

    def __init__(
        self,
        feature_map: FeatureMap,
        bounds: ProbabilityBounds,
        v: float = 1.0,
        context_dim: int = 7,
        baseline: str = "context",
    ):
        if baseline not in self.BASELINES:
            raise ValueError(f"baseline must be one of {self.BASELINES}, got {baseline!r}")
        self.feature_map = feature_map
        self.bounds = bounds
        self.baseline = baseline
        self.context_dim = context_dim
        base_dim = {"context": 1 + context_dim, "intercept": 1, "none": 0}[baseline]
        self.base_dim = base_dim
        self.state = PosteriorState(base_dim + feature_map.dim, v)

    def _base(self, context) -> np.ndarray:
        if self.baseline == "context":
            return np.concatenate(([1.0], np.asarray(context, dtype=float)))
        if self.baseline == "intercept":
            return np.ones(1)
        return np.zeros(0)

    def features(self, context) -> list:
        base = self._base(context)
        zero = np.concatenate((base, np.zeros(self.feature_map.dim)))
        return [zero] + [np.concatenate((base, s)) for s in self.feature_map.build_all(context)]

    def choose(self, context, rng, theta_sample=None) -> Decision:
        return choose_benchmark(self.state, self.features(context), self.bounds, rng, theta_sample)

    def observe(self, decision: Decision, reward: float) -> None:
        observe_benchmark(self.state, decision, reward)


class FixedRandomization:
    """Non-adaptive policy: send with probability ``p``, arm uniform over ``1..N``."""

    name = "fixed"

    def __init__(self, n_actions: int, p: float):
        if not 0.0 < p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {p}")
        self.n_actions = n_actions
        self.p = p

    def choose(self, context, rng) -> Decision:
        arm = int(rng.integers(1, self.n_actions + 1))
        send = rng.random() < self.p
        return Decision(arm, self.p, arm if send else 0, np.zeros(0))

    def observe(self, decision: Decision, reward: float) -> None:
        pass
