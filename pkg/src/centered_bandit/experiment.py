"""Seeded multi-trial regret experiments and their CSV/JSON outputs.

Random streams
--------------
Trial ``i`` of a run with master seed ``m`` uses
``numpy.random.SeedSequence(m, spawn_key=(i,))`` and spawns two PCG64
generators from it: the first drives the environment (contexts, GP steps,
reward noise), the second the bandit (posterior draws, send/no-send
uniforms). Both algorithms therefore see identical contexts and noise for a
given trial, and a trial's trace does not depend on which other trials run.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np

from .environments import (
    NONSTATIONARY,
    VARIANTS,
    EnvironmentModel,
    RegretTrace,
    make_environment,
    oracle_from_effects,
)
from .policy import ActionCenteredTS, BenchmarkTS, ProbabilityBounds
from .theory import sumz_diagnostic

ALGORITHMS = ("action_centered", "benchmark")


class ConfigError(ValueError):
    pass


@dataclass
class EnvironmentConfig:
    variant: str = "nonlinear"
    context_dim: int = 7
    n_actions: int = 2
    selector: List[int] = field(default_factory=lambda: [0, 1, 2, 3])
    theta: Optional[List[float]] = None
    noise_sigma: float = 1.0
    gp_rho: float = 0.1
    gp_init: float = 1.0
    nonlinear_threshold: float = 0.8
    nonlinear_amplitude: float = 2.0

    def build(self) -> EnvironmentModel:
        extra = {}
        if self.variant == NONSTATIONARY:
            extra["gp_state"] = np.full(self.context_dim, float(self.gp_init))
        return make_environment(
            variant=self.variant,
            n_actions=self.n_actions,
            selector=self.selector,
            context_dim=self.context_dim,
            theta=None if self.theta is None else np.asarray(self.theta, dtype=float),
            noise_sigma=self.noise_sigma,
            gp_rho=self.gp_rho,
            nonlinear_threshold=self.nonlinear_threshold,
            nonlinear_amplitude=self.nonlinear_amplitude,
            **extra,
        )


@dataclass
class ExperimentConfig:
    algorithm: str = "action_centered"
    environment: EnvironmentConfig = field(default_factory=EnvironmentConfig)
    pi_min: float = 0.2
    pi_max: float = 0.8
    v: float = 1.0
    horizon: int = 2000
    trials: int = 100
    master_seed: int = 0
    output_path: str = "results"
    benchmark_baseline: str = "context"
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.environment, dict):
            self.environment = _from_dict(EnvironmentConfig, self.environment, "environment")
        self.validate()

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.environment.variant not in VARIANTS:
            raise ConfigError(f"environment.variant must be one of {VARIANTS}")
        try:
            self.bounds
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not (self.v > 0 and math.isfinite(self.v)):
            raise ConfigError(f"v must be positive, got {self.v}")
        for name in ("horizon", "trials", "workers"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if not (0 <= self.master_seed < 2**64):
            raise ConfigError("master_seed must be a 64-bit unsigned integer")
        if self.benchmark_baseline not in BenchmarkTS.BASELINES:
            raise ConfigError(f"benchmark_baseline must be one of {BenchmarkTS.BASELINES}")
        try:
            self.environment.build()
        except ValueError as exc:
            raise ConfigError(f"environment: {exc}") from None

    @property
    def bounds(self) -> ProbabilityBounds:
        return ProbabilityBounds(self.pi_min, self.pi_max)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        bounds = data.pop("bounds", None)
        if bounds is not None:
            data.setdefault("pi_min", bounds.get("pi_min", 0.2))
            data.setdefault("pi_max", bounds.get("pi_max", 0.8))
        return _from_dict(cls, data, "config")

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def make_policy(self):
        fmap = self.environment.build().feature_map
        if self.algorithm == "action_centered":
            return ActionCenteredTS(fmap, self.bounds, self.v)
        return BenchmarkTS(
            fmap, self.bounds, self.v, self.environment.context_dim, self.benchmark_baseline
        )


def _from_dict(cls, data: dict, where: str):
    known = set(cls.__dataclass_fields__)
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def trial_streams(master_seed: int, trial: int):
    """(environment rng, policy rng) for one trial."""
    env_seq, policy_seq = np.random.SeedSequence(master_seed, spawn_key=(trial,)).spawn(2)
    return np.random.Generator(np.random.PCG64(env_seq)), np.random.Generator(np.random.PCG64(policy_seq))


@dataclass
class TrialResult:
    trial: int
    trace: RegretTrace
    pis: np.ndarray
    widths: np.ndarray


def run_trial(
    config: ExperimentConfig, trial: int, policy_factory: Optional[Callable] = None
) -> TrialResult:
    env_rng, policy_rng = trial_streams(config.master_seed, trial)
    env = config.environment.build()
    policy = policy_factory(env, config) if policy_factory else config.make_policy()
    bounds = config.bounds
    T = config.horizon
    regrets = np.empty(T)
    pis = np.empty(T)
    widths = np.empty(T)
    nonstationary = env.variant == NONSTATIONARY
    for t in range(T):
        if nonstationary:
            env.gp_step(env_rng)
        context = env.gen_context(env_rng)
        decision = policy.choose(context, policy_rng)
        effects = env.effects(context)
        oracle = oracle_from_effects(effects, bounds)
        reward = env.realize_reward(context, decision.realized_action, env_rng)
        regrets[t] = oracle.expected_differential - decision.pi * effects[decision.candidate_action - 1]
        pis[t] = decision.pi
        widths[t] = decision.width
        policy.observe(decision, reward)
    return TrialResult(trial, RegretTrace(regrets), pis, widths)


@dataclass
class AggregateCurve:
    t: np.ndarray
    median: np.ndarray
    q1: np.ndarray
    q3: np.ndarray


def aggregate(traces) -> AggregateCurve:
    """Pointwise median and quartiles of the cumulative regret.

    Quantiles interpolate linearly between order statistics (numpy's
    default ``"linear"`` method).
    """
    traces = list(traces)
    if not traces:
        raise ValueError("need at least one trace")
    lengths = {len(tr) for tr in traces}
    if len(lengths) != 1:
        raise ValueError(f"traces have ragged lengths {sorted(lengths)}")
    cum = np.vstack([tr.cumulative for tr in traces])
    q1, med, q3 = np.quantile(cum, [0.25, 0.5, 0.75], axis=0)
    return AggregateCurve(np.arange(1, cum.shape[1] + 1), med, q1, q3)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trials: List[TrialResult]
    curve: AggregateCurve
    wall_time: float

    @property
    def traces(self) -> List[RegretTrace]:
        return [tr.trace for tr in self.trials]

    def sumz_reports(self) -> list:
        if self.config.algorithm != "action_centered":
            return []
        d = self.config.environment.build().feature_map.dim
        return [sumz_diagnostic(zip(tr.pis, tr.widths), d) for tr in self.trials]

    def summary(self) -> dict:
        final = {
            "median": float(self.curve.median[-1]),
            "q1": float(self.curve.q1[-1]),
            "q3": float(self.curve.q3[-1]),
        }
        half = len(self.curve.median) // 2
        if half >= 1 and self.curve.median[half - 1] != 0:
            final["median_ratio_full_over_half"] = float(self.curve.median[-1] / self.curve.median[half - 1])
        reports = self.sumz_reports()
        sumz = None
        if reports:
            sumz = {
                "all_satisfied": all(r.satisfied for r in reports),
                "max_lhs_over_rhs": max(r.lhs / r.rhs for r in reports),
                "per_trial": [r.as_dict() for r in reports],
            }
        all_pis = np.concatenate([tr.pis for tr in self.trials])
        return {
            "config": self.config.to_dict(),
            "final_cumulative_regret": final,
            "pi_range": [float(all_pis.min()), float(all_pis.max())],
            "sumz_diagnostic": sumz,
            "wall_time_seconds": self.wall_time,
        }


def _run_trial_star(args):
    return run_trial(*args)


def run_experiment(
    config: ExperimentConfig, policy_factory: Optional[Callable] = None
) -> ExperimentResult:
    """Run every trial and aggregate; results are merged in trial order."""
    start = time.perf_counter()
    jobs = [(config, i, policy_factory) for i in range(config.trials)]
    if config.workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=min(config.workers, config.trials)) as pool:
            trials = list(pool.map(_run_trial_star, jobs))
    else:
        trials = [_run_trial_star(job) for job in jobs]
    curve = aggregate(tr.trace for tr in trials)
    return ExperimentResult(config, trials, curve, time.perf_counter() - start)


def _r(x) -> str:
    return repr(float(x))


def write_outputs(result: ExperimentResult, out_dir) -> Path:
    """Write ``trials.csv``, ``aggregate.csv``, ``summary.json`` (and ``widths.csv``)."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "trials.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "t", "regret", "cum_regret", "pi_t"])
            for tr in result.trials:
                for t, (reg, cum, pi) in enumerate(
                    zip(tr.trace.per_step, tr.trace.cumulative, tr.pis), start=1
                ):
                    w.writerow([tr.trial, t, _r(reg), _r(cum), _r(pi)])
        with open(out / "aggregate.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "median", "q1", "q3"])
            c = result.curve
            for row in zip(c.t, c.median, c.q1, c.q3):
                w.writerow([int(row[0]), _r(row[1]), _r(row[2]), _r(row[3])])
        if result.config.algorithm == "action_centered":
            d = result.config.environment.build().feature_map.dim
            with open(out / "widths.csv", "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["trial", "t", "d", "pi_t", "z_t"])
                for tr in result.trials:
                    for t, (pi, z) in enumerate(zip(tr.pis, tr.widths), start=1):
                        w.writerow([tr.trial, t, d, _r(pi), _r(z)])
        with open(out / "summary.json", "w", encoding="utf-8") as fh:
            json.dump(result.summary(), fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write results to {out}: {exc.strerror}") from None
    return out


def read_width_trace(path) -> dict:
    """Load ``widths.csv`` as ``{trial: (d, [(pi, z), ...])}``."""
    runs: dict = {}
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = {"trial", "d", "pi_t", "z_t"} - set(reader.fieldnames or ())
            if missing:
                raise ValueError(f"{path}: missing columns {sorted(missing)}")
            for row in reader:
                trial = int(row["trial"])
                d, pairs = runs.setdefault(trial, (int(row["d"]), []))
                pairs.append((float(row["pi_t"]), float(row["z_t"])))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read trace {path}: {exc.strerror}") from None
    return runs


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)
