"""Action-centered Thompson sampling for contextual bandits with a complex baseline reward."""
from .environments import (
    EnvironmentModel,
    OraclePolicy,
    RegretTrace,
    make_environment,
    oracle_policy,
    step_regret,
)
from .experiment import AggregateCurve, ExperimentConfig, aggregate, run_experiment
from .policy import (
    ActionCenteredTS,
    BenchmarkTS,
    Decision,
    FeatureMap,
    FixedRandomization,
    ProbabilityBounds,
    build_features,
    choose_action_centered,
    choose_benchmark,
    clip_probability,
    observe_action_centered,
    observe_benchmark,
)
from .posterior import PosteriorState, centered_reward, new_posterior, normal_cdf
from .replay import LogRecord, ReplayResult, generate_log, parse_log, replay
from .theory import sumz_diagnostic, theory_ell, theory_v

__version__ = "0.1.0"
