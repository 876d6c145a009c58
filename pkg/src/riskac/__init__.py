"""Risk-sensitive actor-critic learners for finite MDPs.

The package provides the finite-MDP data model and softmax policies,
exact model-based oracles (spectral solutions of the multiplicative
kernel, twisted kernels, policy gradients and learner fixed points),
tabular and linear function-approximation actor-critic learners for the
risk-sensitive cost, risk-neutral baselines, the gridworld benchmark,
and an experiment harness with a CLI.
"""

from .mdp import (
    MdpModel,
    ModelValidationError,
    Trajectory,
    random_mdp,
    sample_step,
    sample_trajectory,
)
from .policy import SoftmaxFamily, SoftmaxPolicy, uniform_policy
from .features import (
    FeatureError,
    FeatureMaps,
    aggregation_features,
    contiguous_groups,
    grouped_action_features,
    indicator_matrix,
    state_action_onehot,
    tabular_features,
)
from .oracle import (
    CriticFixedPoint,
    FeatureDegeneracyError,
    Gtd2FixedPoint,
    IterationLimitError,
    ReducibleMatrixError,
    SingularSystemError,
    SpectralSolution,
    average_cost,
    build_q_matrix,
    critic_fixed_point,
    exact_policy_gradient,
    grad_bellman_solution,
    gtd2_fixed_point,
    gtd2_stability_matrix,
    modified_avg_cost,
    perron_eigenpair,
    risk_sensitive_cost,
    spectral_solution,
    stationary_distribution,
    twisted_kernel,
)
from .schedules import PowerLawSchedule, ThreeTimescale, default_schedules, timescale_ratios
from .metrics import WindowStats, running_risk_cost
from .tabular import (
    TabularCriticState,
    TabularGradState,
    TabularLearner,
    actor_step,
    critic_step,
    grad_critic_step,
)
from .rsacfa import (
    RsacfaLearner,
    RsacfaState,
    initial_critic_weights,
    load_checkpoint,
    save_checkpoint,
)
from .baselines import BaselineLearner, BaselineState
from .gridworld import (
    DIRECTIONS,
    GridConfig,
    GridConfigError,
    action_cost_distribution,
    build_gridworld,
    support_strongly_connected,
)
from .harness import (
    AlignmentError,
    ConfigError,
    ExperimentConfig,
    NumericalBlowupError,
    compare_runs,
    load_config,
    load_metrics,
    load_model_npz,
    oracle_score,
    parse_config_text,
    run_experiment,
    save_model_npz,
)

__version__ = "0.1.0"
