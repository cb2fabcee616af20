"""Learners for reward models, cost-sensitive policies and the ε-greedy target."""

from .dlm import dlm_restarts, dlm_train
from .egreedy import EpsilonGreedyPolicy, EpsilonGreedyState, epsilon_greedy_policy
from .filter_tree import (
    DecisionStump,
    DecisionStumpLearner,
    FilterTree,
    filter_tree_train,
)
from .imputation import (
    CostMatrixExample,
    full_feedback_examples,
    impute_costs,
    impute_log,
)
from .linear import (
    LinearArgmaxPolicy,
    LinearModel,
    LogisticOutcomeModel,
    PerActionRewardModel,
    fit_logistic_heads,
    fit_full_information_model,
    fit_reward_model_per_action,
    logistic_fit,
    logistic_loss,
    ridge_fit,
)

__all__ = [
    "CostMatrixExample",
    "DecisionStump",
    "DecisionStumpLearner",
    "EpsilonGreedyPolicy",
    "EpsilonGreedyState",
    "FilterTree",
    "LinearArgmaxPolicy",
    "LinearModel",
    "LogisticOutcomeModel",
    "PerActionRewardModel",
    "dlm_restarts",
    "dlm_train",
    "epsilon_greedy_policy",
    "filter_tree_train",
    "fit_logistic_heads",
    "fit_full_information_model",
    "fit_reward_model_per_action",
    "full_feedback_examples",
    "impute_costs",
    "impute_log",
    "logistic_fit",
    "logistic_loss",
    "ridge_fit",
]
