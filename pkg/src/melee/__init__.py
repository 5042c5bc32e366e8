"""Meta-learned exploration for contextual bandits.

Typical use::

    from melee import sample_training_suite, train_melee, run_agent

    tasks = sample_training_suite(10, 500, rng=0)
    result = train_melee(tasks, rng=0)
    episode = run_agent(result.selected, some_dataset, seed=1)
"""
from .core import (
    DataError,
    History,
    Interaction,
    NumericError,
    ParameterError,
    ShapeError,
    StateError,
    SupervisedDataset,
    mixture,
    sample,
)
from .datasets import SyntheticSpec, bandit_stream, gen_synthetic, load_csv, sample_training_suite, write_csv
from .evaluation import RunResult, paired_ttest, progressive_validation, relative_reward_cdf, win_loss_matrix
from .explorers import Cover, EGEpsilonGreedy, EpsilonDecreasing, EpsilonGreedy, LinUCB, TauFirst
from .linear import Calibrator, FeatureScaler, Scorer, fit_calibration, select_hyperparams, sgd_update
from .metalearn import ExplorationPolicy, MeleeConfig, MeleeExplorer, run_agent, train_melee
from .polopt import HypothesisConfig, OnlinePolOpt, PolOptMethod, polopt
from .runner import run_episode

__all__ = [
    "DataError",
    "History",
    "Interaction",
    "NumericError",
    "ParameterError",
    "ShapeError",
    "StateError",
    "SupervisedDataset",
    "mixture",
    "sample",
    "SyntheticSpec",
    "bandit_stream",
    "gen_synthetic",
    "load_csv",
    "sample_training_suite",
    "write_csv",
    "RunResult",
    "paired_ttest",
    "progressive_validation",
    "relative_reward_cdf",
    "win_loss_matrix",
    "Cover",
    "EGEpsilonGreedy",
    "EpsilonDecreasing",
    "EpsilonGreedy",
    "LinUCB",
    "TauFirst",
    "Calibrator",
    "FeatureScaler",
    "Scorer",
    "fit_calibration",
    "select_hyperparams",
    "sgd_update",
    "ExplorationPolicy",
    "MeleeConfig",
    "MeleeExplorer",
    "run_agent",
    "train_melee",
    "HypothesisConfig",
    "OnlinePolOpt",
    "PolOptMethod",
    "polopt",
    "run_episode",
]

__version__ = "0.1.0"
