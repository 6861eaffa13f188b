"""Bayesian classification trees sampled by multi-chain MCMC or a pheromone-guided tree population."""

from .data import DatasetError, FoldPlan, kfold, load_csv
from .estimators import MCMCTreeClassifier, SMCEATreeClassifier
from .mcmc import ChainConfig, acceptance_log_ratio, mh_step, run_chains
from .moves import MoveKind, MoveRecord, log_q_ratio, propose, valid_moves
from .smc_ea import (
    PermanentPheromones,
    Population,
    SMCConfig,
    TemporaryPheromones,
    initialize_population,
    positioning_step,
    run_smc_ea,
    select_strategy,
    update_permanent,
)
from .tree import (
    Dataset,
    GridPrior,
    Tree,
    UniformRangePrior,
    log_joint,
    log_likelihood,
    log_param_prior,
    log_tree_prior,
    populate_counts,
    predict_ensemble,
    predict_proba,
    traverse,
)

__all__ = [
    "acceptance_log_ratio",
    "ChainConfig",
    "Dataset",
    "DatasetError",
    "FoldPlan",
    "GridPrior",
    "initialize_population",
    "kfold",
    "load_csv",
    "log_joint",
    "log_likelihood",
    "log_param_prior",
    "log_q_ratio",
    "log_tree_prior",
    "MCMCTreeClassifier",
    "mh_step",
    "MoveKind",
    "MoveRecord",
    "PermanentPheromones",
    "populate_counts",
    "Population",
    "positioning_step",
    "predict_ensemble",
    "predict_proba",
    "propose",
    "run_chains",
    "run_smc_ea",
    "select_strategy",
    "SMCConfig",
    "SMCEATreeClassifier",
    "TemporaryPheromones",
    "traverse",
    "Tree",
    "UniformRangePrior",
    "update_permanent",
    "valid_moves",
]

__version__ = "0.1.0"
