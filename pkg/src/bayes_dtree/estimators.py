"""scikit-learn classifiers backed by the two tree samplers."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .mcmc import ChainConfig, run_chains
from .smc_ea import DEFAULT_BRANCH_PROBS, SMCConfig, run_smc_ea
from .tree import Dataset, ensemble_proba, predict_proba_batch


def _seed(random_state) -> int:
    if isinstance(random_state, (int, np.integer)):
        return int(random_state)
    # None or a RandomState: draw a concrete seed for the sampler streams.
    return int(check_random_state(random_state).randint(np.iinfo(np.int32).max))


class _BayesianTreeBase(ClassifierMixin, BaseEstimator):
    def _prepare(self, X, y) -> Dataset:
        X, y = check_X_y(X, y, dtype=float)
        check_classification_targets(y)
        self.classes_, encoded = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("need at least two classes to fit")
        self.n_features_in_ = X.shape[1]
        return Dataset(X, encoded, max(len(self.classes_), 2))

    def _check_X(self, X):
        check_is_fitted(self, "trees_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def predict_proba(self, X):
        """Mean posterior-mean class distribution over the retained trees."""
        X = self._check_X(X)
        return ensemble_proba(self.trees_, X)

    def predict(self, X):
        # argmax keeps the first maximum, i.e. ties go to the lowest class index.
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]

    def predict_map(self, X):
        """Predictions of the single highest-posterior tree."""
        X = self._check_X(X)
        proba = predict_proba_batch(self.map_tree_, X)
        return self.classes_[np.argmax(proba, axis=1)]


class MCMCTreeClassifier(_BayesianTreeBase):
    """Bayesian classification tree sampled with independent Metropolis-Hastings chains.

    Parameters
    ----------
    chains : int
        Number of independent chains, each started from a lone root.
    iterations : int
        MH steps per chain.
    a, beta : float
        Depth prior ``a / (1 + depth) ** beta``.
    max_depth : int
        Grow is disabled on leaves at this depth.
    burn_in_fraction : float
        Leading fraction of every chain discarded before pooling samples.
    random_state : int, RandomState or None
        Seeds every chain's stream; ``None`` gives a fresh seed per fit.
    n_jobs : int
        Chains run on this many threads; results do not depend on it.
    """

    def __init__(self, chains=10, iterations=1000, a=1.0, beta=2.0, max_depth=15,
                 burn_in_fraction=0.2, random_state=0, n_jobs=1):
        self.chains = chains
        self.iterations = iterations
        self.a = a
        self.beta = beta
        self.max_depth = max_depth
        self.burn_in_fraction = burn_in_fraction
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y):
        data = self._prepare(X, y)
        config = ChainConfig(
            iterations=self.iterations, chains=self.chains, a=self.a, beta=self.beta,
            max_depth=self.max_depth, seed=_seed(self.random_state), burn_in_fraction=self.burn_in_fraction,
            n_jobs=self.n_jobs,
        )
        result = run_chains(config, data)
        self.result_ = result
        self.trees_ = result.samples
        self.map_tree_ = result.map_tree
        self.best_log_joint_ = result.best_log_joint
        self.worst_log_joint_ = result.worst_log_joint
        return self


class SMCEATreeClassifier(_BayesianTreeBase):
    """Bayesian classification tree sampled by a pheromone-guided tree population.

    Parameters
    ----------
    particles : int
        Population size, constant over iterations.
    iterations : int
        Positioning stages.
    a, beta, max_depth :
        As in :class:`MCMCTreeClassifier`.
    branch_probs : tuple of 3 floats
        Probabilities of the temporary-pheromone, permanent-pheromone and
        uniform move-selection strategies.
    init_grow_prob : float
        Each initial tree keeps growing with this probability.
    random_state : int, RandomState or None
    n_jobs : int
    """

    def __init__(self, particles=1000, iterations=10, a=1.0, beta=2.0, max_depth=15,
                 branch_probs=DEFAULT_BRANCH_PROBS, init_grow_prob=0.5, random_state=0, n_jobs=1):
        self.particles = particles
        self.iterations = iterations
        self.a = a
        self.beta = beta
        self.max_depth = max_depth
        self.branch_probs = branch_probs
        self.init_grow_prob = init_grow_prob
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y):
        data = self._prepare(X, y)
        config = SMCConfig(
            particles=self.particles, iterations=self.iterations, a=self.a, beta=self.beta,
            max_depth=self.max_depth, seed=_seed(self.random_state), branch_probs=tuple(self.branch_probs),
            init_grow_prob=self.init_grow_prob, n_jobs=self.n_jobs,
        )
        result = run_smc_ea(config, data)
        self.result_ = result
        self.trees_ = result.population.trees
        self.map_tree_ = result.map_tree
        self.best_log_joint_ = result.best_log_joint
        self.worst_log_joint_ = result.worst_log_joint
        self.pheromone_history_ = result.pheromone_history
        return self
