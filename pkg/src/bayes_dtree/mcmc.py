"""Multi-chain Metropolis-Hastings over classification trees."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from ._parallel import ordered_map
from .moves import UNIFORM, MoveRecord, draw_kind, log_q_ratio, propose, selection_distribution, valid_moves
from .rng import Purpose, stream
from .tree import Dataset, Tree, log_joint, populate_counts


@dataclass
class ChainConfig:
    iterations: int = 1000
    chains: int = 10
    a: float = 1.0
    beta: float = 2.0
    max_depth: int = 15
    seed: int = 0
    burn_in_fraction: float = 0.2
    n_jobs: int = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.chains < 1:
            raise ValueError("chains must be >= 1")
        if not 0 <= self.burn_in_fraction < 1:
            raise ValueError("burn_in_fraction must lie in [0, 1)")
        if self.a <= 0 or self.beta < 0:
            raise ValueError("need a > 0 and beta >= 0")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")

    @property
    def burn_in(self) -> int:
        return int(math.floor(self.burn_in_fraction * self.iterations))


def acceptance_log_ratio(
    current: Tree,
    proposed: Tree,
    record: MoveRecord,
    data: Dataset,
    a: float = 1.0,
    beta: float = 2.0,
    *,
    max_depth: int = 15,
    split_prior=None,
    current_log_joint: float | None = None,
    proposed_log_joint: float | None = None,
) -> float:
    """Log MH acceptance probability, ``min(0, log pi(T') - log pi(T) + log q-ratio)``."""
    if split_prior is None:
        split_prior = data.split_prior()
    lq = log_q_ratio(record, current, proposed, max_depth=max_depth, split_prior=split_prior)
    if lq == -math.inf:
        return -math.inf
    if current_log_joint is None:
        current_log_joint = log_joint(current, data, a, beta, split_prior)
    if proposed_log_joint is None:
        proposed_log_joint = log_joint(proposed, data, a, beta, split_prior)
    return min(0.0, proposed_log_joint - current_log_joint + lq)


class Step(NamedTuple):
    tree: Tree
    accepted: bool
    alpha: float
    record: MoveRecord
    log_joint: float


def mh_step(
    current: Tree,
    data: Dataset,
    config: ChainConfig,
    selection_probs,
    rng: np.random.Generator,
    *,
    split_prior=None,
    current_log_joint: float | None = None,
) -> Step:
    if split_prior is None:
        split_prior = data.split_prior()
    if current_log_joint is None:
        current_log_joint = log_joint(current, data, config.a, config.beta, split_prior)
    base = np.asarray(selection_probs, dtype=float)
    probs = selection_distribution(base, valid_moves(current, config.max_depth))
    kind = draw_kind(probs, rng)
    proposed, record = propose(
        current, kind, data, rng,
        max_depth=config.max_depth, split_prior=split_prior, selection_probs=probs, base_probs=base,
    )
    proposed_lj = log_joint(proposed, data, config.a, config.beta, split_prior)
    log_alpha = acceptance_log_ratio(
        current, proposed, record, data, config.a, config.beta,
        max_depth=config.max_depth, split_prior=split_prior,
        current_log_joint=current_log_joint, proposed_log_joint=proposed_lj,
    )
    alpha = math.exp(log_alpha)
    u = rng.random()
    # Same strict comparison as the population sampler's positioning stage.
    if alpha > u:
        return Step(proposed, True, alpha, record, proposed_lj)
    return Step(current, False, alpha, record, current_log_joint)


@dataclass
class ChainTrace:
    """One chain's history. ``samples`` holds the post-burn-in states."""

    samples: list[Tree]
    log_joints: np.ndarray
    accepted: np.ndarray
    kinds: np.ndarray
    final: Tree
    trajectory: list[Tree] | None = None


def run_chain(
    initial: Tree,
    data: Dataset,
    config: ChainConfig,
    rng: np.random.Generator,
    *,
    split_prior=None,
    selection_probs=UNIFORM,
    keep_trajectory: bool = False,
) -> ChainTrace:
    if split_prior is None:
        split_prior = data.split_prior()
    tree = initial if initial.counts is not None else populate_counts(initial, data)
    lj = log_joint(tree, data, config.a, config.beta, split_prior)
    n = config.iterations
    log_joints = np.empty(n)
    accepted = np.zeros(n, dtype=bool)
    kinds = np.empty(n, dtype=np.int8)
    samples: list[Tree] = []
    trajectory = [] if keep_trajectory else None
    for i in range(n):
        step = mh_step(tree, data, config, selection_probs, rng, split_prior=split_prior, current_log_joint=lj)
        tree, lj = step.tree, step.log_joint
        log_joints[i] = lj
        accepted[i] = step.accepted
        kinds[i] = step.record.kind
        if i >= config.burn_in:
            samples.append(tree)
        if keep_trajectory:
            trajectory.append(tree)
    return ChainTrace(samples, log_joints, accepted, kinds, tree, trajectory)


@dataclass
class MCMCResult:
    chains: list[ChainTrace]
    best_log_joint: np.ndarray
    worst_log_joint: np.ndarray
    map_tree: Tree
    map_log_joint: float
    samples: list[Tree] = field(repr=False, default_factory=list)

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean([c.accepted.mean() for c in self.chains]))


def run_chains(
    config: ChainConfig,
    data: Dataset,
    *,
    initial_trees: Sequence[Tree] | None = None,
    split_prior=None,
    keep_trajectory: bool = False,
) -> MCMCResult:
    """Run ``config.chains`` independent chains and pool their post-burn-in samples.

    Chain ``i`` draws from the stream ``(seed, i, MOVES)`` and starts from a
    lone root unless ``initial_trees`` is given.
    """
    if split_prior is None:
        split_prior = data.split_prior()
    if initial_trees is None:
        initial_trees = [Tree.leaf()] * config.chains
    if len(initial_trees) != config.chains:
        raise ValueError("need one initial tree per chain")

    def one(i: int) -> ChainTrace:
        rng = stream(config.seed, i, Purpose.MOVES)
        return run_chain(
            initial_trees[i], data, config, rng, split_prior=split_prior, keep_trajectory=keep_trajectory
        )

    chains = ordered_map(one, range(config.chains), config.n_jobs)
    lj = np.stack([c.log_joints for c in chains])
    samples = [t for c in chains for t in c.samples]
    # MAP over the retained samples; chain order then sample order breaks ties.
    best_lj, best_tree = -math.inf, samples[0]
    for c in chains:
        tail = c.log_joints[config.burn_in:]
        i = int(np.argmax(tail))
        if tail[i] > best_lj:
            best_lj, best_tree = float(tail[i]), c.samples[i]
    return MCMCResult(chains, lj.max(axis=0), lj.min(axis=0), best_tree, best_lj, samples)
