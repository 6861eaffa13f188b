"""Pheromone-guided population sampler over classification trees.

Each iteration every particle picks a move kind through one of three
strategies (previous-iteration temporary pheromones, permanent pheromones, or
uniform), proposes a move, and adopts it with MH probability. Accepted and
rejected moves are deposited as temporary pheromones for the next iteration;
accepted moves also reinforce the permanent move-probability vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from ._parallel import ordered_map
from .mcmc import acceptance_log_ratio
from .moves import (
    N_MOVES,
    UNIFORM,
    MoveKind,
    MoveRecord,
    draw_kind,
    growable_leaves,
    grow,
    propose,
    selection_distribution,
    valid_moves,
)
from .rng import Purpose, stream
from .tree import Dataset, Tree, log_joint, populate_counts

TEMPORARY, PERMANENT, INITIAL = 0, 1, 2
DEFAULT_BRANCH_PROBS = (0.45, 0.45, 0.10)


@dataclass(frozen=True, eq=False)
class PermanentPheromones:
    """Move-selection probabilities ordered ``[Grow, Prune, Change, Swap]``."""

    probs: np.ndarray = field(default_factory=lambda: UNIFORM.copy())

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.shape != (N_MOVES,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("permanent pheromones must be a distribution over the 4 moves")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __eq__(self, other):
        if not isinstance(other, PermanentPheromones):
            return NotImplemented
        return bool(np.array_equal(self.probs, other.probs))


@dataclass
class TemporaryPheromones:
    positive_exploration: set[int] = field(default_factory=set)
    negative_exploration: set[int] = field(default_factory=set)
    effective_moves: list[MoveKind] = field(default_factory=list)
    ineffective_moves: list[MoveKind] = field(default_factory=list)

    def deposit(self, particle: int, kind: MoveKind, accepted: bool) -> None:
        if accepted:
            self.positive_exploration.add(particle)
            self.effective_moves.append(MoveKind(kind))
        else:
            self.negative_exploration.add(particle)
            self.ineffective_moves.append(MoveKind(kind))

    def clear(self) -> None:
        self.positive_exploration.clear()
        self.negative_exploration.clear()
        self.effective_moves.clear()
        self.ineffective_moves.clear()

    def is_empty(self) -> bool:
        return not (
            self.positive_exploration or self.negative_exploration or self.effective_moves or self.ineffective_moves
        )

    def copy(self) -> "TemporaryPheromones":
        return TemporaryPheromones(
            set(self.positive_exploration),
            set(self.negative_exploration),
            list(self.effective_moves),
            list(self.ineffective_moves),
        )


def update_permanent(
    perm: PermanentPheromones,
    effective_moves: Sequence[MoveKind],
    *,
    cap_threshold: float = 0.8,
    cap_values: tuple[float, float] = (0.4, 0.2),
) -> PermanentPheromones:
    """Add the effective-move counts, renormalise, then apply the anti-dominance cap.

    ``new[m] = (old[m] + count[m]) / (1 + total count)``; if any entry then
    exceeds ``cap_threshold`` it becomes ``cap_values[0]`` and every other entry
    ``cap_values[1]``.
    """
    counts = np.bincount(np.asarray([int(m) for m in effective_moves], dtype=np.intp), minlength=N_MOVES)
    new = (perm.probs + counts) / (1.0 + counts.sum())
    top = int(np.argmax(new))
    if new[top] > cap_threshold:
        new = np.full(N_MOVES, cap_values[1])
        new[top] = cap_values[0]
    return PermanentPheromones(new)


def _multiset_distribution(moves) -> np.ndarray:
    counts = np.bincount(np.asarray([int(m) for m in moves], dtype=np.intp), minlength=N_MOVES)
    return counts / counts.sum()


class Selection(NamedTuple):
    probs: np.ndarray
    kind: MoveKind
    branch: int
    base: np.ndarray


def strategy_distribution(
    particle: int,
    temp: TemporaryPheromones,
    perm: PermanentPheromones,
    rng: np.random.Generator,
    branch_probs=DEFAULT_BRANCH_PROBS,
) -> tuple[np.ndarray, int]:
    """Draw the strategy for one particle and return its unrestricted 4-vector and branch id."""
    u2 = rng.random()
    t_temp, t_perm = branch_probs[0], branch_probs[0] + branch_probs[1]
    if u2 <= t_temp:
        if particle in temp.positive_exploration and temp.ineffective_moves:
            pool = temp.ineffective_moves
            m = pool[int(rng.integers(len(pool)))]
            remaining = [x for x in pool if x != m]
            if remaining:
                return _multiset_distribution(remaining), TEMPORARY
        elif particle in temp.negative_exploration and temp.effective_moves:
            return _multiset_distribution(temp.effective_moves), TEMPORARY
        # Empty or exhausted lists (always the case on the first iteration).
        return UNIFORM.copy(), INITIAL
    if u2 <= t_perm:
        return perm.probs.copy(), PERMANENT
    return UNIFORM.copy(), INITIAL


def select_strategy(
    particle: int,
    temp: TemporaryPheromones,
    perm: PermanentPheromones,
    rng: np.random.Generator,
    *,
    valid=frozenset(MoveKind),
    kind_rng: np.random.Generator | None = None,
    branch_probs=DEFAULT_BRANCH_PROBS,
) -> Selection:
    """Pick the move kind for one particle.

    Strategy draws use ``rng``; the kind itself is drawn from ``kind_rng``
    (defaults to ``rng``) so the move stream can be shared with a plain chain.
    """
    base, branch = strategy_distribution(particle, temp, perm, rng, branch_probs)
    probs = selection_distribution(base, valid)
    kind = draw_kind(probs, rng if kind_rng is None else kind_rng)
    return Selection(probs, kind, branch, base)


@dataclass
class Population:
    trees: list[Tree]
    log_joints: np.ndarray

    def __post_init__(self):
        self.log_joints = np.asarray(self.log_joints, dtype=float)
        if len(self.trees) < 1 or len(self.trees) != len(self.log_joints):
            raise ValueError("a population needs n >= 1 trees, each with a log joint")

    @property
    def size(self) -> int:
        return len(self.trees)

    @property
    def best(self) -> float:
        return float(self.log_joints.max())

    @property
    def worst(self) -> float:
        return float(self.log_joints.min())


@dataclass
class SMCConfig:
    particles: int = 1000
    iterations: int = 10
    a: float = 1.0
    beta: float = 2.0
    max_depth: int = 15
    seed: int = 0
    branch_probs: tuple[float, float, float] = DEFAULT_BRANCH_PROBS
    init_grow_prob: float = 0.5
    cap_threshold: float = 0.8
    cap_values: tuple[float, float] = (0.4, 0.2)
    n_jobs: int = 1

    def __post_init__(self):
        if self.particles < 1 or self.iterations < 1:
            raise ValueError("particles and iterations must be >= 1")
        if self.a <= 0 or self.beta < 0:
            raise ValueError("need a > 0 and beta >= 0")
        bp = tuple(float(b) for b in self.branch_probs)
        if len(bp) != 3 or min(bp) < 0 or abs(sum(bp) - 1.0) > 1e-9:
            raise ValueError("branch_probs must be three probabilities summing to 1")
        self.branch_probs = bp
        if not 0 <= self.init_grow_prob < 1:
            raise ValueError("init_grow_prob must lie in [0, 1)")


def random_initial_tree(data: Dataset, rng: np.random.Generator, *, grow_prob=0.5, max_depth=15, split_prior=None) -> Tree:
    """Lone root plus a geometric number of random Grow moves (P(no growth) = 1 - grow_prob)."""
    if split_prior is None:
        split_prior = data.split_prior()
    tree = Tree.leaf()
    while rng.random() < grow_prob:
        leaves = growable_leaves(tree, max_depth)
        if not len(leaves):
            break
        j = int(leaves[rng.integers(len(leaves))])
        k, c = split_prior.sample(rng)
        tree = grow(tree, j, k, c)
    return populate_counts(tree, data)


def initialize_population(n: int, data: Dataset, seed: int, config: SMCConfig | None = None, *, split_prior=None) -> Population:
    """``n`` independent random trees; particle ``i`` uses stream ``(seed, i, INIT)``."""
    if n < 1:
        raise ValueError("population size must be >= 1")
    config = config or SMCConfig(particles=n)
    if split_prior is None:
        split_prior = data.split_prior()
    trees = [
        random_initial_tree(
            data, stream(seed, i, Purpose.INIT),
            grow_prob=config.init_grow_prob, max_depth=config.max_depth, split_prior=split_prior,
        )
        for i in range(n)
    ]
    lj = [log_joint(t, data, config.a, config.beta, split_prior) for t in trees]
    return Population(trees, np.array(lj))


class Proposal(NamedTuple):
    tree: Tree
    record: MoveRecord
    log_joint: float
    log_alpha: float
    branch: int


def positioning_step(
    pop: Population,
    proposals: Sequence[Proposal],
    rngs: Sequence[np.random.Generator],
) -> tuple[Population, TemporaryPheromones, np.ndarray]:
    """Classify every particle by ``alpha > u1`` and move the accepted ones.

    Returns the new population, this iteration's temporary pheromones and the
    per-particle acceptance probabilities (capped at 1).
    """
    temp = TemporaryPheromones()
    trees = list(pop.trees)
    lj = pop.log_joints.copy()
    alphas = np.empty(pop.size)
    for s, prop in enumerate(proposals):
        alpha = math.exp(prop.log_alpha)
        alphas[s] = alpha
        u1 = rngs[s].random()
        accepted = alpha > u1
        if accepted:
            trees[s], lj[s] = prop.tree, prop.log_joint
        temp.deposit(s, prop.record.kind, accepted)
    return Population(trees, lj), temp, alphas


@dataclass
class SMCResult:
    population: Population
    best_log_joint: np.ndarray
    worst_log_joint: np.ndarray
    pheromone_history: np.ndarray
    accepted: np.ndarray
    branches: np.ndarray
    kinds: np.ndarray
    initial_population: Population
    trajectory: list[list[Tree]] | None = None

    @property
    def map_tree(self) -> Tree:
        return self.population.trees[int(np.argmax(self.population.log_joints))]

    @property
    def acceptance_rate(self) -> float:
        return float(self.accepted.mean())


def run_smc_ea(
    config: SMCConfig,
    data: Dataset,
    *,
    split_prior=None,
    initial_population: Population | None = None,
    keep_trajectory: bool = False,
) -> SMCResult:
    """Evolve the population for ``config.iterations`` positioning stages.

    Particle ``i`` draws strategies from stream ``(seed, i, STRATEGY)`` and
    moves plus acceptance uniforms from ``(seed, i, MOVES)``, the same stream
    a plain MH chain ``i`` would use.
    """
    if split_prior is None:
        split_prior = data.split_prior()
    n = config.particles
    pop = initial_population or initialize_population(n, data, config.seed, config, split_prior=split_prior)
    if pop.size != n:
        raise ValueError("initial population size does not match config.particles")
    initial = pop
    move_rngs = [stream(config.seed, i, Purpose.MOVES) for i in range(n)]
    strategy_rngs = [stream(config.seed, i, Purpose.STRATEGY) for i in range(n)]

    perm = PermanentPheromones()
    prev_temp = TemporaryPheromones()
    T = config.iterations
    best, worst = np.empty(T + 1), np.empty(T + 1)
    best[0], worst[0] = pop.best, pop.worst
    history = np.empty((T + 1, N_MOVES))
    history[0] = perm.probs
    accepted = np.zeros((T, n), dtype=bool)
    branches = np.zeros((T, n), dtype=np.int8)
    kinds = np.zeros((T, n), dtype=np.int8)
    trajectory = [list(pop.trees)] if keep_trajectory else None

    for it in range(T):
        # prev_temp and perm are read-only until the barrier below.
        def propose_one(s: int, pop=pop, perm=perm, prev_temp=prev_temp) -> Proposal:
            tree, lj = pop.trees[s], pop.log_joints[s]
            sel = select_strategy(
                s, prev_temp, perm, strategy_rngs[s],
                valid=valid_moves(tree, config.max_depth), kind_rng=move_rngs[s],
                branch_probs=config.branch_probs,
            )
            new, record = propose(
                tree, sel.kind, data, move_rngs[s],
                max_depth=config.max_depth, split_prior=split_prior,
                selection_probs=sel.probs, base_probs=sel.base,
            )
            new_lj = log_joint(new, data, config.a, config.beta, split_prior)
            log_alpha = acceptance_log_ratio(
                tree, new, record, data, config.a, config.beta,
                max_depth=config.max_depth, split_prior=split_prior,
                current_log_joint=lj, proposed_log_joint=new_lj,
            )
            return Proposal(new, record, new_lj, log_alpha, sel.branch)

        proposals = ordered_map(propose_one, range(n), config.n_jobs)
        pop, temp, _ = positioning_step(pop, proposals, move_rngs)

        perm = update_permanent(
            perm, temp.effective_moves, cap_threshold=config.cap_threshold, cap_values=config.cap_values
        )
        accepted[it] = [s in temp.positive_exploration for s in range(n)]
        branches[it] = [p.branch for p in proposals]
        kinds[it] = [p.record.kind for p in proposals]
        best[it + 1], worst[it + 1] = pop.best, pop.worst
        history[it + 1] = perm.probs
        if keep_trajectory:
            trajectory.append(list(pop.trees))
        # This iteration's deposits steer only the next iteration.
        prev_temp = temp.copy()
        temp.clear()

    return SMCResult(pop, best, worst, history, accepted, branches, kinds, initial, trajectory)
