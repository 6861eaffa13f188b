"""Brute-force posterior over a tiny discretised tree space.

Deliberately independent of :mod:`bayes_dtree.tree`'s scoring code: the
likelihood routes each datum with a plain loop and evaluates the
Dirichlet-multinomial factors with ``math.lgamma``. Only the ``Tree`` type is
shared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .tree import LEAF, Tree

MAX_DEPTH = 2
MAX_FEATURES = 2
MAX_GRID = 3
MAX_TREES = 1000


class OracleSpaceError(ValueError):
    """The requested space is too large to enumerate."""


@dataclass(frozen=True)
class EnumerationSpace:
    grid: tuple[tuple[float, ...], ...]
    max_depth: int

    def __post_init__(self):
        grid = tuple(tuple(float(c) for c in g) for g in self.grid)
        object.__setattr__(self, "grid", grid)
        if not 0 <= self.max_depth <= MAX_DEPTH:
            raise OracleSpaceError(f"max_depth must be in [0, {MAX_DEPTH}]")
        if not 1 <= len(grid) <= MAX_FEATURES:
            raise OracleSpaceError(f"between 1 and {MAX_FEATURES} features supported")
        if any(not 1 <= len(g) <= MAX_GRID for g in grid):
            raise OracleSpaceError(f"each feature needs 1 to {MAX_GRID} grid thresholds")

    @property
    def splits(self) -> list[tuple[int, float]]:
        return [(k, c) for k, g in enumerate(self.grid) for c in g]


def _preorders(splits, depth_left: int):
    """Every preorder (feature, threshold) sequence of a tree with depth <= depth_left."""
    yield [(LEAF, math.nan)]
    if depth_left == 0:
        return
    subtrees = list(_preorders(splits, depth_left - 1))
    for split in splits:
        for left in subtrees:
            for right in subtrees:
                yield [split] + left + right


def enumerate_trees(space: EnumerationSpace) -> list[Tree]:
    s = len(space.splits)
    # Count before building: t(d) = 1 + s * t(d-1)^2.
    n = 1
    for _ in range(space.max_depth):
        n = 1 + s * n * n
    if n > MAX_TREES:
        raise OracleSpaceError(f"space holds {n} trees, more than {MAX_TREES}")
    out = []
    for seq in _preorders(space.splits, space.max_depth):
        f, t = zip(*seq)
        out.append(Tree(list(f), list(t)))
    return out


def _route(tree: Tree, x) -> int:
    node = 0
    while tree.feature[node] != LEAF:
        # Left child is next in preorder; the right one follows the left subtree.
        if x[tree.feature[node]] <= tree.threshold[node]:
            node = node + 1
        else:
            node = _skip_subtree(tree, node + 1)
    return node


def _skip_subtree(tree: Tree, start: int) -> int:
    pending = 1
    j = start
    while pending:
        pending += 1 if tree.feature[j] != LEAF else -1
        j += 1
    return j


def _depth(tree: Tree) -> int:
    best = 0
    stack = [(0, 0)]
    while stack:
        node, d = stack.pop()
        if tree.feature[node] == LEAF:
            best = max(best, d)
        else:
            stack.append((node + 1, d + 1))
            stack.append((_skip_subtree(tree, node + 1), d + 1))
    return best


def oracle_log_joint(tree: Tree, features, labels, n_classes: int, space: EnumerationSpace, a: float, beta: float) -> float:
    """Log joint with per-datum routing, Dirichlet(1) leaves and the grid split prior."""
    leaf_counts: dict[int, list[int]] = {}
    for x, y in zip(features, labels):
        leaf = _route(tree, x)
        leaf_counts.setdefault(leaf, [0] * n_classes)[int(y)] += 1
    loglik = 0.0
    for counts in leaf_counts.values():
        # Beta/Dirichlet(1,...,1) marginal: (C-1)! prod(n_c!) / (n + C - 1)!
        loglik += math.lgamma(n_classes) - math.lgamma(sum(counts) + n_classes)
        loglik += sum(math.lgamma(c + 1) for c in counts)
    log_param = 0.0
    n_feat = len(space.grid)
    for f in tree.feature:
        if f != LEAF:
            log_param -= math.log(n_feat) + math.log(len(space.grid[f]))
    return loglik + log_param + math.log(a) - beta * math.log(1 + _depth(tree))


def enumerate_posterior(
    space: EnumerationSpace, data, a: float = 1.0, beta: float = 2.0
) -> list[tuple[Tree, float]]:
    """Exact normalised posterior over every tree in ``space``."""
    trees = enumerate_trees(space)
    X = [list(map(float, row)) for row in data.features]
    y = [int(v) for v in data.labels]
    scores = [oracle_log_joint(t, X, y, data.class_count, space, a, beta) for t in trees]
    top = max(scores)
    weights = [math.exp(s - top) for s in scores]
    z = math.fsum(weights)
    return [(t, w / z) for t, w in zip(trees, weights)]


def tv_distance(empirical: Mapping, exact: Mapping) -> float:
    """Half the L1 distance; keys are canonical tree keys (``Tree.key()``).

    Keys missing from ``empirical`` count as zero mass; keys in ``empirical``
    that ``exact`` does not know about are an error.
    """
    unknown = set(empirical) - set(exact)
    if unknown:
        raise KeyError(f"{len(unknown)} empirical keys are not in the exact distribution")
    total = math.fsum(empirical.values())
    if total <= 0:
        raise ValueError("empirical distribution has no mass")
    return 0.5 * math.fsum(abs(empirical.get(k, 0.0) / total - p) for k, p in exact.items())


def empirical_distribution(trees: Sequence[Tree]) -> dict:
    freq: dict = {}
    for t in trees:
        k = t.key()
        freq[k] = freq.get(k, 0) + 1
    n = len(trees)
    return {k: v / n for k, v in freq.items()}
