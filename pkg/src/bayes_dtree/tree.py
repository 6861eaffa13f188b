"""Probabilistic classification trees and their log-posterior.

A tree is stored as two parallel arrays in preorder: ``feature[j]`` is the
split feature of node ``j`` (``-1`` for a leaf) and ``threshold[j]`` its split
value (``nan`` for a leaf). Preorder makes the layout canonical, so two trees
with the same structure and parameters compare equal array-for-array, and the
structural moves reduce to list splices (see :mod:`bayes_dtree.moves`).

Leaves carry class-count sufficient statistics. The per-leaf class
distribution is integrated out under a symmetric Dirichlet prior, so the
sampled state is the structure plus the split parameters only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

LEAF = -1

#: Concentration of the symmetric Dirichlet prior on each leaf's class distribution.
LEAF_CONCENTRATION = 1.0


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix, dense integer labels and per-feature observed ranges."""

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    feature_ranges: np.ndarray = field(default=None)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim != 2:
            raise ValueError("features must be a 2-d array")
        y = np.asarray(self.labels, dtype=np.intp)
        if y.shape != (X.shape[0],):
            raise ValueError("labels must have one entry per row of features")
        n, k = X.shape
        if n < 1 or k < 1:
            raise ValueError("a dataset needs at least one row and one feature")
        if self.class_count < 2:
            raise ValueError("class_count must be at least 2")
        if y.min() < 0 or y.max() >= self.class_count:
            raise ValueError("labels must lie in [0, class_count)")
        ranges = self.feature_ranges
        if ranges is None:
            ranges = np.column_stack([X.min(axis=0), X.max(axis=0)])
        ranges = np.asarray(ranges, dtype=float)
        if ranges.shape != (k, 2) or np.any(ranges[:, 0] > ranges[:, 1]):
            raise ValueError("feature_ranges must be K (min, max) pairs with min <= max")
        X.setflags(write=False)
        y.setflags(write=False)
        ranges.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_ranges", ranges)

    @classmethod
    def from_arrays(cls, X, y, class_count: int | None = None) -> "Dataset":
        y = np.asarray(y, dtype=np.intp)
        if class_count is None:
            class_count = max(int(y.max()) + 1, 2)
        return cls(np.asarray(X, dtype=float), y, class_count)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, rows) -> "Dataset":
        """Rows ``rows`` as a new dataset; feature ranges are recomputed from them."""
        rows = np.asarray(rows)
        return Dataset(self.features[rows], self.labels[rows], self.class_count)

    def split_prior(self) -> "UniformRangePrior":
        return UniformRangePrior(self.feature_ranges)


class UniformRangePrior:
    """Uniform feature choice, then a uniform threshold over the feature's observed range.

    A constant feature has a zero-width range; its threshold is a point mass at
    that value and contributes no density term.
    """

    def __init__(self, feature_ranges):
        self.feature_ranges = np.asarray(feature_ranges, dtype=float)
        self.n_features = len(self.feature_ranges)
        widths = self.feature_ranges[:, 1] - self.feature_ranges[:, 0]
        self._log_density = np.where(widths > 0, -np.log(np.where(widths > 0, widths, 1.0)), 0.0)

    def sample(self, rng: np.random.Generator) -> tuple[int, float]:
        k = int(rng.integers(self.n_features))
        lo, hi = self.feature_ranges[k]
        c = float(lo) if hi <= lo else float(rng.uniform(lo, hi))
        return k, c

    def log_prob(self, k: int, c: float) -> float:
        return -math.log(self.n_features) + float(self._log_density[k])


class GridPrior:
    """Uniform feature choice, then a uniform pick from a finite threshold grid.

    Used to make the tree space finite, e.g. when comparing a sampler against
    exhaustive enumeration.
    """

    def __init__(self, grid: Sequence[Sequence[float]]):
        self.grid = [np.asarray(g, dtype=float) for g in grid]
        if any(len(g) == 0 for g in self.grid):
            raise ValueError("every feature needs at least one grid threshold")
        self.n_features = len(self.grid)

    def sample(self, rng: np.random.Generator) -> tuple[int, float]:
        k = int(rng.integers(self.n_features))
        g = self.grid[k]
        return k, float(g[rng.integers(len(g))])

    def log_prob(self, k: int, c: float) -> float:
        return -math.log(self.n_features) - math.log(len(self.grid[k]))


class Tree:
    """Immutable binary classification tree in preorder layout.

    Parameters
    ----------
    feature : sequence of int
        Split feature per node in preorder, ``-1`` marks a leaf.
    threshold : sequence of float
        Split threshold per node; ignored (stored as ``nan``) for leaves.
    counts : ndarray of shape (n_nodes, n_classes), optional
        Class counts of the training data routed to each leaf.
    """

    __slots__ = (
        "feature", "threshold", "left", "right", "node_depth", "counts",
        "_leaves", "_internal", "_prunable", "_depth", "_hash", "_key",
    )

    def __init__(self, feature, threshold, counts=None, *, _structure=None):
        feature = np.array(feature, dtype=np.intp)
        threshold = np.array(threshold, dtype=float)
        if _structure is None:
            if feature.ndim != 1 or feature.shape != threshold.shape or len(feature) == 0:
                raise ValueError("feature and threshold must be equal-length non-empty vectors")
            threshold[feature == LEAF] = np.nan
            _structure = _link_preorder(feature.tolist())
        left, right, depth, leaves, internal, prunable = _structure
        if counts is not None:
            counts = np.asarray(counts, dtype=np.int64)
            if counts.ndim != 2 or counts.shape[0] != len(feature):
                raise ValueError("counts must have one row per node")
            counts.setflags(write=False)
        for arr in (feature, threshold, left, right, depth):
            arr.setflags(write=False)
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.node_depth = depth
        self.counts = counts
        self._leaves = leaves
        self._internal = internal
        self._prunable = prunable
        self._depth = int(depth.max())
        self._hash = None
        self._key = None

    @classmethod
    def leaf(cls) -> "Tree":
        return cls([LEAF], [np.nan])

    @classmethod
    def stump(cls, k: int, c: float) -> "Tree":
        return cls([k, LEAF, LEAF], [c, np.nan, np.nan])

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        """Longest root-to-leaf path length in edges; a lone root has depth 0."""
        return self._depth

    def is_leaf(self, j: int) -> bool:
        return self.feature[j] == LEAF

    def leaves(self) -> tuple[int, ...]:
        return self._leaves

    def internal_nodes(self) -> tuple[int, ...]:
        return self._internal

    def prunable_nodes(self) -> tuple[int, ...]:
        """Internal nodes whose two children are both leaves."""
        return self._prunable

    def params(self, j: int) -> tuple[int, float] | None:
        if self.feature[j] == LEAF:
            return None
        return int(self.feature[j]), float(self.threshold[j])

    def key(self) -> tuple:
        """Hashable canonical form: the preorder ``(feature, threshold)`` sequence."""
        if self._key is None:
            self._key = tuple(
                (f, None if f == LEAF else t) for f, t in zip(self.feature.tolist(), self.threshold.tolist())
            )
        return self._key

    def same_structure(self, other: "Tree") -> bool:
        return self.key() == other.key()

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return self.same_structure(other)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key())
        return self._hash

    def __repr__(self):
        return f"Tree(n_nodes={self.n_nodes}, depth={self.depth})"

    def with_counts(self, counts) -> "Tree":
        structure = (self.left, self.right, self.node_depth, self._leaves, self._internal, self._prunable)
        return Tree(self.feature, self.threshold, counts, _structure=structure)

    def apply(self, X) -> np.ndarray:
        """Leaf id reached by every row of ``X`` (left iff ``x[k] <= c``)."""
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[0], dtype=np.intp)
        feature, threshold = self.feature.tolist(), self.threshold.tolist()
        left, right = self.left.tolist(), self.right.tolist()
        # Preorder visits every parent before its children, so each internal
        # node can hand its rows on to its children in a single pass.
        rows = {0: np.arange(X.shape[0])}
        for j in self._internal:
            idx = rows.pop(j)
            go_left = X[idx, feature[j]] <= threshold[j]
            rows[left[j]] = idx[go_left]
            rows[right[j]] = idx[~go_left]
        for leaf, idx in rows.items():
            out[idx] = leaf
        return out


def _link_preorder(feature: list[int]):
    """Children, depths and node classes of a preorder feature sequence."""
    n = len(feature)
    left = [LEAF] * n
    right = [LEAF] * n
    depth = [0] * n
    # Each internal node waits on the stack until its left subtree is
    # finished; the next preorder slot after that is its right child.
    stack: list[int] = []
    for j in range(n):
        if j > 0:
            if not stack:
                raise ValueError("preorder sequence has nodes beyond a complete tree")
            parent = stack[-1]
            if left[parent] == LEAF:
                left[parent] = j
            else:
                right[parent] = j
                stack.pop()
            depth[j] = depth[parent] + 1
        if feature[j] != LEAF:
            stack.append(j)
    if stack:
        raise ValueError("preorder sequence ends before every internal node has two children")
    leaves = tuple(j for j in range(n) if feature[j] == LEAF)
    internal = tuple(j for j in range(n) if feature[j] != LEAF)
    prunable = tuple(j for j in internal if feature[left[j]] == LEAF and feature[right[j]] == LEAF)
    return (
        np.array(left, dtype=np.intp),
        np.array(right, dtype=np.intp),
        np.array(depth, dtype=np.intp),
        leaves,
        internal,
        prunable,
    )


def traverse(tree: Tree, x) -> int:
    """Leaf id reached by a single feature vector."""
    j = 0
    feature, threshold = tree.feature, tree.threshold
    while feature[j] != LEAF:
        j = tree.left[j] if x[feature[j]] <= threshold[j] else tree.right[j]
    return int(j)


def populate_counts(tree: Tree, data: Dataset) -> Tree:
    leaf = tree.apply(data.features)
    C = data.class_count
    flat = np.bincount(leaf * C + data.labels, minlength=tree.n_nodes * C)
    return tree.with_counts(flat.reshape(tree.n_nodes, C))


def _require_counts(tree: Tree) -> np.ndarray:
    if tree.counts is None:
        raise ValueError("tree has no leaf counts; call populate_counts first")
    return tree.counts


_LOG_FACTORIAL: list[float] = [0.0]


def _log_factorials(n: int) -> list[float]:
    """``log(k!)`` for ``k = 0..n`` at least; grown on demand and shared."""
    if len(_LOG_FACTORIAL) <= n:
        _LOG_FACTORIAL.extend(math.lgamma(k + 1) for k in range(len(_LOG_FACTORIAL), 2 * n + 2))
    return _LOG_FACTORIAL


def log_likelihood(tree: Tree, concentration: float = LEAF_CONCENTRATION) -> float:
    """Dirichlet-multinomial log marginal likelihood summed over the leaves.

    Per leaf: ``lgamma(C a) - lgamma(n + C a) + sum_c [lgamma(n_c + a) - lgamma(a)]``.
    Empty leaves contribute exactly zero.
    """
    counts = _require_counts(tree)
    C = counts.shape[1]
    rows = counts[list(tree.leaves())].tolist()
    a0 = concentration
    if a0 == 1.0:
        lf = _log_factorials(int(counts.sum()) + C)
        total = 0.0
        for row in rows:
            n = sum(row)
            if n:
                total += lf[C - 1] - lf[n + C - 1] + sum(lf[c] for c in row)
        return total
    total = 0.0
    for row in rows:
        n = sum(row)
        if n:
            total += math.lgamma(C * a0) - math.lgamma(n + C * a0)
            total += sum(math.lgamma(c + a0) - math.lgamma(a0) for c in row)
    return total


def log_tree_prior(tree: Tree, a: float, beta: float) -> float:
    """``log a - beta * log(1 + depth)``."""
    return math.log(a) - beta * math.log1p(tree.depth)


def log_param_prior(tree: Tree, data: Dataset | None = None, split_prior=None) -> float:
    """Summed log prior of every internal node's ``(feature, threshold)``."""
    if split_prior is None:
        if data is None:
            raise ValueError("need either data or a split prior")
        split_prior = data.split_prior()
    return float(
        sum(split_prior.log_prob(int(tree.feature[j]), float(tree.threshold[j])) for j in tree.internal_nodes())
    )


def log_joint(tree: Tree, data: Dataset, a: float = 1.0, beta: float = 2.0, split_prior=None) -> float:
    """Unnormalised log posterior. ``tree`` must carry counts from ``data``."""
    return log_likelihood(tree) + log_param_prior(tree, data, split_prior) + log_tree_prior(tree, a, beta)


def predict_proba(tree: Tree, x) -> np.ndarray:
    """Posterior-mean class distribution at the leaf reached by ``x``."""
    counts = _require_counts(tree)[traverse(tree, x)]
    return (counts + 1.0) / (counts.sum() + counts.shape[0])


def predict_proba_batch(tree: Tree, X) -> np.ndarray:
    counts = _require_counts(tree)
    smoothed = (counts + 1.0) / (counts.sum(axis=1, keepdims=True) + counts.shape[1])
    return smoothed[tree.apply(X)]


def ensemble_proba(trees: Sequence[Tree], X) -> np.ndarray:
    """Mean of the per-tree class distributions, shape ``(n_rows, n_classes)``."""
    if len(trees) == 0:
        raise ValueError("cannot predict with an empty ensemble")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    total = np.zeros((X.shape[0], _require_counts(trees[0]).shape[1]))
    for tree in trees:
        total += predict_proba_batch(tree, X)
    return total / len(trees)


def predict_ensemble(trees: Sequence[Tree], x) -> int:
    """Class with the highest mean probability; ties go to the lowest index."""
    return int(np.argmax(ensemble_proba(trees, x)[0]))
