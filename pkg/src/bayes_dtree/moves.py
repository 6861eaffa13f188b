"""Grow / Prune / Change / Swap proposals and their transition-probability ratios."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .tree import LEAF, Dataset, Tree, populate_counts


class MoveKind(enum.IntEnum):
    GROW = 0
    PRUNE = 1
    CHANGE = 2
    SWAP = 3

    @property
    def letter(self) -> str:
        return self.name[0]


N_MOVES = len(MoveKind)
UNIFORM = np.full(N_MOVES, 1.0 / N_MOVES)


class InvalidMoveError(ValueError):
    """The requested move kind cannot be applied to the tree."""


@dataclass(frozen=True, eq=False)
class MoveRecord:
    """One proposed transition.

    ``selection_probs`` is the distribution the kind was actually drawn from
    (already restricted to the moves valid on the source tree); ``base_probs``
    is the unrestricted 4-vector it came from, used to rebuild the reverse
    selection distribution on the proposed tree.
    """

    kind: MoveKind
    nodes: tuple[int, ...]
    old_params: tuple | None
    new_params: tuple | None
    selection_probs: np.ndarray
    base_probs: np.ndarray

    def __post_init__(self):
        expected = 2 if self.kind == MoveKind.SWAP else 1
        if len(self.nodes) != expected or len(set(self.nodes)) != expected:
            raise ValueError(f"{self.kind.name} records need exactly {expected} distinct node(s)")


def growable_leaves(tree: Tree, max_depth: int) -> tuple[int, ...]:
    if tree.depth < max_depth:
        return tree.leaves()
    depth = tree.node_depth
    return tuple(j for j in tree.leaves() if depth[j] < max_depth)


def prunable_nodes(tree: Tree) -> tuple[int, ...]:
    """Internal nodes whose two children are both leaves."""
    return tree.prunable_nodes()


def valid_moves(tree: Tree, max_depth: int = 15) -> frozenset[MoveKind]:
    n_inner = len(tree.internal_nodes())
    valid = set()
    if len(growable_leaves(tree, max_depth)):
        valid.add(MoveKind.GROW)
    if n_inner >= 1:
        valid.update((MoveKind.PRUNE, MoveKind.CHANGE))
    if n_inner >= 2:
        valid.add(MoveKind.SWAP)
    return frozenset(valid)


def selection_distribution(base, valid) -> np.ndarray:
    """Restrict ``base`` to the ``valid`` kinds and renormalise.

    Falls back to uniform over ``valid`` when ``base`` puts no mass there.
    """
    if not valid:
        raise InvalidMoveError("no valid moves")
    probs = [float(p) if i in valid else 0.0 for i, p in enumerate(base)]
    total = sum(probs)
    if total <= 0:
        probs = [1.0 if i in valid else 0.0 for i in range(N_MOVES)]
        total = float(len(valid))
    return np.array([p / total for p in probs])


def draw_kind(probs, rng: np.random.Generator) -> MoveKind:
    # Inverse CDF on one uniform, so every caller consumes the stream identically.
    probs = [float(p) for p in probs]
    target = rng.random() * sum(probs)
    acc = 0.0
    last = 0
    for i, p in enumerate(probs):
        if p <= 0:
            continue
        acc += p
        last = i
        if target < acc:
            return MoveKind(i)
    return MoveKind(last)


def _splice(tree: Tree, start: int, stop: int, feats, thrs) -> Tree:
    f = list(tree.feature)
    t = list(tree.threshold)
    f[start:stop] = feats
    t[start:stop] = thrs
    return Tree(f, t)


def grow(tree: Tree, leaf: int, k: int, c: float) -> Tree:
    if tree.feature[leaf] != LEAF:
        raise InvalidMoveError(f"node {leaf} is not a leaf")
    return _splice(tree, leaf, leaf + 1, [k, LEAF, LEAF], [c, np.nan, np.nan])


def prune(tree: Tree, node: int) -> Tree:
    if node not in tree.prunable_nodes():
        raise InvalidMoveError(f"node {node} does not have two leaf children")
    # In preorder the two leaf children sit directly after their parent.
    return _splice(tree, node, node + 3, [LEAF], [np.nan])


def change(tree: Tree, node: int, k: int, c: float) -> Tree:
    if tree.feature[node] == LEAF:
        raise InvalidMoveError(f"node {node} is a leaf")
    return _splice(tree, node, node + 1, [k], [c])


def swap(tree: Tree, j1: int, j2: int) -> Tree:
    if j1 == j2 or tree.feature[j1] == LEAF or tree.feature[j2] == LEAF:
        raise InvalidMoveError("swap needs two distinct internal nodes")
    f = list(tree.feature)
    t = list(tree.threshold)
    f[j1], f[j2] = f[j2], f[j1]
    t[j1], t[j2] = t[j2], t[j1]
    return Tree(f, t)


def propose(
    tree: Tree,
    kind: MoveKind,
    data: Dataset,
    rng: np.random.Generator,
    *,
    max_depth: int = 15,
    split_prior=None,
    selection_probs=None,
    base_probs=None,
) -> tuple[Tree, MoveRecord]:
    """Apply one random move of ``kind`` and return the counted new tree with its record."""
    kind = MoveKind(kind)
    valid = valid_moves(tree, max_depth)
    if kind not in valid:
        raise InvalidMoveError(f"{kind.name} is not valid on this tree")
    if split_prior is None:
        split_prior = data.split_prior()
    if base_probs is None:
        base_probs = UNIFORM if selection_probs is None else selection_probs
    base_probs = np.asarray(base_probs, dtype=float)
    if selection_probs is None:
        selection_probs = selection_distribution(base_probs, valid)
    selection_probs = np.asarray(selection_probs, dtype=float)

    if kind == MoveKind.GROW:
        leaves = growable_leaves(tree, max_depth)
        j = leaves[rng.integers(len(leaves))]
        k, c = split_prior.sample(rng)
        new, nodes, old_p, new_p = grow(tree, j, k, c), (j,), None, (k, c)
    elif kind == MoveKind.PRUNE:
        cands = prunable_nodes(tree)
        j = cands[rng.integers(len(cands))]
        new, nodes, old_p, new_p = prune(tree, j), (j,), tree.params(j), None
    elif kind == MoveKind.CHANGE:
        inner = tree.internal_nodes()
        j = inner[rng.integers(len(inner))]
        k, c = split_prior.sample(rng)
        new, nodes, old_p, new_p = change(tree, j, k, c), (j,), tree.params(j), (k, c)
    else:
        inner = tree.internal_nodes()
        a, b = sorted(inner[int(v)] for v in rng.choice(len(inner), size=2, replace=False))
        new, nodes = swap(tree, a, b), (a, b)
        old_p, new_p = (tree.params(a), tree.params(b)), (tree.params(b), tree.params(a))

    record = MoveRecord(kind, nodes, old_p, new_p, selection_probs, base_probs)
    return populate_counts(new, data), record


def _log(p: float) -> float:
    return math.log(p) if p > 0 else -math.inf


def log_q_forward(record: MoveRecord, old_tree: Tree, *, max_depth: int = 15, split_prior) -> float:
    """Log probability of drawing ``record`` from ``old_tree``."""
    kind = record.kind
    lp = _log(record.selection_probs[kind])
    if kind == MoveKind.GROW:
        lp += -math.log(len(growable_leaves(old_tree, max_depth))) + split_prior.log_prob(*record.new_params)
    elif kind == MoveKind.PRUNE:
        lp += -math.log(len(prunable_nodes(old_tree)))
    elif kind == MoveKind.CHANGE:
        lp += -math.log(len(old_tree.internal_nodes())) + split_prior.log_prob(*record.new_params)
    else:
        n = len(old_tree.internal_nodes())
        lp += -math.log(n * (n - 1) / 2)
    return lp


def log_q_reverse(
    record: MoveRecord, new_tree: Tree, reverse_selection_probs, *, max_depth: int = 15, split_prior
) -> float:
    """Log probability of the move that takes ``new_tree`` back to the source tree."""
    kind = record.kind
    rev = np.asarray(reverse_selection_probs, dtype=float)
    if kind == MoveKind.GROW:
        (j,) = record.nodes
        if j not in prunable_nodes(new_tree):
            return -math.inf
        return _log(rev[MoveKind.PRUNE]) - math.log(len(prunable_nodes(new_tree)))
    if kind == MoveKind.PRUNE:
        leaves = growable_leaves(new_tree, max_depth)
        if record.nodes[0] not in leaves:
            return -math.inf
        return (
            _log(rev[MoveKind.GROW])
            - math.log(len(leaves))
            + split_prior.log_prob(*record.old_params)
        )
    if kind == MoveKind.CHANGE:
        return (
            _log(rev[MoveKind.CHANGE])
            - math.log(len(new_tree.internal_nodes()))
            + split_prior.log_prob(*record.old_params)
        )
    n = len(new_tree.internal_nodes())
    return _log(rev[MoveKind.SWAP]) - math.log(n * (n - 1) / 2)


def reverse_selection_for(record: MoveRecord, new_tree: Tree, max_depth: int = 15) -> np.ndarray:
    """Reverse-move selection distribution: the forward base vector restricted to ``new_tree``."""
    return selection_distribution(record.base_probs, valid_moves(new_tree, max_depth))


def reverse_record(record: MoveRecord, new_tree: Tree, max_depth: int = 15) -> MoveRecord:
    """The move that undoes ``record`` when applied to ``new_tree``."""
    opposite = {MoveKind.GROW: MoveKind.PRUNE, MoveKind.PRUNE: MoveKind.GROW}.get(record.kind, record.kind)
    return MoveRecord(
        opposite,
        record.nodes,
        record.new_params,
        record.old_params,
        reverse_selection_for(record, new_tree, max_depth),
        record.base_probs,
    )


def log_q_ratio(
    record: MoveRecord,
    old_tree: Tree,
    new_tree: Tree,
    reverse_selection_probs=None,
    *,
    max_depth: int = 15,
    split_prior,
) -> float:
    """``log q(old | new) - log q(new | old)``; ``-inf`` when the reverse move is impossible."""
    if reverse_selection_probs is None:
        reverse_selection_probs = reverse_selection_for(record, new_tree, max_depth)
    rev = log_q_reverse(record, new_tree, reverse_selection_probs, max_depth=max_depth, split_prior=split_prior)
    if rev == -math.inf:
        return -math.inf
    return rev - log_q_forward(record, old_tree, max_depth=max_depth, split_prior=split_prior)
