import numpy as np
import pytest

from bayes_dtree.moves import grow, growable_leaves
from bayes_dtree.oracle import EnumerationSpace
from bayes_dtree.tree import Dataset, Tree, populate_counts

# Five class-0 points on the low end of feature 0, three class-1 points above.
HAND_X = np.array(
    [
        [0.1, 1.0],
        [0.2, 0.0],
        [0.3, 1.0],
        [0.4, 0.0],
        [0.5, 1.0],
        [0.6, 0.0],
        [0.7, 1.0],
        [0.8, 0.0],
    ]
)
HAND_Y = np.array([0, 0, 0, 0, 0, 1, 1, 1])

# Two binary features; the label is mostly x0 OR x1 with one flipped point.
BINARY_X = np.array(
    [[0, 0], [0, 1], [1, 0], [1, 1], [0, 0], [1, 1], [1, 0], [0, 1]], dtype=float
)
BINARY_Y = np.array([0, 1, 1, 1, 0, 1, 0, 0])
BINARY_SPACE = EnumerationSpace(((0.5,), (0.5,)), 2)


@pytest.fixture
def hand_data():
    return Dataset.from_arrays(HAND_X, HAND_Y)


@pytest.fixture
def binary_data():
    return Dataset.from_arrays(BINARY_X, BINARY_Y)


def random_tree(data: Dataset, rng: np.random.Generator, max_depth: int = 4, grow_steps: int | None = None) -> Tree:
    """Counted tree built from a few random Grow splices."""
    tree = Tree.leaf()
    steps = rng.integers(0, 8) if grow_steps is None else grow_steps
    prior = data.split_prior()
    for _ in range(steps):
        leaves = growable_leaves(tree, max_depth)
        if not leaves:
            break
        k, c = prior.sample(rng)
        tree = grow(tree, leaves[rng.integers(len(leaves))], k, c)
    return populate_counts(tree, data)


def random_dataset(rng: np.random.Generator, n: int = 30, k: int = 3, c: int = 3) -> Dataset:
    X = rng.normal(size=(n, k))
    y = rng.integers(0, c, size=n)
    y[:c] = np.arange(c)
    return Dataset(X, y, c)


# Acceptance verdicts, echoed as one line each at the end of the session.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
