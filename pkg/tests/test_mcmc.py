import math

import numpy as np
import pytest
from conftest import random_dataset, random_tree

from bayes_dtree.mcmc import ChainConfig, acceptance_log_ratio, mh_step, run_chain, run_chains
from bayes_dtree.moves import UNIFORM, MoveKind, MoveRecord, selection_distribution, valid_moves, propose
from bayes_dtree.tree import Tree, log_joint, populate_counts


def grow_record(tree, k, c):
    return MoveRecord(MoveKind.GROW, (0,), None, (k, c), selection_distribution(UNIFORM, valid_moves(tree)), UNIFORM)


class TestAcceptance:
    def test_root_to_perfect_stump(self, hand_data):
        # joint ratio 3.75, q-ratio (1/3) / (1/1.4): log 1.75 > 0, so capped at 0
        root = populate_counts(Tree.leaf(), hand_data)
        stump = populate_counts(Tree.stump(0, 0.55), hand_data)
        rec = grow_record(root, 0, 0.55)
        d = log_joint(stump, hand_data) - log_joint(root, hand_data)
        assert d == pytest.approx(math.log(3.75), abs=1e-12)
        assert acceptance_log_ratio(root, stump, rec, hand_data) == 0.0

    def test_worse_split_below_one(self, hand_data):
        # leaves [2,0],[3,3]: likelihood 1/3 * 3!3!/7! ; ratio vs root = 504/(3*140) = 1.2
        root = populate_counts(Tree.leaf(), hand_data)
        bad = populate_counts(Tree.stump(0, 0.25), hand_data)
        rec = grow_record(root, 0, 0.25)
        expected = math.log(1.2 * (1 / 2 / 0.7) / 4) + math.log(1.4 / 3)
        assert acceptance_log_ratio(root, bad, rec, hand_data) == pytest.approx(expected, abs=1e-12)

    def test_a_invariance(self):
        rng = np.random.default_rng(0)
        data = random_dataset(rng)
        for _ in range(200):
            t = random_tree(data, rng)
            kind = MoveKind(int(rng.choice(sorted(valid_moves(t)))))
            new, rec = propose(t, kind, data, rng)
            vals = [acceptance_log_ratio(t, new, rec, data, a, 2.0) for a in (0.2, 1.0, 9.0)]
            assert vals[0] == pytest.approx(vals[1], abs=1e-9)
            assert vals[2] == pytest.approx(vals[1], abs=1e-9)


class TestStep:
    def test_rejected_step_keeps_tree(self, hand_data):
        cfg = ChainConfig(iterations=1, chains=1)
        rng = np.random.default_rng(3)
        tree = populate_counts(Tree.stump(0, 0.55), hand_data)
        lj = log_joint(tree, hand_data)
        for _ in range(200):
            step = mh_step(tree, hand_data, cfg, UNIFORM, rng, current_log_joint=lj)
            if not step.accepted:
                assert step.tree is tree and step.log_joint == lj
            else:
                assert 0 < step.alpha <= 1

    def test_single_chain_single_iteration(self, hand_data):
        res = run_chains(ChainConfig(iterations=1, chains=1, burn_in_fraction=0.0), hand_data)
        assert len(res.chains) == 1 and len(res.samples) == 1
        assert res.chains[0].kinds[0] == MoveKind.GROW


class TestChains:
    def test_deterministic(self, hand_data):
        cfg = ChainConfig(iterations=150, chains=3, seed=11)
        a, b = run_chains(cfg, hand_data), run_chains(cfg, hand_data)
        np.testing.assert_array_equal(a.best_log_joint, b.best_log_joint)
        assert a.samples == b.samples

    def test_threads_match_sequential(self, hand_data):
        seq = run_chains(ChainConfig(iterations=100, chains=4, seed=2), hand_data)
        par = run_chains(ChainConfig(iterations=100, chains=4, seed=2, n_jobs=4), hand_data)
        assert seq.samples == par.samples

    def test_burn_in_discarded(self, hand_data):
        res = run_chains(ChainConfig(iterations=50, chains=2, burn_in_fraction=0.2), hand_data)
        assert all(len(c.samples) == 40 for c in res.chains)
        assert len(res.samples) == 80

    def test_best_dominates_worst(self, hand_data):
        res = run_chains(ChainConfig(iterations=80, chains=5), hand_data)
        assert np.all(res.best_log_joint >= res.worst_log_joint)
        assert res.map_log_joint == pytest.approx(log_joint(res.map_tree, hand_data))

    def test_finds_perfect_split(self, hand_data):
        res = run_chains(ChainConfig(iterations=300, chains=4, seed=1), hand_data)
        pred = [int(np.argmax((res.map_tree.counts[res.map_tree.apply(x[None])[0]] + 1))) for x in hand_data.features]
        assert pred == hand_data.labels.tolist()

    def test_trajectory_length(self, hand_data):
        rng = np.random.default_rng(0)
        trace = run_chain(Tree.leaf(), hand_data, ChainConfig(iterations=20, chains=1), rng, keep_trajectory=True)
        assert len(trace.trajectory) == 20 and trace.trajectory[-1] == trace.final

    def test_bad_config(self):
        with pytest.raises(ValueError):
            ChainConfig(iterations=0)
        with pytest.raises(ValueError):
            ChainConfig(burn_in_fraction=1.0)
