import numpy as np
import pytest

from bayes_dtree.mcmc import ChainConfig, run_chains
from bayes_dtree.moves import UNIFORM, MoveKind
from bayes_dtree.smc_ea import (
    INITIAL,
    PERMANENT,
    TEMPORARY,
    PermanentPheromones,
    Population,
    Proposal,
    SMCConfig,
    TemporaryPheromones,
    initialize_population,
    positioning_step,
    run_smc_ea,
    select_strategy,
    strategy_distribution,
    update_permanent,
)
from bayes_dtree.tree import Tree

G, P, C, S = MoveKind


class FixedRng:
    """Stands in for a Generator when a test needs to pin u2 or u1."""

    def __init__(self, *values, ints=0):
        self.values = list(values)
        self.ints = ints

    def random(self):
        return self.values.pop(0)

    def integers(self, n):
        return self.ints % n


class TestPermanent:
    def test_worked_example(self):
        new = update_permanent(PermanentPheromones(), [G, G, P])
        np.testing.assert_array_equal(new.probs, [0.5625, 0.3125, 0.0625, 0.0625])

    def test_no_effective_moves_is_identity(self):
        perm = PermanentPheromones([0.1, 0.2, 0.3, 0.4])
        assert update_permanent(perm, []) == perm

    def test_cap(self):
        new = update_permanent(PermanentPheromones(), [C] * 10)
        np.testing.assert_array_equal(new.probs, [0.2, 0.2, 0.4, 0.2])

    def test_rejects_non_distribution(self):
        with pytest.raises(ValueError):
            PermanentPheromones([0.5, 0.5, 0.5, 0.0])


class TestStrategy:
    def test_first_iteration_falls_back_to_uniform(self):
        base, branch = strategy_distribution(0, TemporaryPheromones(), PermanentPheromones(), FixedRng(0.1))
        np.testing.assert_array_equal(base, UNIFORM)
        assert branch == INITIAL

    def test_positive_particle_deletes_drawn_move(self):
        temp = TemporaryPheromones()
        temp.deposit(0, C, True)
        for s, kind in ((1, P), (2, P), (3, C)):
            temp.deposit(s, kind, False)
        # drawing P removes both Ps and leaves only Change
        base, branch = strategy_distribution(0, temp, PermanentPheromones(), FixedRng(0.2, ints=0))
        np.testing.assert_array_equal(base, [0, 0, 1, 0])
        assert branch == TEMPORARY
        # drawing C leaves the two Prunes
        base, _ = strategy_distribution(0, temp, PermanentPheromones(), FixedRng(0.2, ints=2))
        np.testing.assert_array_equal(base, [0, 1, 0, 0])

    def test_negative_particle_uses_effective(self):
        temp = TemporaryPheromones()
        for s, kind in ((0, G), (1, G), (2, S)):
            temp.deposit(s, kind, True)
        temp.deposit(3, P, False)
        base, branch = strategy_distribution(3, temp, PermanentPheromones(), FixedRng(0.4))
        np.testing.assert_allclose(base, [2 / 3, 0, 0, 1 / 3])
        assert branch == TEMPORARY

    def test_permanent_branch(self):
        perm = PermanentPheromones([0.4, 0.2, 0.2, 0.2])
        base, branch = strategy_distribution(0, TemporaryPheromones(), perm, FixedRng(0.5))
        np.testing.assert_array_equal(base, perm.probs)
        assert branch == PERMANENT

    def test_uniform_branch(self):
        temp = TemporaryPheromones()
        temp.deposit(0, G, False)
        base, branch = strategy_distribution(0, temp, PermanentPheromones([1, 0, 0, 0]), FixedRng(0.95))
        np.testing.assert_array_equal(base, UNIFORM)
        assert branch == INITIAL

    def test_select_restricts_to_valid(self):
        sel = select_strategy(
            0, TemporaryPheromones(), PermanentPheromones([0, 0, 0, 1]), FixedRng(0.5, 0.3), valid=frozenset({G})
        )
        assert sel.kind == G
        np.testing.assert_array_equal(sel.probs, [1, 0, 0, 0])


class TestPositioning:
    def _proposals(self, log_alphas):
        rec = type("R", (), {"kind": G})()
        return [Proposal(Tree.stump(0, 0.5), rec, -1.0, la, INITIAL) for la in log_alphas]

    def test_partition_and_adoption(self):
        pop = Population([Tree.leaf()] * 3, [-5.0, -5.0, -5.0])
        props = self._proposals([0.0, np.log(0.1), -np.inf])
        rngs = [FixedRng(0.5), FixedRng(0.5), FixedRng(0.0)]
        new, temp, alphas = positioning_step(pop, props, rngs)
        assert temp.positive_exploration == {0}
        assert temp.negative_exploration == {1, 2}
        assert temp.effective_moves == [G] and temp.ineffective_moves == [G, G]
        assert new.trees[0] == Tree.stump(0, 0.5) and new.trees[1] == Tree.leaf()
        np.testing.assert_allclose(alphas, [1.0, 0.1, 0.0])


class TestRun:
    def test_single_particle_single_iteration(self, hand_data):
        res = run_smc_ea(SMCConfig(particles=1, iterations=1), hand_data)
        assert res.accepted.shape == (1, 1) and res.pheromone_history.shape == (2, 4)

    def test_permanent_after_first_iteration(self, hand_data):
        res = run_smc_ea(SMCConfig(particles=20, iterations=1, seed=3), hand_data)
        expected = update_permanent(PermanentPheromones(), list(res.kinds[0][res.accepted[0]]))
        np.testing.assert_array_equal(res.pheromone_history[1], expected.probs)

    def test_pheromones_stay_normalised(self, hand_data):
        res = run_smc_ea(SMCConfig(particles=30, iterations=8, seed=4), hand_data)
        np.testing.assert_allclose(res.pheromone_history.sum(axis=1), 1.0, atol=1e-12)

    def test_first_iteration_never_temporary(self, hand_data):
        res = run_smc_ea(SMCConfig(particles=50, iterations=3, seed=5), hand_data)
        assert not np.any(res.branches[0] == TEMPORARY)
        assert np.any(res.branches[1:] == TEMPORARY)

    def test_reduces_to_mcmc(self, hand_data):
        for seed in range(5):
            smc = run_smc_ea(
                SMCConfig(particles=1, iterations=60, seed=seed, branch_probs=(0, 0, 1)),
                hand_data, keep_trajectory=True,
            )
            chain = run_chains(
                ChainConfig(iterations=60, chains=1, seed=seed, burn_in_fraction=0.0),
                hand_data, initial_trees=[smc.initial_population.trees[0]], keep_trajectory=True,
            )
            assert [t[0] for t in smc.trajectory[1:]] == chain.chains[0].trajectory
            np.testing.assert_array_equal(smc.accepted[:, 0], chain.chains[0].accepted)

    def test_threads_match_sequential(self, hand_data):
        a = run_smc_ea(SMCConfig(particles=40, iterations=5, seed=9), hand_data)
        b = run_smc_ea(SMCConfig(particles=40, iterations=5, seed=9, n_jobs=4), hand_data)
        assert a.population.trees == b.population.trees
        np.testing.assert_array_equal(a.pheromone_history, b.pheromone_history)

    def test_median_best_non_decreasing(self, hand_data):
        curves = np.array([run_smc_ea(SMCConfig(particles=20, iterations=10, seed=s), hand_data).best_log_joint
                           for s in range(20)])
        median = np.median(curves, axis=0)
        assert np.all(np.diff(median) >= 0)

    def test_initial_population_diverse(self, hand_data):
        pop = initialize_population(200, hand_data, seed=0)
        assert len(set(pop.trees)) > 50
        assert any(t.n_nodes == 1 for t in pop.trees)

    def test_bad_config(self):
        with pytest.raises(ValueError):
            SMCConfig(branch_probs=(0.5, 0.5, 0.5))
        with pytest.raises(ValueError):
            SMCConfig(particles=0)
