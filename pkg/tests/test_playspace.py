"""Play enumeration, belief sequences, and seeded simulation."""
import numpy as np
import pytest

import pomdp_evals as pe
from pomdp_evals.errors import BudgetExceededError
from pomdp_evals.model import ObservedHistory
from pomdp_evals.playspace import (batched_belief_payoffs, belief_sequence,
                                   enumerate_plays, observed_prefix_nodes,
                                   plan_shards, shard_seeds, simulate_plays,
                                   MC_CELL_BUDGET)

from conftest import random_belief, random_pomdp


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

def test_enumerated_play_probabilities_sum_to_one(rng):
    for _ in range(5):
        p = random_pomdp(rng, k=2, n_i=2, n_s=2)
        x1 = random_belief(rng, 2)
        plays = enumerate_plays(p, x1, pe.uniform_strategy(2), horizon=4)
        total = sum(wp.probability for wp in plays)
        assert np.isclose(total, 1.0, atol=1e-9)
        for wp in plays:
            assert len(wp.play) == 4
            assert wp.probability > 0


def test_enumeration_respects_node_budget(rng):
    p = random_pomdp(rng, k=3, n_i=2, n_s=2)
    with pytest.raises(BudgetExceededError):
        enumerate_plays(p, pe.uniform_belief(3), pe.uniform_strategy(2),
                        horizon=12, budget=1000)


def test_observed_prefix_mass_is_consistent(redraw):
    p, x1 = redraw.pomdp, redraw.initial_belief
    plays = enumerate_plays(p, x1, pe.uniform_strategy(2), horizon=3)
    mass = observed_prefix_nodes(plays, 3)
    assert np.isclose(mass[(1, (), ())], 1.0)
    # stage masses each sum to 1
    for m in range(1, 4):
        tot = sum(v for (stage, _, _), v in mass.items() if stage == m)
        assert np.isclose(tot, 1.0, atol=1e-9)


# ---------------------------------------------------------------------------
# Belief sequences
# ---------------------------------------------------------------------------

def test_belief_sequence_matches_iterated_bayes_updates(rng):
    p = random_pomdp(rng, k=3, n_i=2, n_s=2)
    x1 = random_belief(rng, 3)
    actions = [0, 1, 0, 1]
    signals = [1, 0, 0, 1]
    seq = belief_sequence(p, x1, actions, signals)
    x = x1
    for m in range(4):
        assert np.allclose(seq[m], x, atol=1e-12)
        x = pe.bayes_update(p, x, actions[m], signals[m])


def test_batched_belief_payoffs_match_scalar_path(rng):
    p = random_pomdp(rng, k=3, n_i=2, n_s=2)
    x1 = random_belief(rng, 3)
    st, ac, sg = simulate_plays(p, x1, pe.uniform_strategy(2), 6, 20,
                                np.random.default_rng(1))
    batch = batched_belief_payoffs(p, x1, ac, sg)
    for j in range(20):
        seq = belief_sequence(p, x1, ac[j], sg[j])
        manual = [pe.stage_payoff(p, seq[m], int(ac[j, m])) for m in range(6)]
        assert np.allclose(batch[j], manual, atol=1e-10)


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def test_simulation_is_seed_deterministic(redraw):
    p, x1 = redraw.pomdp, redraw.initial_belief
    t = pe.always_strategy(p.n_actions, p.n_signals, 0)
    a = simulate_plays(p, x1, t, 30, 50, np.random.default_rng(9))
    b = simulate_plays(p, x1, t, 30, 50, np.random.default_rng(9))
    for u, v in zip(a, b):
        assert np.array_equal(u, v)


def test_transducer_simulation_on_deterministic_chain(blind):
    # playing T forever in the switching chain freezes the state
    p = blind.pomdp
    t = pe.always_strategy(p.n_actions, p.n_signals, 0)
    st, ac, sg = simulate_plays(p, pe.dirac_belief(2, 1), t, 20, 8,
                                np.random.default_rng(0))
    assert np.all(st == 1) and np.all(ac == 0) and np.all(sg == 0)


def test_schedule_simulation_follows_switching_dynamics(blind):
    p = blind.pomdp
    sched = pe.block_switch_strategy(2, 0, 1, switch_after=3)
    st, ac, sg = simulate_plays(p, pe.dirac_belief(2, 0), sched, 6, 4,
                                np.random.default_rng(0))
    # hold in state 0 for 3 stages, then swap every stage
    assert np.array_equal(st[0], [0, 0, 0, 0, 1, 0])
    assert np.array_equal(ac[0], [0, 0, 0, 1, 1, 1])


def test_generic_and_batched_paths_agree_on_deterministic_chain(blind):
    p = blind.pomdp
    sched = pe.block_switch_strategy(2, 0, 1, switch_after=2)
    wrapped = pe.BehaviorStrategy(
        2, lambda h: np.eye(2)[sched.action_at_stage(len(h) + 1)])
    a = simulate_plays(p, pe.dirac_belief(2, 1), sched, 8, 3,
                       np.random.default_rng(4))
    b = simulate_plays(p, pe.dirac_belief(2, 1), wrapped, 8, 3,
                       np.random.default_rng(4))
    for u, v in zip(a, b):
        assert np.array_equal(u, v)


def test_simulated_state_frequencies_match_the_law(redraw):
    p, x1 = redraw.pomdp, redraw.initial_belief
    t = pe.always_strategy(p.n_actions, p.n_signals, 0)
    st, _, _ = simulate_plays(p, x1, t, 100, 400, np.random.default_rng(11))
    freq = (st == 0).mean()
    se = 0.5 / np.sqrt(st.size)
    assert abs(freq - 0.5) <= 3 * se


# ---------------------------------------------------------------------------
# Sharding
# ---------------------------------------------------------------------------

def test_shard_seeds_are_reproducible_and_distinct():
    a = shard_seeds(3, 4)
    b = shard_seeds(3, 4)
    draws_a = [g.random() for g in a]
    draws_b = [g.random() for g in b]
    assert draws_a == draws_b
    assert len(set(draws_a)) == 4


def test_plan_shards_limits_cells_per_shard():
    assert plan_shards(100, 10, 4) == 4
    big = plan_shards(1_000_000, 100, 4)
    assert -(-1_000_000 // big) * 100 <= MC_CELL_BUDGET
    assert plan_shards(2, 10, 8) == 2   # never more shards than samples
