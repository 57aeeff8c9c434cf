"""Strategy layer: behavior rules, schedules, finite-memory transducers."""
import numpy as np
import pytest

import pomdp_evals as pe
from pomdp_evals.errors import BudgetExceededError, InvalidInputError
from pomdp_evals.model import ObservedHistory
from pomdp_evals.strategies import transducer_count_raw

from conftest import random_pomdp


def test_uniform_strategy_distribution():
    strat = pe.uniform_strategy(4)
    assert np.allclose(strat.action_distribution(ObservedHistory()), 0.25)


def test_behavior_strategy_rejects_invalid_rows():
    strat = pe.BehaviorStrategy(2, lambda h: np.array([0.7, 0.7]))
    with pytest.raises(InvalidInputError):
        strat.action_distribution(ObservedHistory())


def test_random_behavior_strategy_is_seed_deterministic():
    a = pe.RandomBehaviorStrategy(2, seed=5)
    b = pe.RandomBehaviorStrategy(2, seed=5)
    c = pe.RandomBehaviorStrategy(2, seed=6)
    h1 = ObservedHistory((0, 1), (0, 0))
    h2 = ObservedHistory((1, 1), (0, 0))
    d1 = a.action_distribution(h1)
    assert np.allclose(d1, b.action_distribution(h1))
    assert np.isclose(d1.sum(), 1.0) and np.all(d1 >= 0)
    assert not np.allclose(d1, c.action_distribution(h1))
    assert not np.allclose(d1, a.action_distribution(h2))


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------

def test_block_switch_schedule():
    strat = pe.block_switch_strategy(2, first_action=0, second_action=1, switch_after=3)
    acts = [strat.action_at_stage(m) for m in range(1, 7)]
    assert acts == [0, 0, 0, 1, 1, 1]


def test_doubling_schedule_switch_stages():
    strat = pe.doubling_strategy()
    switches = [m for m in range(1, 1000) if strat.action_at_stage(m) == 1]
    assert switches == [3, 20, 533]
    assert strat.action_at_stage(66070) == 1
    assert strat.action_at_stage(66071) == 0


# ---------------------------------------------------------------------------
# Transducers
# ---------------------------------------------------------------------------

def test_always_strategy_is_constant(blind):
    p = blind.pomdp
    t = pe.always_strategy(p.n_actions, p.n_signals, 1)
    for h in (ObservedHistory(), ObservedHistory((0, 1), (0, 0))):
        assert np.array_equal(t.action_distribution(h), [0.0, 1.0])


def test_transducer_memory_follows_update_table():
    # two memory cells flipping on every signal-1 observation
    update = np.zeros((2, 1, 2), dtype=int)
    update[0, 0] = [0, 1]
    update[1, 0] = [1, 0]
    t = pe.Transducer(n_actions=1, n_signals=2, act=np.array([0, 0]),
                      update=update, initial=0)
    assert t.memory_after(ObservedHistory((0, 0), (1, 1))) == 0
    assert t.memory_after(ObservedHistory((0, 0, 0), (1, 0, 0))) == 1


def test_canonical_form_identifies_relabeled_memories():
    update = np.zeros((2, 2, 1), dtype=int)
    update[0, 0, 0] = 1
    update[1, 1, 0] = 0
    update[0, 1, 0] = 0
    update[1, 0, 0] = 1
    a = pe.Transducer(n_actions=2, n_signals=1, act=np.array([0, 1]),
                      update=update, initial=0)
    # apply the memory relabeling sigma = (0 1)
    sigma = np.array([1, 0])
    act_b = np.empty(2, dtype=int)
    update_b = np.empty_like(update)
    for j in range(2):
        act_b[sigma[j]] = a.act[j]
        update_b[sigma[j]] = sigma[a.update[j]]
    b = pe.Transducer(n_actions=2, n_signals=1, act=act_b, update=update_b,
                      initial=int(sigma[a.initial]))
    assert a.canonical_form() == b.canonical_form()


def test_transducer_count_formula_matches_brute_force():
    # memory m, actions n_i, signals n_s: n_i^m action labelings times
    # m^(m*n_i*n_s) update tables
    assert transducer_count_raw(2, 1, 1) == 2
    assert transducer_count_raw(2, 1, 2) == 4 * 2 ** 4
    assert transducer_count_raw(3, 2, 2) == 9 * 2 ** 12


def test_enumerate_transducers_deduplicates(blind):
    p = blind.pomdp
    one = pe.enumerate_transducers(p, max_memory=1)
    assert len(one) == p.n_actions   # memory-1 machines are the constant plays
    two = pe.enumerate_transducers(p, max_memory=2)
    seen = {t.canonical_form() for t in two}
    assert len(seen) == len(two)
    assert all(t.n_memory <= 2 for t in two)
    assert len(two) > len(one)


def test_enumerate_transducers_respects_cap(rng):
    p = random_pomdp(rng, k=2, n_i=3, n_s=3)
    with pytest.raises(BudgetExceededError):
        pe.enumerate_transducers(p, max_memory=4, cap=100)


def test_transducer_dict_round_trip(blind):
    p = blind.pomdp
    for t in pe.enumerate_transducers(p, max_memory=2)[:5]:
        back = pe.transducer_from_dict(pe.transducer_to_dict(t))
        assert back.canonical_form() == t.canonical_form()


# ---------------------------------------------------------------------------
# Stationary strategies
# ---------------------------------------------------------------------------

def test_stationary_lookup_absorbs_float_drift():
    stat = pe.StationaryStrategy(2, [np.array([0.5, 0.5]), np.array([1.0, 0.0])],
                                 [np.array([0.2, 0.8]), np.array([1.0, 0.0])])
    row = stat.at_belief(np.array([0.5 + 1e-12, 0.5 - 1e-12]))
    assert np.allclose(row, [0.2, 0.8])
    with pytest.raises(InvalidInputError):
        stat.at_belief(np.array([0.8, 0.2]))
    with pytest.raises(InvalidInputError):
        stat.action_distribution(ObservedHistory())


def test_belief_tracking_replays_bayes_updates(revealed_matching):
    p, x1 = revealed_matching.pomdp, revealed_matching.initial_belief
    stat = pe.StationaryStrategy(
        2,
        [np.array([0.5, 0.5]), np.array([1.0, 0.0]), np.array([0.0, 1.0])],
        [np.array([0.5, 0.5]), np.array([1.0, 0.0]), np.array([0.0, 1.0])],
    )
    strat = pe.belief_tracking_strategy(p, x1, stat)
    assert np.allclose(strat.action_distribution(ObservedHistory()), [0.5, 0.5])
    # after observing the revealing signal, play the matching action
    assert np.allclose(strat.action_distribution(ObservedHistory((0,), (0,))), [1.0, 0.0])
    assert np.allclose(strat.action_distribution(ObservedHistory((0,), (1,))), [0.0, 1.0])
