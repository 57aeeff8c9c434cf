"""Finite chains induced by finite-memory strategies: ergodic structure."""
import numpy as np
import pytest

import pomdp_evals as pe
from pomdp_evals.chain import (MarkovChain, ergodic_decomposition,
                               liminf_value_transducer, mixing_threshold,
                               product_chain, step_distribution)
from pomdp_evals.errors import InvalidInputError
from pomdp_evals.playspace import simulate_plays

from conftest import random_pomdp


def _chain(labels, T, payoff, init):
    return MarkovChain(tuple(labels), np.asarray(T, dtype=float),
                       np.asarray(payoff, dtype=float),
                       np.asarray(init, dtype=float))


def test_chain_validation_names_the_offending_row():
    with pytest.raises(InvalidInputError) as err:
        _chain(("u", "v"), [[0.5, 0.4], [0, 1]], [0, 1], [1, 0])
    assert "u" in str(err.value)


def test_product_chain_of_constant_strategy_is_the_state_chain(blind):
    p, x1 = blind.pomdp, blind.initial_belief
    t = pe.always_strategy(p.n_actions, p.n_signals, 0)
    c = product_chain(p, t, x1)
    assert c.n_states == 2
    assert np.allclose(c.transition, np.eye(2))
    assert np.allclose(c.payoff, [0.0, 1.0])
    assert np.allclose(c.initial, [0.5, 0.5])


def test_product_chain_size_scales_with_memory(blind):
    p, x1 = blind.pomdp, blind.initial_belief
    two = [t for t in pe.enumerate_transducers(p, max_memory=2) if t.n_memory == 2]
    c = product_chain(p, two[0], x1)
    assert c.n_states == 4


def test_decomposition_of_identity_chain():
    dec = ergodic_decomposition(_chain(("u", "v"), np.eye(2), [0.3, 0.9], [0.5, 0.5]))
    assert dec.transient == ()
    assert dec.classes == ((0,), (1,))
    assert np.allclose(dec.absorption, [0.5, 0.5])
    assert np.allclose(dec.class_values, [0.3, 0.9])


def test_decomposition_of_hand_solved_absorbing_chain():
    T = [[0.0, 0.3, 0.7], [0, 1, 0], [0, 0, 1]]
    dec = ergodic_decomposition(_chain(("a", "b", "c"), T, [0, 1, 0.5], [1, 0, 0]))
    assert dec.transient == (0,)
    assert dec.classes == ((1,), (2,))
    assert np.allclose(dec.absorption, [0.3, 0.7])
    assert np.allclose(dec.class_values, [1.0, 0.5])


def test_stationary_vectors_are_fixed_points(rng):
    for _ in range(10):
        n = int(rng.integers(2, 6))
        T = rng.random((n, n)) + 0.01
        T /= T.sum(axis=1, keepdims=True)
        c = _chain([f"u{j}" for j in range(n)], T, rng.random(n),
                   rng.dirichlet(np.ones(n)))
        dec = ergodic_decomposition(c)
        assert dec.transient == () and len(dec.classes) == 1
        pi = dec.stationary[0]
        assert np.allclose(pi @ T, pi, atol=1e-10)
        assert np.isclose(pi.sum(), 1.0, atol=1e-10)
        assert np.isclose(dec.class_values[0], pi @ c.payoff, atol=1e-10)


def test_absorption_masses_sum_to_one(rng):
    for _ in range(10):
        p = random_pomdp(rng, k=3, n_i=2, n_s=2)
        ts = pe.enumerate_transducers(p, max_memory=2)
        c = product_chain(p, ts[int(rng.integers(len(ts)))], pe.uniform_belief(3))
        dec = ergodic_decomposition(c)
        assert np.isclose(sum(dec.absorption), 1.0, atol=1e-9)
        for cls, pi in zip(dec.classes, dec.stationary):
            assert np.isclose(pi.sum(), 1.0, atol=1e-9)
            assert len(pi) == len(cls)


def test_step_distribution_matches_matrix_power():
    T = np.array([[0.9, 0.1], [0.4, 0.6]])
    c = _chain(("u", "v"), T, [0, 1], [1, 0])
    assert np.allclose(step_distribution(c, 0), [1, 0])
    assert np.allclose(step_distribution(c, 5), np.array([1.0, 0]) @
                       np.linalg.matrix_power(T, 5))


def test_mixing_threshold_examples(redraw):
    # the redraw chain mixes immediately
    t = pe.always_strategy(2, 1, 0)
    c = product_chain(redraw.pomdp, t, redraw.initial_belief)
    assert mixing_threshold(c) == 0
    # a slowly mixing two-state chain needs several steps
    eps = 0.02
    T = np.array([[1 - eps, eps], [eps, 1 - eps]])
    c2 = _chain(("u", "v"), T, [0.0, 1.0], [1.0, 0.0])
    l = mixing_threshold(c2)
    assert l > 0
    # at the reported step the distribution's payoff is near the long-run one
    assert abs(step_distribution(c2, l) @ c2.payoff - 0.5) <= 0.011
    assert abs(step_distribution(c2, l - 1) @ c2.payoff - 0.5) > 0.01


def test_transient_mass_decays(rng):
    T = np.array([[0.5, 0.25, 0.25], [0, 1, 0], [0, 0, 1]])
    c = _chain(("a", "b", "c"), T, [0, 1, 0], [1, 0, 0])
    masses = [step_distribution(c, j)[0] for j in range(8)]
    assert all(m2 < m1 or m1 == 0 for m1, m2 in zip(masses, masses[1:]))


def test_long_run_value_weights_classes_by_absorption(blind):
    p = blind.pomdp
    t = pe.always_strategy(p.n_actions, p.n_signals, 0)
    # from the uniform start, half the mass freezes on payoff 1
    assert np.isclose(liminf_value_transducer(p, blind.initial_belief, t), 0.5)
    assert np.isclose(liminf_value_transducer(p, pe.dirac_belief(2, 1), t), 1.0)


def test_empirical_occupation_matches_stationary_law(redraw):
    p, x1 = redraw.pomdp, redraw.initial_belief
    t = pe.always_strategy(p.n_actions, p.n_signals, 0)
    c = product_chain(p, t, x1)
    pi = ergodic_decomposition(c).stationary[0]
    st, _, _ = simulate_plays(p, x1, t, 500, 200, np.random.default_rng(5))
    freq = (st == 0).mean()
    se = 0.5 / np.sqrt(st.size)
    assert abs(freq - pi[0]) <= 3 * se
