"""Shared fixtures and helpers for the test suite."""
import numpy as np
import pytest

import pomdp_evals as pe


def random_pomdp(rng: np.random.Generator, k: int = 3, n_i: int = 2,
                 n_s: int = 2) -> pe.Pomdp:
    """Random valid instance with strictly positive transition cells."""
    trans = rng.random((k, n_i, k, n_s)) + 0.05
    trans /= trans.sum(axis=(2, 3), keepdims=True)
    rew = rng.random((k, n_i))
    return pe.Pomdp(
        states=tuple(f"s{j}" for j in range(k)),
        actions=tuple(f"a{j}" for j in range(n_i)),
        signals=tuple(f"o{j}" for j in range(n_s)),
        transition=trans,
        reward=rew,
    )


def random_belief(rng: np.random.Generator, k: int) -> np.ndarray:
    return pe.make_belief(rng.dirichlet(np.ones(k)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)


@pytest.fixture
def frozen_matching():
    return pe.builtin_scenario("matching-frozen")


@pytest.fixture
def revealed_matching():
    return pe.builtin_scenario("matching-revealed")


@pytest.fixture
def redraw():
    return pe.builtin_scenario("uniform-redraw")


@pytest.fixture
def blind():
    return pe.builtin_scenario("blind-switching")


@pytest.fixture
def blind_lift():
    return pe.builtin_scenario("blind-switching-lift")
