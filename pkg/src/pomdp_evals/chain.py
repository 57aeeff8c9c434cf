"""Finite Markov chains induced by a POMDP and a finite-memory strategy:
ergodic decomposition, stationary vectors, absorption probabilities, class
payoffs, mixing diagnostics, and exact long-run inferior values."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import InvalidInputError, PomdpEvalError
from .model import Pomdp
from .strategies import Transducer

EDGE_THRESHOLD = 1e-12
TRANSIENT_MASS_TOL = 0.01
CLASS_AVG_TOL = 0.01
MIXING_CAP = 10_000


@dataclass(frozen=True)
class MarkovChain:
    """Row-stochastic chain with a per-state payoff and an initial law."""

    labels: tuple
    transition: np.ndarray   # (U, U)
    payoff: np.ndarray       # (U,)
    initial: np.ndarray      # (U,)

    def __post_init__(self):
        t = np.asarray(self.transition, dtype=float)
        f = np.asarray(self.payoff, dtype=float)
        y = np.asarray(self.initial, dtype=float)
        u = len(self.labels)
        if t.shape != (u, u) or f.shape != (u,) or y.shape != (u,):
            raise InvalidInputError("chain table shapes disagree with the state count")
        bad = np.abs(t.sum(axis=1) - 1.0) > 1e-9
        if bad.any():
            j = int(np.nonzero(bad)[0][0])
            raise InvalidInputError(
                f"chain row {self.labels[j]!r} sums to {t[j].sum():.12f}"
            )
        if np.any(t < 0) or np.any(f < 0) or np.any(f > 1) or np.any(y < 0):
            raise InvalidInputError("chain entries out of range")
        if abs(y.sum() - 1.0) > 1e-9:
            raise InvalidInputError("initial distribution does not sum to 1")
        for arr in (t, f, y):
            arr.setflags(write=False)
        object.__setattr__(self, "transition", t)
        object.__setattr__(self, "payoff", f)
        object.__setattr__(self, "initial", y)

    @property
    def n_states(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class ErgodicDecomposition:
    transient: tuple               # indices of U_0
    classes: tuple                 # tuple of index tuples U_1..U_D
    stationary: tuple              # per-class probability vectors
    class_values: tuple            # per-class stationary average payoffs
    absorption: tuple              # absorption probability per class

    @property
    def n_classes(self) -> int:
        return len(self.classes)


def product_chain(p: Pomdp, t: Transducer, x1: np.ndarray) -> MarkovChain:
    """Markov chain on state x memory pairs under a transducer.

    The action and signal at each step are determined by (state, memory), so
    the chain on the full (state, memory, action, signal) space projects onto
    this quotient without losing the payoff process.
    """
    k, mem = p.n_states, t.n_memory
    n = k * mem
    trans = np.zeros((n, n))
    payoff = np.empty(n)
    labels = []
    for kk in range(k):
        for mm in range(mem):
            u = kk * mem + mm
            i = int(t.act[mm])
            labels.append((p.states[kk], mm))
            payoff[u] = p.reward[kk, i]
            for ll in range(k):
                for s in range(p.n_signals):
                    pr = p.transition[kk, i, ll, s]
                    if pr > 0:
                        trans[u, ll * mem + int(t.update[mm, i, s])] += pr
    initial = np.zeros(n)
    for kk in range(k):
        initial[kk * mem + t.initial] = float(x1[kk])
    return MarkovChain(tuple(labels), trans, payoff, initial)


def _stationary_vector(sub: np.ndarray, label) -> np.ndarray:
    """Solve pi P = pi, pi . 1 = 1 on a closed class by dense LU."""
    n = sub.shape[0]
    a = sub.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise PomdpEvalError(f"singular stationary system for class {label}") from exc
    return pi


def ergodic_decomposition(c: MarkovChain) -> ErgodicDecomposition:
    """Closed strongly connected components, their stationary laws and
    average payoffs, and the absorption probabilities from the initial law."""
    support = sp.csr_matrix(c.transition > EDGE_THRESHOLD)
    n_comp, comp = connected_components(support, directed=True, connection="strong")
    # a component is recurrent iff it is closed: no mass leaves it
    closed = []
    for d in range(n_comp):
        idx = np.nonzero(comp == d)[0]
        outside = c.transition[np.ix_(idx, np.nonzero(comp != d)[0])]
        if outside.size == 0 or outside.sum() <= EDGE_THRESHOLD:
            closed.append(tuple(int(j) for j in idx))
    closed.sort()
    recurrent = np.zeros(c.n_states, dtype=bool)
    for idx in closed:
        recurrent[list(idx)] = True
    transient = tuple(int(j) for j in np.nonzero(~recurrent)[0])

    stationary, values = [], []
    for d, idx in enumerate(closed):
        sub = c.transition[np.ix_(idx, idx)]
        pi = _stationary_vector(sub, d)
        stationary.append(pi)
        values.append(float(pi @ c.payoff[list(idx)]))

    # absorption: h_d(u) = P(absorbed in class d | start u), linear system on
    # the transient part; recurrent states hit their own class with prob 1
    absorption = []
    tr = list(transient)
    if tr:
        q = c.transition[np.ix_(tr, tr)]
        lhs = np.eye(len(tr)) - q
    for idx in closed:
        h = np.zeros(c.n_states)
        h[list(idx)] = 1.0
        if tr:
            rhs = c.transition[np.ix_(tr, list(idx))].sum(axis=1)
            h[tr] = np.linalg.solve(lhs, rhs)
        absorption.append(float(c.initial @ h))
    return ErgodicDecomposition(
        transient=transient,
        classes=tuple(closed),
        stationary=tuple(stationary),
        class_values=tuple(values),
        absorption=tuple(absorption),
    )


def step_distribution(c: MarkovChain, l: int) -> np.ndarray:
    """Law of the chain after l steps from the initial distribution."""
    if l < 0:
        raise InvalidInputError("step count must be >= 0")
    y = c.initial.copy()
    for _ in range(l):
        y = y @ c.transition
    return y


def mixing_threshold(c: MarkovChain, dec: ErgodicDecomposition = None) -> int:
    """Smallest l with transient mass < 0.01 and every reachable class's
    l-step conditional average payoff within 0.01 of its stationary value,
    capped at 10^4."""
    if dec is None:
        dec = ergodic_decomposition(c)
    tr = list(dec.transient)
    y = c.initial.copy()
    for l in range(MIXING_CAP + 1):
        ok = (y[tr].sum() < TRANSIENT_MASS_TOL) if tr else True
        if ok:
            for idx, gamma in zip(dec.classes, dec.class_values):
                mass = y[list(idx)].sum()
                if mass > EDGE_THRESHOLD:
                    avg = float(y[list(idx)] @ c.payoff[list(idx)]) / mass
                    if abs(avg - gamma) > CLASS_AVG_TOL:
                        ok = False
                        break
        if ok:
            return l
        y = y @ c.transition
    return MIXING_CAP


def liminf_value_transducer(p: Pomdp, x1: np.ndarray, t: Transducer) -> float:
    """Exact expected long-run inferior average payoff of a transducer: the
    running average converges to the entered class's stationary payoff, so
    the expectation is the absorption-weighted class payoff."""
    dec = ergodic_decomposition(product_chain(p, t, x1))
    return float(sum(a * g for a, g in zip(dec.absorption, dec.class_values)))
