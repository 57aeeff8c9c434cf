"""Finite POMDPs: the model tuple, beliefs, Bayes updates, stage payoffs and
the known-payoff state lift.

A POMDP is the tuple (states, actions, signals, transition, reward).  The
transition table maps a (state, action) pair to a joint distribution over
(next state, signal); rewards live in [0, 1].  Beliefs are plain numpy
probability vectors over the state set.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError, ScenarioValidationError

ROW_SUM_TOL = 1e-9
SIGNAL_PROB_FLOOR = 1e-12
BELIEF_DECIMALS = 12


# ---------------------------------------------------------------------------
# Beliefs
# ---------------------------------------------------------------------------

def make_belief(weights: Sequence[float]) -> np.ndarray:
    """Validate and return a belief vector (entries in [0,1], summing to 1)."""
    x = np.asarray(weights, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise InvalidInputError("belief must be a non-empty 1-d vector")
    if np.any(x < -ROW_SUM_TOL) or np.any(x > 1 + ROW_SUM_TOL):
        raise InvalidInputError("belief entries must lie in [0, 1]")
    if abs(float(x.sum()) - 1.0) > ROW_SUM_TOL:
        raise InvalidInputError(
            f"belief entries sum to {float(x.sum()):.12g}, expected 1"
        )
    return x


def dirac_belief(n_states: int, k: int) -> np.ndarray:
    x = np.zeros(n_states)
    x[k] = 1.0
    return x


def uniform_belief(n_states: int) -> np.ndarray:
    return np.full(n_states, 1.0 / n_states)


def canonical_belief(x: np.ndarray) -> np.ndarray:
    """Round to 1e-12 so identical histories hash identically."""
    return np.round(np.asarray(x, dtype=float), BELIEF_DECIMALS) + 0.0


def belief_key(x: np.ndarray) -> bytes:
    return canonical_belief(x).tobytes()


# ---------------------------------------------------------------------------
# Model types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Pomdp:
    """Finite POMDP tuple.

    transition has shape (K, I, K, S): transition[k, i, l, s] is the joint
    probability of moving to state l while emitting signal s.  reward has
    shape (K, I) with entries in [0, 1].
    """

    states: tuple
    actions: tuple
    signals: tuple
    transition: np.ndarray
    reward: np.ndarray

    def __post_init__(self):
        if not self.states or not self.actions or not self.signals:
            raise InvalidInputError("state, action and signal sets must be non-empty")
        trans = np.ascontiguousarray(np.asarray(self.transition, dtype=float))
        rew = np.ascontiguousarray(np.asarray(self.reward, dtype=float))
        k, i, s = len(self.states), len(self.actions), len(self.signals)
        if trans.shape != (k, i, k, s):
            raise InvalidInputError(
                f"transition shape {trans.shape} does not match (K,I,K,S)={(k, i, k, s)}"
            )
        if rew.shape != (k, i):
            raise InvalidInputError(
                f"reward shape {rew.shape} does not match (K,I)={(k, i)}"
            )
        if np.any(trans < 0):
            raise ScenarioValidationError("transition table has negative entries")
        sums = trans.reshape(k, i, -1).sum(axis=2)
        bad = np.argwhere(np.abs(sums - 1.0) > ROW_SUM_TOL)
        if bad.size:
            bk, bi = bad[0]
            raise ScenarioValidationError(
                f"transition row (state={self.states[bk]}, action={self.actions[bi]}) "
                f"sums to {sums[bk, bi]:.12g} (deviation {abs(sums[bk, bi] - 1.0):.3e})"
            )
        if np.any(rew < -ROW_SUM_TOL) or np.any(rew > 1 + ROW_SUM_TOL):
            bk, bi = np.argwhere((rew < 0) | (rew > 1))[0]
            raise ScenarioValidationError(
                f"reward (state={self.states[bk]}, action={self.actions[bi]}) "
                f"= {rew[bk, bi]:.12g} lies outside [0, 1]"
            )
        trans.flags.writeable = False
        rew.flags.writeable = False
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(self, "signals", tuple(self.signals))
        object.__setattr__(self, "transition", trans)
        object.__setattr__(self, "reward", rew)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def n_signals(self) -> int:
        return len(self.signals)

    def state_index(self, name) -> int:
        if name not in self.states:
            raise InvalidInputError(f"unknown state {name!r}")
        return self.states.index(name)

    def action_index(self, name) -> int:
        if name not in self.actions:
            raise InvalidInputError(f"unknown action {name!r}")
        return self.actions.index(name)


@dataclass(frozen=True)
class ObservedHistory:
    """Sequence of (action, signal) index pairs known to the decision-maker.

    A history of length m-1 is the information available at stage m.
    """

    actions: tuple = ()
    signals: tuple = ()

    def __post_init__(self):
        if len(self.actions) != len(self.signals):
            raise InvalidInputError("observed history needs equal action/signal lengths")

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def pairs(self) -> tuple:
        return tuple(zip(self.actions, self.signals))

    def extended(self, action: int, signal: int) -> "ObservedHistory":
        return ObservedHistory(self.actions + (action,), self.signals + (signal,))


@dataclass(frozen=True)
class Play:
    """A truncated play: state, action and signal index sequences of equal length."""

    states: np.ndarray
    actions: np.ndarray
    signals: np.ndarray

    def __post_init__(self):
        st = np.asarray(self.states, dtype=np.int64)
        ac = np.asarray(self.actions, dtype=np.int64)
        si = np.asarray(self.signals, dtype=np.int64)
        if not (st.shape == ac.shape == si.shape) or st.ndim != 1:
            raise InvalidInputError("play sequences must be 1-d and equally long")
        object.__setattr__(self, "states", st)
        object.__setattr__(self, "actions", ac)
        object.__setattr__(self, "signals", si)

    def __len__(self) -> int:
        return len(self.states)

    def observed_prefix(self, m: int) -> ObservedHistory:
        """Observed history available at stage m (the first m-1 pairs)."""
        return ObservedHistory(
            tuple(int(a) for a in self.actions[: m - 1]),
            tuple(int(s) for s in self.signals[: m - 1]),
        )


# ---------------------------------------------------------------------------
# Belief arithmetic
# ---------------------------------------------------------------------------

def _check_dims(p: Pomdp, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (p.n_states,):
        raise InvalidInputError(
            f"belief has dimension {x.shape}, POMDP has {p.n_states} states"
        )
    return x


def belief_transition(p: Pomdp, x: np.ndarray, i: int):
    """One-step belief dynamics under action i.

    Returns a list of (signal, probability, next_belief).  Signals with
    probability below 1e-12 are omitted; each next belief is the Bayes
    posterior given that signal.
    """
    x = _check_dims(p, x)
    joint = np.einsum("k,kls->ls", x, p.transition[:, i, :, :])
    sig_prob = joint.sum(axis=0)
    out = []
    for s in range(p.n_signals):
        ps = float(sig_prob[s])
        if ps < SIGNAL_PROB_FLOOR:
            continue
        out.append((s, ps, joint[:, s] / ps))
    return out


def bayes_update(p: Pomdp, x: np.ndarray, i: int, s: int,
                 fallback_state: int = 0) -> np.ndarray:
    """Posterior after playing i and observing s.

    Off-support signals fall back to the Dirac belief at `fallback_state`
    (first state in the declared order by default); this path only occurs in
    simulations that can visit zero-probability histories.
    """
    x = _check_dims(p, x)
    joint = x @ p.transition[:, i, :, s]
    tot = float(joint.sum())
    if tot < SIGNAL_PROB_FLOOR:
        return dirac_belief(p.n_states, fallback_state)
    return joint / tot


def signal_distribution(p: Pomdp, x: np.ndarray, i: int) -> np.ndarray:
    x = _check_dims(p, x)
    return np.einsum("k,kls->s", x, p.transition[:, i, :, :])


def stage_payoff(p: Pomdp, x: np.ndarray, i: int) -> float:
    """Expected stage payoff sum_k x(k) r(k, i); affine and 1-Lipschitz in x."""
    x = _check_dims(p, x)
    return float(x @ p.reward[:, i])


# ---------------------------------------------------------------------------
# Known payoffs
# ---------------------------------------------------------------------------

def known_payoff_lift(p: Pomdp) -> Pomdp:
    """Lift states to (state, previous stage's reward value).

    The lifted state set is K x {distinct reward values}; the lifted reward
    depends only on the second component, which records the reward generated
    one stage earlier.  The signal alphabet is unchanged.
    """
    values = sorted({round(float(v), 12) for v in p.reward.ravel()})
    n_v = len(values)
    v_index = {v: j for j, v in enumerate(values)}
    k, n_i, n_s = p.n_states, p.n_actions, p.n_signals
    n = k * n_v
    states = tuple(f"{st}~{v:g}" for st in p.states for v in values)
    trans = np.zeros((n, n_i, n, n_s))
    rew = np.zeros((n, n_i))
    for ki in range(k):
        for vi in range(n_v):
            src = ki * n_v + vi
            rew[src, :] = values[vi]
            for i in range(n_i):
                nxt_v = v_index[round(float(p.reward[ki, i]), 12)]
                for li in range(k):
                    dst = li * n_v + nxt_v
                    trans[src, i, dst, :] += p.transition[ki, i, li, :]
    return Pomdp(states, p.actions, p.signals, trans, rew)


def lift_belief(p: Pomdp, lifted: Pomdp, x: np.ndarray) -> np.ndarray:
    """Embed a belief of the base POMDP into the lift (second component pinned
    to the smallest reward value, which carries no stage-1 information)."""
    x = _check_dims(p, x)
    n_v = lifted.n_states // p.n_states
    out = np.zeros(lifted.n_states)
    for ki in range(p.n_states):
        out[ki * n_v] = x[ki]
    return out


def known_payoff_partition(p: Pomdp):
    """Finest partition of the states compatible with the known-payoff signal
    condition, or None if no compatible partition makes rewards measurable.

    Condition: successors reachable under a common signal must share a
    partition element, and states sharing an element must share the reward
    function.
    """
    parent = list(range(p.n_states))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for s in range(p.n_signals):
        reachable = np.argwhere(p.transition[:, :, :, s].sum(axis=(0, 1)) > SIGNAL_PROB_FLOOR)
        flat = [int(l) for l in reachable.ravel()]
        for other in flat[1:]:
            union(flat[0], other)
    groups = {}
    for k in range(p.n_states):
        groups.setdefault(find(k), []).append(k)
    partition = [tuple(g) for g in groups.values()]
    for g in partition:
        for i in range(p.n_actions):
            vals = {round(float(p.reward[k, i]), 12) for k in g}
            if len(vals) > 1:
                return None
    return partition


def has_known_payoffs(p: Pomdp) -> bool:
    return known_payoff_partition(p) is not None


# ---------------------------------------------------------------------------
# Scenario JSON
# ---------------------------------------------------------------------------

@dataclass
class Scenario:
    """A POMDP plus its initial belief and optional named strategies/evaluations."""

    pomdp: Pomdp
    initial_belief: np.ndarray
    strategies: dict = field(default_factory=dict)
    evaluations: dict = field(default_factory=dict)


def pomdp_from_tables(states, actions, signals, transition: dict, reward: dict) -> Pomdp:
    """Build a Pomdp from the sparse JSON tables.

    transition maps "state,action" -> {"state,signal": prob}; reward maps
    "state,action" -> value.
    """
    states, actions, signals = list(states), list(actions), list(signals)
    k, n_i, n_s = len(states), len(actions), len(signals)
    if k == 0 or n_i == 0 or n_s == 0:
        raise ScenarioValidationError("states, actions and signals must be non-empty")
    s_idx = {str(v): j for j, v in enumerate(states)}
    a_idx = {str(v): j for j, v in enumerate(actions)}
    g_idx = {str(v): j for j, v in enumerate(signals)}
    trans = np.zeros((k, n_i, k, n_s))
    rew = np.zeros((k, n_i))

    def split(key, what):
        parts = str(key).split(",")
        if len(parts) != 2:
            raise ScenarioValidationError(f"malformed {what} key {key!r}")
        return parts[0].strip(), parts[1].strip()

    for key, row in transition.items():
        st, ac = split(key, "transition")
        if st not in s_idx or ac not in a_idx:
            raise ScenarioValidationError(f"transition row {key!r} names unknown state/action")
        for dest_key, prob in row.items():
            dst, sig = split(dest_key, "transition entry")
            if dst not in s_idx or sig not in g_idx:
                raise ScenarioValidationError(
                    f"transition row {key!r} entry {dest_key!r} names unknown state/signal"
                )
            trans[s_idx[st], a_idx[ac], s_idx[dst], g_idx[sig]] = float(prob)
    for key, val in reward.items():
        st, ac = split(key, "reward")
        if st not in s_idx or ac not in a_idx:
            raise ScenarioValidationError(f"reward row {key!r} names unknown state/action")
        rew[s_idx[st], a_idx[ac]] = float(val)
    return Pomdp(tuple(states), tuple(actions), tuple(signals), trans, rew)


def load_scenario(source) -> Scenario:
    """Load and validate a scenario from a dict, JSON string, or file path."""
    if isinstance(source, dict):
        doc = source
    else:
        text = Path(source).read_text() if Path(str(source)).exists() else str(source)
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioValidationError(f"scenario is not valid JSON: {exc}") from exc
    for key in ("states", "actions", "signals", "transition", "reward", "initial_belief"):
        if key not in doc:
            raise ScenarioValidationError(f"scenario is missing the {key!r} field")
    pomdp = pomdp_from_tables(
        doc["states"], doc["actions"], doc["signals"], doc["transition"], doc["reward"]
    )
    try:
        x1 = make_belief(doc["initial_belief"])
    except InvalidInputError as exc:
        raise ScenarioValidationError(f"initial_belief: {exc}") from exc
    if x1.shape != (pomdp.n_states,):
        raise ScenarioValidationError(
            f"initial_belief has {x1.size} entries, scenario has {pomdp.n_states} states"
        )
    return Scenario(
        pomdp=pomdp,
        initial_belief=x1,
        strategies=dict(doc.get("strategies", {})),
        evaluations=dict(doc.get("evaluations", {})),
    )
