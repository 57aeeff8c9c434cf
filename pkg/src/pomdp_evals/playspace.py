"""Play-space machinery shared by the payoff, irregularity and measure code:
exhaustive tree enumeration, seeded Monte Carlo simulation, and belief
sequences along observed histories."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError, InvalidInputError
from .model import ObservedHistory, Play, Pomdp, bayes_update
from .strategies import ScheduleStrategy, Strategy, Transducer

DEFAULT_NODE_BUDGET = 2_000_000
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class WeightedPlay:
    probability: float
    play: Play


def enumerate_plays(p: Pomdp, x1: np.ndarray, strat: Strategy, horizon: int,
                    budget: int = DEFAULT_NODE_BUDGET) -> list:
    """All horizon-truncated plays with positive probability under (x1, strat).

    Raises BudgetExceededError once the total number of enumerated stage
    cells passes `budget`.
    """
    if horizon < 1:
        raise InvalidInputError("horizon must be >= 1")
    plays = []
    cells = 0
    # stack entries: (prob, state, stage, actions, signals, states)
    stack = [
        (float(x1[k]), k, 1, (), (), (k,))
        for k in range(p.n_states - 1, -1, -1)
        if x1[k] > PROB_FLOOR
    ]
    while stack:
        prob, k, stage, actions, signals, states = stack.pop()
        dist = strat.action_distribution(ObservedHistory(actions, signals))
        for i in range(p.n_actions - 1, -1, -1):
            pi = float(dist[i])
            if pi <= PROB_FLOOR:
                continue
            joint = p.transition[k, i]  # (K, S)
            for l in range(p.n_states - 1, -1, -1):
                for s in range(p.n_signals - 1, -1, -1):
                    pls = float(joint[l, s])
                    if pls <= PROB_FLOOR:
                        continue
                    cells += 1
                    if cells > budget:
                        raise BudgetExceededError(
                            f"play enumeration exceeded the node budget ({budget})"
                        )
                    q = prob * pi * pls
                    new_actions = actions + (i,)
                    new_signals = signals + (s,)
                    if stage == horizon:
                        plays.append(
                            WeightedPlay(q, Play(np.array(states),
                                                 np.array(new_actions),
                                                 np.array(new_signals)))
                        )
                    else:
                        stack.append(
                            (q, l, stage + 1, new_actions, new_signals, states + (l,))
                        )
    return plays


def observed_prefix_nodes(plays: list, horizon: int) -> dict:
    """Group play mass by observed prefix: maps (stage, actions, signals) of
    length stage-1 to total probability."""
    mass = {}
    for wp in plays:
        a = tuple(int(v) for v in wp.play.actions)
        s = tuple(int(v) for v in wp.play.signals)
        for m in range(1, horizon + 1):
            key = (m, a[: m - 1], s[: m - 1])
            mass[key] = mass.get(key, 0.0) + wp.probability
    return mass


# ---------------------------------------------------------------------------
# Beliefs along histories
# ---------------------------------------------------------------------------

def belief_sequence(p: Pomdp, x1: np.ndarray, actions, signals) -> np.ndarray:
    """Beliefs x_1 .. x_n held before each stage, from the observed pairs.

    Entry m-1 is the belief at stage m (computed from the first m-1 pairs).
    Off-support observations fall back to the Dirac at the first state.
    """
    n = len(actions)
    out = np.empty((n, p.n_states))
    x = np.asarray(x1, dtype=float)
    for m in range(n):
        out[m] = x
        x = bayes_update(p, x, int(actions[m]), int(signals[m]))
    return out


def batched_belief_payoffs(p: Pomdp, x1: np.ndarray, actions: np.ndarray,
                           signals: np.ndarray) -> np.ndarray:
    """Per-stage belief payoffs g(x_m, i_m) for a batch of observed plays.

    actions/signals have shape (n_plays, horizon); returns the same shape.
    """
    n, horizon = actions.shape
    bel = np.tile(np.asarray(x1, dtype=float), (n, 1))
    out = np.empty((n, horizon))
    k0 = np.zeros(p.n_states)
    k0[0] = 1.0
    for t in range(horizon):
        i = actions[:, t]
        s = signals[:, t]
        out[:, t] = np.einsum("nk,kn->n", bel, p.reward[:, i])
        w = p.transition[:, i, :, s]          # (n, K, K')
        joint = np.einsum("nk,nkl->nl", bel, w)
        tot = joint.sum(axis=1)
        off = tot < PROB_FLOOR
        tot[off] = 1.0
        bel = joint / tot[:, None]
        if off.any():
            bel[off] = k0
    return out


# ---------------------------------------------------------------------------
# Monte Carlo simulation
# ---------------------------------------------------------------------------

def supports_batch(strat: Strategy) -> bool:
    return isinstance(strat, (Transducer, ScheduleStrategy))


def simulate_plays(p: Pomdp, x1: np.ndarray, strat: Strategy, horizon: int,
                   samples: int, rng: np.random.Generator):
    """Sample plays; returns (states, actions, signals) as (samples, horizon)
    integer matrices.  Transducers and open-loop schedules run vectorized;
    other strategies fall back to a per-sample loop."""
    if supports_batch(strat):
        return _simulate_batched(p, x1, strat, horizon, samples, rng)
    return _simulate_generic(p, x1, strat, horizon, samples, rng)


def _simulate_transducer(p: Pomdp, x1: np.ndarray, strat: Transducer, horizon: int,
                         samples: int, rng: np.random.Generator):
    """Vectorized run of a finite-memory strategy: the pair (state, memory)
    is a Markov chain, so each stage is one grouped inverse-CDF draw plus a
    table lookup for the next pair."""
    k, n_s, m = p.n_states, p.n_signals, strat.n_memory
    # per combined index c = state*m + memory: cumulative law over (l, s)
    # codes, the played action, and the next combined index per code
    cum = np.empty((k * m, k * n_s))
    act_of = np.empty(k * m, dtype=np.int32)
    nxt_of = np.empty((k * m, k * n_s), dtype=np.int32)
    for kk in range(k):
        for mm in range(m):
            c = kk * m + mm
            i = int(strat.act[mm])
            act_of[c] = i
            cum[c] = np.cumsum(p.transition[kk, i].ravel())
            for code in range(k * n_s):
                nxt_of[c, code] = (code // n_s) * m + strat.update[mm, i, code % n_s]
    states = np.empty((samples, horizon), dtype=np.int32)
    actions = np.empty((samples, horizon), dtype=np.int32)
    signals = np.empty((samples, horizon), dtype=np.int32)
    start = rng.choice(k, size=samples, p=np.asarray(x1) / np.asarray(x1).sum())
    cur = (start * m + strat.initial).astype(np.int64)
    # row c of cum shifted into (c, c+1] keeps the flattened table sorted, so
    # one global searchsorted of cur + u resolves every sample's (l, s) code
    width = k * n_s
    flat = (cum + np.arange(k * m)[:, None]).ravel()
    for t in range(horizon):
        y = cur + rng.random(samples)
        code = np.searchsorted(flat, y, side="right") - cur * width
        np.clip(code, 0, width - 1, out=code)
        states[:, t] = cur // m
        actions[:, t] = act_of[cur]
        signals[:, t] = code % n_s
        cur = nxt_of[cur, code]
    return states, actions, signals


def _simulate_batched(p: Pomdp, x1: np.ndarray, strat, horizon: int,
                      samples: int, rng: np.random.Generator):
    if isinstance(strat, Transducer):
        return _simulate_transducer(p, x1, strat, horizon, samples, rng)
    k, n_i, n_s = p.n_states, p.n_actions, p.n_signals
    width = k * n_s
    cum = np.cumsum(p.transition.reshape(k, n_i, width), axis=2)
    # per action: states' rows shifted into (k, k+1] for one global searchsorted
    flat = np.stack([
        (cum[:, i, :] + np.arange(k)[:, None]).ravel() for i in range(n_i)
    ])
    states = np.empty((samples, horizon), dtype=np.int32)
    actions = np.empty((samples, horizon), dtype=np.int32)
    signals = np.empty((samples, horizon), dtype=np.int32)
    cur = rng.choice(k, size=samples, p=np.asarray(x1) / np.asarray(x1).sum())
    for t in range(horizon):
        i = strat.action_at_stage(t + 1)
        y = cur + rng.random(samples)
        code = np.searchsorted(flat[i], y, side="right") - cur * width
        np.clip(code, 0, width - 1, out=code)
        states[:, t] = cur
        actions[:, t] = i
        signals[:, t] = code % n_s
        cur = code // n_s
    return states, actions, signals


def _simulate_generic(p: Pomdp, x1: np.ndarray, strat: Strategy, horizon: int,
                      samples: int, rng: np.random.Generator):
    k, n_s = p.n_states, p.n_signals
    cum = np.cumsum(p.transition.reshape(k, p.n_actions, k * n_s), axis=2)
    states = np.empty((samples, horizon), dtype=np.int64)
    actions = np.empty((samples, horizon), dtype=np.int64)
    signals = np.empty((samples, horizon), dtype=np.int64)
    x1 = np.asarray(x1) / np.asarray(x1).sum()
    x1_cum = np.cumsum(x1)
    for j in range(samples):
        cur = min(int(np.searchsorted(x1_cum, rng.random(), side="right")), k - 1)
        acts: tuple = ()
        sigs: tuple = ()
        for t in range(horizon):
            dist = strat.action_distribution(ObservedHistory(acts, sigs))
            i = min(int(np.searchsorted(np.cumsum(dist), rng.random(), side="right")),
                    p.n_actions - 1)
            code = min(int(np.searchsorted(cum[cur, i], rng.random(), side="right")),
                       k * n_s - 1)
            states[j, t] = cur
            actions[j, t] = i
            signals[j, t] = code % n_s
            acts += (i,)
            sigs += (code % n_s,)
            cur = code // n_s
    return states, actions, signals


def shard_seeds(seed: int, shards: int) -> list:
    """Deterministic per-shard generators for parallel-style Monte Carlo."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(shards)]


MC_CELL_BUDGET = 40_000_000


def plan_shards(samples: int, horizon: int, shards: int) -> int:
    """Shard count keeping each shard's (samples x horizon) matrices within
    the cell budget; never fewer than the requested shard count."""
    need = -(-samples * horizon // MC_CELL_BUDGET)
    return max(1, min(samples, max(shards, need)))
