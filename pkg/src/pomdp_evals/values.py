"""Values and payoffs: belief-space backward induction for finite-horizon and
discounted values, asymptotic-value estimates, exact and Monte Carlo weighted
payoffs, chain-based payoffs for deterministic weights, and finite-horizon
proxies for long-run superior/inferior average payoffs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import MarkovChain
from .errors import BudgetExceededError, InvalidInputError
from .evaluations import EvalContext, Evaluation
from .model import Pomdp, belief_key, belief_transition, stage_payoff
from .playspace import (DEFAULT_NODE_BUDGET, batched_belief_payoffs,
                        enumerate_plays, plan_shards, shard_seeds,
                        simulate_plays)
from .strategies import Strategy

METHODS = ("exact_dp", "truncated_dp", "monte_carlo", "ergodic_exact")


@dataclass(frozen=True)
class ValueReport:
    value: float
    method: str
    error_bound: float
    horizon_or_samples: int

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInputError(f"unknown method {self.method!r}")
        if not np.isfinite(self.value):
            raise InvalidInputError("value must be finite")


# ---------------------------------------------------------------------------
# Dynamic programming on beliefs
# ---------------------------------------------------------------------------

class _BeliefDp:
    """Backward induction over the reachable belief tree with memoization on
    (rounded belief, remaining horizon).  `discount` scales the continuation
    term; 1.0 gives plain finite-horizon sums."""

    def __init__(self, p: Pomdp, discount: float = 1.0,
                 budget: int = DEFAULT_NODE_BUDGET):
        self.p = p
        self.discount = discount
        self.budget = budget
        self.memo: dict = {}

    def total(self, x: np.ndarray, t: int) -> float:
        if t == 0:
            return 0.0
        key = (belief_key(x), t)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        if len(self.memo) >= self.budget:
            raise BudgetExceededError(
                f"belief DP exceeded the node budget ({self.budget})"
            )
        best = -np.inf
        for i in range(self.p.n_actions):
            cont = sum(
                prob * self.total(nxt, t - 1)
                for _, prob, nxt in belief_transition(self.p, x, i)
            )
            total = stage_payoff(self.p, x, i) + self.discount * cont
            if total > best:  # exact ties keep the earlier action
                best = total
        self.memo[key] = best
        return best


def value_n(p: Pomdp, x1: np.ndarray, n: int,
            budget: int = DEFAULT_NODE_BUDGET) -> ValueReport:
    """Exact normalized n-stage value by backward induction on beliefs."""
    if n < 1:
        raise InvalidInputError("horizon must be >= 1")
    dp = _BeliefDp(p, budget=budget)
    return ValueReport(value=dp.total(np.asarray(x1, dtype=float), n) / n,
                       method="exact_dp", error_bound=0.0, horizon_or_samples=n)


def value_discounted(p: Pomdp, x1: np.ndarray, lam: float, tol: float = 1e-6,
                     budget: int = DEFAULT_NODE_BUDGET) -> ValueReport:
    """Discounted value within tol, truncating once the geometric tail is
    below tol."""
    if not 0.0 < lam < 1.0:
        raise InvalidInputError("discount weight must lie in (0, 1)")
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    horizon = int(np.ceil(np.log(tol) / np.log(1.0 - lam)))
    horizon = max(horizon, 1)
    if horizon > 100_000:
        raise BudgetExceededError(
            f"discounted DP needs horizon {horizon}, beyond the supported range"
        )
    dp = _BeliefDp(p, discount=1.0 - lam, budget=budget)
    value = lam * dp.total(np.asarray(x1, dtype=float), horizon)
    return ValueReport(value=value, method="truncated_dp",
                       error_bound=(1.0 - lam) ** horizon,
                       horizon_or_samples=horizon)


def value_n_sequence(p: Pomdp, x1: np.ndarray, n_max: int,
                     budget: int = DEFAULT_NODE_BUDGET) -> np.ndarray:
    """v_1..v_{n_max} at x1 with a shared memo table."""
    if n_max < 1:
        raise InvalidInputError("n_max must be >= 1")
    dp = _BeliefDp(p, budget=budget)
    x = np.asarray(x1, dtype=float)
    return np.array([dp.total(x, n) / n for n in range(1, n_max + 1)])


def asymptotic_value_estimate(p: Pomdp, x1: np.ndarray, n_max: int,
                              budget: int = DEFAULT_NODE_BUDGET) -> ValueReport:
    """v_{n_max} reported as an estimate of the long-horizon limit, with the
    last-quartile spread of v_n plus 1/n_max as the error bound."""
    if n_max < 2:
        raise InvalidInputError("n_max must be >= 2")
    vs = value_n_sequence(p, x1, n_max, budget=budget)
    tail = vs[(3 * n_max) // 4 - 1:]
    spread = float(tail.max() - tail.min())
    return ValueReport(value=float(vs[-1]), method="truncated_dp",
                       error_bound=spread + 1.0 / n_max,
                       horizon_or_samples=n_max)


# ---------------------------------------------------------------------------
# Weighted payoffs
# ---------------------------------------------------------------------------

def _tail_weight(e: Evaluation, horizon: int, truncated_mass: float) -> float:
    """Bound on the expected evaluation weight past the horizon."""
    if e.support_horizon is not None and e.support_horizon <= horizon:
        return 0.0
    if e.mass_tail is not None:
        return float(e.mass_tail(horizon))
    if e.normalization == "pointwise":
        return float(max(0.0, 1.0 - truncated_mass))
    return float("inf")


def weighted_payoff_exact(p: Pomdp, x1: np.ndarray, strat: Strategy, e: Evaluation,
                          horizon: int, budget: int = DEFAULT_NODE_BUDGET) -> ValueReport:
    """E[sum theta_m r(k_m, i_m)] by exhaustive tree enumeration; exact when
    the weights vanish within the horizon."""
    ctx = EvalContext(p, np.asarray(x1, dtype=float))
    total = 0.0
    mass = 0.0
    for wp in enumerate_plays(p, x1, strat, horizon, budget=budget):
        w = e.weights(wp.play, ctx)
        r = p.reward[wp.play.states, wp.play.actions]
        total += wp.probability * float(w @ r)
        mass += wp.probability * float(w.sum())
    return ValueReport(value=total, method="exact_dp",
                       error_bound=_tail_weight(e, horizon, mass),
                       horizon_or_samples=horizon)


def weighted_payoff_mc(p: Pomdp, x1: np.ndarray, strat: Strategy, e: Evaluation,
                       horizon: int, samples: int, seed: int,
                       shards: int = 4) -> ValueReport:
    """Monte Carlo estimate of the weighted payoff; the error bound combines
    three standard errors with the expected tail weight."""
    if samples < 1:
        raise InvalidInputError("samples must be >= 1")
    ctx = EvalContext(p, np.asarray(x1, dtype=float))
    vals, masses = [], []
    counts = np.array_split(np.arange(samples), plan_shards(samples, horizon, shards))
    for rng, chunk in zip(shard_seeds(seed, len(counts)), counts):
        if len(chunk) == 0:
            continue
        states, actions, signals = simulate_plays(p, x1, strat, horizon, len(chunk), rng)
        w = e.batch_weights(states, actions, signals, ctx)
        r = p.reward[states, actions]
        vals.append((w * r).sum(axis=1))
        masses.append(w.sum(axis=1))
    v = np.concatenate(vals)
    mass = float(np.concatenate(masses).mean())
    se = float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0
    return ValueReport(value=float(v.mean()), method="monte_carlo",
                       error_bound=3.0 * se + _tail_weight(e, horizon, mass),
                       horizon_or_samples=samples)


def weighted_payoff_and_irregularity_mc(p: Pomdp, x1: np.ndarray, strat: Strategy,
                                        e: Evaluation, horizon: int, samples: int,
                                        seed: int, shards: int = 4):
    """Weighted payoff and irregularity estimated from one shared batch of
    sampled plays; returns (ValueReport, McEstimate).  Matches calling
    weighted_payoff_mc and irregularity_mc with the same seed at half the
    simulation cost."""
    from .evaluations import McEstimate, batch_pathwise_irregularity

    if samples < 1:
        raise InvalidInputError("samples must be >= 1")
    ctx = EvalContext(p, np.asarray(x1, dtype=float))
    vals, masses, irrs = [], [], []
    counts = np.array_split(np.arange(samples), plan_shards(samples, horizon, shards))
    for rng, chunk in zip(shard_seeds(seed, len(counts)), counts):
        if len(chunk) == 0:
            continue
        states, actions, signals = simulate_plays(p, x1, strat, horizon, len(chunk), rng)
        w = e.batch_weights(states, actions, signals, ctx)
        r = p.reward[states, actions]
        vals.append((w * r).sum(axis=1))
        masses.append(w.sum(axis=1))
        irrs.append(batch_pathwise_irregularity(w))
    v = np.concatenate(vals)
    j = np.concatenate(irrs)
    mass = float(np.concatenate(masses).mean())
    v_se = float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0
    j_se = float(j.std(ddof=1) / np.sqrt(len(j))) if len(j) > 1 else 0.0
    payoff = ValueReport(value=float(v.mean()), method="monte_carlo",
                         error_bound=3.0 * v_se + _tail_weight(e, horizon, mass),
                         horizon_or_samples=samples)
    irr = McEstimate(mean=float(j.mean()), std_error=j_se, samples=samples, seed=seed)
    return payoff, irr


def weighted_payoff_chain(c: MarkovChain, e: Evaluation, horizon: int) -> ValueReport:
    """Exact weighted payoff of a deterministic evaluation on a finite chain:
    sum_m theta_m E[f(u_m)] by stepping the state law."""
    if not e.deterministic:
        raise InvalidInputError("chain payoffs need a deterministic evaluation")
    w = e.stage_fn(horizon)
    y = c.initial.copy()
    total = 0.0
    for m in range(horizon):
        total += w[m] * float(y @ c.payoff)
        y = y @ c.transition
    return ValueReport(value=total, method="ergodic_exact",
                       error_bound=_tail_weight(e, horizon, float(w.sum())),
                       horizon_or_samples=horizon)


# ---------------------------------------------------------------------------
# Long-run average proxies
# ---------------------------------------------------------------------------

def running_average_extremum(payoffs: np.ndarray, mode: str,
                             window_start: int = None) -> np.ndarray:
    """Per-play max (limsup proxy) or min (liminf proxy) of the prefix
    averages over stages [window_start, horizon]; payoffs is (n, horizon)."""
    n, horizon = payoffs.shape
    if window_start is None:
        window_start = max(horizon // 2, 1)
    if not 1 <= window_start <= horizon:
        raise InvalidInputError("window start outside [1, horizon]")
    avg = np.cumsum(payoffs, axis=1) / np.arange(1, horizon + 1)
    window = avg[:, window_start - 1:]
    return window.max(axis=1) if mode == "limsup" else window.min(axis=1)


def limsup_belief_payoff_mc(p: Pomdp, x1: np.ndarray, strat: Strategy, horizon: int,
                            samples: int, seed: int, mode: str = "limsup",
                            payoff_on: str = "state", window_start: int = None,
                            shards: int = 4) -> ValueReport:
    """Finite-horizon estimate of the expected limsup/liminf average payoff,
    with per-stage payoffs r(k_m, i_m) ("state") or g(x_m, i_m) ("belief")."""
    if horizon < 2:
        raise InvalidInputError("horizon must be >= 2")
    if mode not in ("limsup", "liminf"):
        raise InvalidInputError(f"unknown mode {mode!r}")
    if payoff_on not in ("state", "belief"):
        raise InvalidInputError(f"unknown payoff base {payoff_on!r}")
    vals = []
    counts = np.array_split(np.arange(samples), plan_shards(samples, horizon, shards))
    for rng, chunk in zip(shard_seeds(seed, len(counts)), counts):
        if len(chunk) == 0:
            continue
        states, actions, signals = simulate_plays(p, x1, strat, horizon, len(chunk), rng)
        if payoff_on == "state":
            g = p.reward[states, actions]
        else:
            g = batched_belief_payoffs(p, x1, actions, signals)
        vals.append(running_average_extremum(g, mode, window_start))
    v = np.concatenate(vals)
    se = float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0
    return ValueReport(value=float(v.mean()), method="monte_carlo",
                       error_bound=3.0 * se, horizon_or_samples=samples)
