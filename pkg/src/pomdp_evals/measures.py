"""Finitely supported probability measures on belief space: occupation
measures, one-step images under stationary strategies, exact transport
distance, invariance residuals, and the history disintegration that induces
a stationary strategy."""
from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np

from .errors import InvalidInputError
from .evaluations import EvalContext, Evaluation
from .model import (ObservedHistory, Pomdp, belief_key, belief_transition,
                    canonical_belief)
from .playspace import DEFAULT_NODE_BUDGET, belief_sequence, enumerate_plays
from .strategies import BehaviorStrategy, StationaryStrategy, Strategy

MASS_FLOOR = 1e-12
_FLOW_SCALE = 10 ** 12


@dataclass(frozen=True)
class SupportedMeasure:
    """Probability measure with finitely many belief atoms."""

    atoms: tuple  # tuple of (belief vector, mass)

    @staticmethod
    def from_pairs(pairs, renormalize: bool = False) -> "SupportedMeasure":
        """Canonicalize, merge coinciding beliefs, prune dust, validate mass."""
        merged: dict = {}
        for x, mass in pairs:
            x = canonical_belief(x)
            key = belief_key(x)
            if key in merged:
                merged[key] = (merged[key][0], merged[key][1] + float(mass))
            else:
                merged[key] = (x, float(mass))
        kept = [(x, m) for x, m in merged.values() if m >= MASS_FLOOR]
        total = sum(m for _, m in kept)
        if renormalize:
            if total <= 0:
                raise InvalidInputError("measure has no mass to renormalize")
            kept = [(x, m / total) for x, m in kept]
        elif abs(total - 1.0) > 1e-9:
            raise InvalidInputError(f"atom masses sum to {total:.12f}, not 1")
        kept.sort(key=lambda a: belief_key(a[0]))
        return SupportedMeasure(tuple(kept))

    @staticmethod
    def dirac(x) -> "SupportedMeasure":
        return SupportedMeasure.from_pairs([(x, 1.0)])

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def to_dict(self) -> dict:
        return {"atoms": [{"belief": [float(v) for v in x], "mass": m}
                          for x, m in self.atoms]}

    @staticmethod
    def from_dict(doc: dict) -> "SupportedMeasure":
        return SupportedMeasure.from_pairs(
            [(np.asarray(a["belief"], dtype=float), float(a["mass"]))
             for a in doc["atoms"]]
        )


@dataclass(frozen=True)
class OccupationResult:
    measure: SupportedMeasure
    total_weight: float   # expected truncated weight mass before renormalizing


def occupation_measure(p: Pomdp, x1: np.ndarray, strat: Strategy, e: Evaluation,
                       horizon: int, budget: int = DEFAULT_NODE_BUDGET) -> OccupationResult:
    """Expected evaluation weight deposited on each visited belief."""
    ctx = EvalContext(p, np.asarray(x1, dtype=float))
    deposits: dict = {}
    total = 0.0
    for wp in enumerate_plays(p, x1, strat, horizon, budget=budget):
        w = e.weights(wp.play, ctx)
        beliefs = belief_sequence(p, x1, wp.play.actions, wp.play.signals)
        for m in range(horizon):
            mass = wp.probability * float(w[m])
            if mass <= 0:
                continue
            x = canonical_belief(beliefs[m])
            key = belief_key(x)
            if key in deposits:
                deposits[key] = (x, deposits[key][1] + mass)
            else:
                deposits[key] = (x, mass)
            total += mass
    measure = SupportedMeasure.from_pairs(deposits.values(), renormalize=True)
    return OccupationResult(measure=measure, total_weight=total)


def image_measure(p: Pomdp, mu: SupportedMeasure, strat: StationaryStrategy) -> SupportedMeasure:
    """Push each atom one step: split mass over (action, signal) by the
    stationary strategy and the signal law, landing on the posteriors."""
    pairs = []
    for x, mass in mu.atoms:
        dist = strat.at_belief(x)
        for i in range(p.n_actions):
            if dist[i] <= MASS_FLOOR:
                continue
            for _, prob, nxt in belief_transition(p, x, i):
                pairs.append((nxt, mass * float(dist[i]) * prob))
    return SupportedMeasure.from_pairs(pairs, renormalize=True)


# ---------------------------------------------------------------------------
# Transport distance
# ---------------------------------------------------------------------------

def _integer_masses(measure: SupportedMeasure) -> list:
    """Masses scaled to integers summing exactly to the flow scale, with the
    rounding remainder assigned to the largest atom."""
    raw = [int(round(m * _FLOW_SCALE)) for _, m in measure.atoms]
    raw[int(np.argmax([m for _, m in measure.atoms]))] += _FLOW_SCALE - sum(raw)
    return raw


def kr_distance(mu: SupportedMeasure, nu: SupportedMeasure) -> float:
    """Exact optimal-transport distance with L1 ground metric on beliefs,
    via integer min-cost flow on the bipartite support graph."""
    dim = len(mu.atoms[0][0])
    if any(len(x) != dim for x, _ in nu.atoms):
        raise InvalidInputError("measures live on belief spaces of different dimension")
    a = _integer_masses(mu)
    b = _integer_masses(nu)
    g = nx.DiGraph()
    for j, supply in enumerate(a):
        g.add_node(("s", j), demand=-supply)
    for j, demand in enumerate(b):
        g.add_node(("t", j), demand=demand)
    for j, (x, _) in enumerate(mu.atoms):
        for jj, (y, _) in enumerate(nu.atoms):
            cost = int(round(float(np.abs(x - y).sum()) * _FLOW_SCALE))
            g.add_edge(("s", j), ("t", jj), weight=cost)
    cost, _ = nx.network_simplex(g)
    return cost / (_FLOW_SCALE * _FLOW_SCALE)


def invariance_residual(p: Pomdp, mu: SupportedMeasure, strat: StationaryStrategy) -> float:
    """Transport distance between a measure and its one-step image; zero
    certifies invariance under the strategy at tolerance."""
    return kr_distance(mu, image_measure(p, mu, strat))


# ---------------------------------------------------------------------------
# Disintegration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DisintegrationTable:
    """Weighted observed histories grouped by the belief they end at.

    groups maps the belief key to a list of (ObservedHistory, conditional
    mass, action distribution played there); `beliefs` recovers the actual
    belief vector per key."""

    groups: dict
    beliefs: dict


def disintegrate(p: Pomdp, x1: np.ndarray, strat: Strategy, e: Evaluation,
                 horizon: int, budget: int = DEFAULT_NODE_BUDGET):
    """Group the evaluation-weighted history measure by end-belief and induce
    a stationary strategy by averaging the played action distributions.

    Returns (DisintegrationTable, StationaryStrategy).
    """
    ctx = EvalContext(p, np.asarray(x1, dtype=float))
    weight_by_prefix: dict = {}
    for wp in enumerate_plays(p, x1, strat, horizon, budget=budget):
        w = e.weights(wp.play, ctx)
        a = tuple(int(v) for v in wp.play.actions)
        s = tuple(int(v) for v in wp.play.signals)
        for m in range(1, horizon + 1):
            mass = wp.probability * float(w[m - 1])
            if mass <= 0:
                continue
            key = (a[: m - 1], s[: m - 1])
            weight_by_prefix[key] = weight_by_prefix.get(key, 0.0) + mass

    groups: dict = {}
    beliefs: dict = {}
    for (acts, sigs), mass in sorted(weight_by_prefix.items()):
        h = ObservedHistory(acts, sigs)
        if sigs:
            x = belief_sequence(p, x1, acts + (0,), sigs + (0,))[-1]
        else:
            x = np.asarray(x1, dtype=float)
        x = canonical_belief(x)
        key = belief_key(x)
        beliefs[key] = x
        groups.setdefault(key, []).append(
            (h, mass, np.asarray(strat.action_distribution(h), dtype=float))
        )

    support, rows = [], []
    normalized: dict = {}
    for key, entries in groups.items():
        total = sum(mass for _, mass, _ in entries)
        normalized[key] = [(h, mass / total, dist) for h, mass, dist in entries]
        blended = sum((mass / total) * dist for _, mass, dist in entries)
        support.append(beliefs[key])
        rows.append(np.asarray(blended, dtype=float))
    table = DisintegrationTable(groups=normalized, beliefs=beliefs)
    induced = StationaryStrategy(n_actions=p.n_actions, support=support,
                                 action_dists=rows)
    return table, induced
