"""
Superior vs inferior long-run averages in a blind switching chain
=================================================================

A two-state chain controlled blindly: one action keeps the state, the other
swaps it, and the single signal carries no information.  Every finite-memory
strategy earns long-run average 1/2, but an unboundedly patient switching
schedule pushes the expected superior limit of running averages toward 1.
"""

import numpy as np

import pomdp_evals as pe
from pomdp_evals.chain import liminf_value_transducer

sc = pe.builtin_scenario("blind-switching")
p, x1 = sc.pomdp, sc.initial_belief

# ---------------------------------------------------------------------------
# Every automaton with up to 3 memory cells settles at exactly 1/2.
# ---------------------------------------------------------------------------

transducers = pe.enumerate_transducers(p, max_memory=3)
values = [liminf_value_transducer(p, x1, t) for t in transducers]
print(f"{len(transducers)} automata with <= 3 memory cells")
print(f"  long-run values range over [{min(values):.6f}, {max(values):.6f}]")

# ---------------------------------------------------------------------------
# The doubling schedule: hold the keep-action for blocks of length 2^(j*j),
# separated by single swaps.  Whichever state the play starts in, half the
# blocks sit on payoff 1, and the block lengths grow so fast that the
# running average oscillates between ~0 and ~1 forever.
# ---------------------------------------------------------------------------

strat = pe.doubling_strategy()
switches = [m for m in range(1, 100_000) if strat.action_at_stage(m) == 1]
print(f"\ndoubling schedule swaps at stages {switches}")

for k, name in enumerate(p.states):
    x = pe.dirac_belief(2, k)
    hi = pe.limsup_belief_payoff_mc(p, x, strat, 100_000, 1, 0,
                                    mode="limsup", payoff_on="state",
                                    window_start=1)
    lo = pe.limsup_belief_payoff_mc(p, x, strat, 100_000, 1, 0,
                                    mode="liminf", payoff_on="state",
                                    window_start=1)
    print(f"  start {name:5s}: limsup proxy = {hi.value:.4f}, "
          f"liminf proxy = {lo.value:.4f}")

# ---------------------------------------------------------------------------
# Measured on beliefs instead of states, nothing moves: the blind belief
# stays uniform, so every belief payoff is exactly 1/2.
# ---------------------------------------------------------------------------

bel = pe.limsup_belief_payoff_mc(p, x1, strat, 10_000, 20, 0,
                                 mode="limsup", payoff_on="belief")
print(f"\nbelief-side limsup proxy = {bel.value:.6f} (exactly 1/2)")
