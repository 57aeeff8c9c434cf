"""
Why history-dependent stage weights need a measurability restriction
====================================================================

Two tiny instances where cleverly chosen stage weights extract strictly more
than the long-run value, because the weights peek at information the
decision-maker never observes.
"""

import numpy as np

import pomdp_evals as pe

# ---------------------------------------------------------------------------
# Instance 1: a frozen matching game.  Two states, two actions, one blank
# signal.  The payoff is 1 when the action matches the hidden state, which
# never changes.  No observed history ever reveals anything, so every
# n-stage value is exactly 1/2.
# ---------------------------------------------------------------------------

sc = pe.builtin_scenario("matching-frozen")
p, x1 = sc.pomdp, sc.initial_belief
print("frozen matching game")
for n in (1, 10, 50):
    print(f"  v_{n} = {pe.value_n(p, x1, n).value:.6f}")

# Now weight the stages by the hidden initial state: mass 1/l on stages
# 1..l when the state is the first one, on stages l+1..2l otherwise.  The
# schedule "first action for l stages, then the second" matches the weighted
# block perfectly in both cases.
for l in (4, 16):
    e = pe.make_evaluation("state_block_ex1", l=l)
    strat = pe.block_switch_strategy(2, 0, 1, switch_after=l)
    payoff = pe.weighted_payoff_exact(p, x1, strat, e, horizon=2 * l)
    irr = pe.irregularity_exact(p, x1, strat, e, horizon=2 * l)
    print(f"  l={l:3d}: weighted payoff = {payoff.value:.6f}, "
          f"irregularity = {irr.value:.6f} (= 2/l)")

# The irregularity 2/l vanishes as l grows, yet the weighted payoff stays at
# 1 > 1/2: these weights are not functions of the observed history.

# ---------------------------------------------------------------------------
# Instance 2: an uncontrolled chain whose state is redrawn uniformly every
# stage, payoff 1 in the first state.  Weight 1/l on the first run of l
# consecutive good states.  Such a run appears eventually with probability
# one, so the weighted payoff tends to 1 while the long-run value is 1/2.
# ---------------------------------------------------------------------------

sc = pe.builtin_scenario("uniform-redraw")
p, x1 = sc.pomdp, sc.initial_belief
strat = pe.always_strategy(p.n_actions, p.n_signals, 0)

from pomdp_evals.chain import ergodic_decomposition, product_chain

dec = ergodic_decomposition(product_chain(p, strat, x1))
print("\nuniform redraw chain")
print(f"  stationary law = {np.round(dec.stationary[0], 3)}, "
      f"long-run payoff = {dec.class_values[0]:.3f}")

for l in (5, 10):
    e = pe.make_evaluation("run_block_ex2", l=l)
    horizon = max(50 * l, 9 * 2 ** (l + 1))
    payoff = pe.weighted_payoff_mc(p, x1, strat, e, horizon, samples=4000, seed=0)
    irr = pe.irregularity_mc(p, x1, strat, e, horizon, samples=4000, seed=0)
    print(f"  l={l:3d}: run-weighted payoff = {payoff.value:.4f} "
          f"(+/- {payoff.error_bound:.4f}), irregularity = {irr.mean:.4f}")
