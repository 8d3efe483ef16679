"""
Pricing a call on a binomial lattice
====================================

Start from the frictionless one-step tree, where the super-hedging cost is
the replication price, then widen the bid-ask spread and watch the cost rise.
"""
import numpy as np

from superhedge import (
    CashSettledCall,
    MultiplicativeSupport,
    PositionGrid,
    ProportionalCost,
    SolverConfig,
    binomial_frictionless_price,
    rollout,
    solve,
)

###############################################################################
# A proportional-cost market with one risky asset.  The state is ``[bid, ask]``
# and equal bid and ask means no friction.

model = ProportionalCost(1)
support = MultiplicativeSupport([0.8, 1.2])
call = CashSettledCall(100.0, model.mid_coords(0), model.dim)
grid = PositionGrid.uniform(-1.0, 1.0, 1 / 1024)

res = solve(model, support, call, grid, SolverConfig(model.state([100], [100]), horizon=1))
print("frictionless price   ", res.price)
print("closed form          ", binomial_frictionless_price(100, 1.2, 0.8, 100, 1))

###############################################################################
# The optimal initial position is the replicating delta, read off the policy.

v0 = grid.points[res.policy.argmin[0][0][grid.zero_index]]
print("initial stock holding", v0)

###############################################################################
# Widening the spread symmetrically around 100 can only make hedging dearer.

for eps in (0.0, 0.5, 1.0, 2.0):
    r = solve(model, support, call, grid, SolverConfig(model.state([100 - eps], [100 + eps]), horizon=1))
    print(f"spread {eps:3.1f}: {r.price:.6f}")

###############################################################################
# Two periods.  Recombination keeps three terminal nodes.  A grid step of
# 1/1200 contains the exact replicating positions.

grid2 = PositionGrid.uniform(-1.0, 1.0, 1 / 1200)
res2 = solve(model, support, call, grid2, SolverConfig(model.state([100], [100]), horizon=2))
print("two-step price", res2.price, "lattice", res2.lattice.layer_sizes)

###############################################################################
# Running the hedge forward from the price leaves no shortfall on any path;
# one unit less cash does.

for cash in (res2.price, res2.price - 1):
    rep = rollout(res2.policy, res2.lattice, model, call, cash)
    print(f"cash {cash:6.3f}: worst shortfall {rep.worst_shortfall:+.6f} over {rep.n_paths} paths")

print("value layer shapes", [np.shape(layer.gamma) for layer in res2.layers])
