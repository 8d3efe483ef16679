"""
Arbitrage diagnostics
=====================

The solver needs the market to be free of instantaneous profit, and a
strictly positive one-step zero-claim cost gives it a bounded search ball.
This walk-through probes both on a few small markets.
"""
from superhedge import (
    FixedCostModel,
    MultiplicativeSupport,
    PositionGrid,
    ProportionalCost,
    SolverConfig,
    TableSupport,
    build_lattice,
    check_aip,
    check_arbitrage,
    check_saip,
    estimate_null_space,
    zero_solve,
)

grid = PositionGrid.uniform(-2, 2, 0.125)
m = ProportionalCost(1)


def zero_of(lattice, model=m, horizon=False):
    return zero_solve(model, lattice, grid, SolverConfig(lattice.root, lattice.horizon), horizon=horizon)


###############################################################################
# Spot strictly inside the range of tomorrow's prices.  The infimum of the
# zero-claim functional over unit directions is 20.

lat = build_lattice(MultiplicativeSupport([0.8, 1.2]), m.state([100], [100]), 1)
z = zero_of(lat)
print("interior:", check_aip(z, 0), check_saip(z, 0).i_t)

###############################################################################
# Spot at the top of the support.  Buying the asset never loses, so there is
# no instantaneous profit, but the strict version fails and the zero-cost
# directions form a half line rather than a linear space.

edge = TableSupport([(0, [120.0, 120.0], [c, c]) for c in (80.0, 120.0)])
z = zero_of(build_lattice(edge, [120.0, 120.0], 1))
s = check_saip(z, 0)
ns = estimate_null_space(z, 0)
print("edge: saip", s.ok, "i0", s.i_t, "| null space linear", ns.laip)

###############################################################################
# Spot below every successor: a sure profit.  The zero claim becomes negative
# and the minimum sits on the grid boundary.

below = TableSupport([(0, [100.0, 100.0], [c, c]) for c in (110.0, 120.0)])
a = check_aip(zero_of(build_lattice(below, [100.0, 100.0], 1)), 0)
print("below: aip", a.ok, "residual", a.residual, "boundary nodes", a.boundary_hits)

###############################################################################
# Fixed fees are not homogeneous, so the radius comes from the horizon market,
# the conic limit of the costs at large trade sizes.

f = FixedCostModel(1)
flat = build_lattice(MultiplicativeSupport([0.8, 1.2], mask=f.price_mask()), f.state([9], [10], [1]), 2)
report = check_arbitrage(f, flat, grid)
for row in report.rows:
    print(row)
print("consistent flags:", report.consistent())
