"""Property suites over randomly generated markets, lattices and grids."""
import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from superhedge.arbitrage import check_arbitrage
from superhedge.market import FixedCostModel, OrderBookCost, ProportionalCost, cost, horizon_cost, liquidation
from superhedge.payoff import CashSettledCall, CashSettledPut, payoff_vector
from superhedge.solver import (
    PositionGrid,
    SolverConfig,
    convexity_violation,
    solve_on_lattice,
    sup_step,
    terminal_layer,
    zero_solve,
)
from superhedge.support import AdditiveSupport, MultiplicativeSupport, build_lattice, successors

from conftest import MODEL_KINDS, make_market, random_instance

prices = st.floats(1.0, 500.0)
spreads = st.floats(0.0, 5.0)
positions = st.lists(st.floats(-50, 50), min_size=2, max_size=2)
seeds = st.integers(0, 2**31 - 1)


def random_state(kind, p, e, fee=0.5):
    return make_market(kind, p + 2 * e + 1e-3, max(e, 1e-3), fee)


@given(st.sampled_from(MODEL_KINDS), prices, spreads, positions)
def test_liquidation_is_negated_cost(kind, p, e, z):
    m, s = random_state(kind, p, e)
    z = np.asarray(z)
    assert liquidation(m, 0, s, z) == -cost(m, 0, s, -z)


@given(st.sampled_from(MODEL_KINDS), prices, spreads, positions, st.floats(-1e3, 1e3))
def test_cash_invariance(kind, p, e, z, lam):
    m, s = random_state(kind, p, e)
    z = np.asarray(z)
    moved = cost(m, 0, s, z + [lam, 0]) - cost(m, 0, s, z)
    assert abs(moved - lam) <= 1e-9 * (1 + abs(lam) + abs(cost(m, 0, s, z)))


@given(prices, spreads, st.floats(0, 5), st.lists(st.floats(-100, 100), min_size=2, max_size=2))
def test_fixed_cost_horizon_below_cost(p, e, fee, z):
    m = FixedCostModel(1)
    s = m.state([p], [p + e], [fee])
    assert horizon_cost(m, 0, s, z) <= cost(m, 0, s, z) + 1e-9 * (1 + abs(cost(m, 0, s, z)))


@given(st.floats(10, 500), st.floats(0.01, 3), st.floats(0.1, 10), positions, positions, st.floats(1, 10))
def test_order_book_convex_and_super_homogeneous(p, gap, size, a, b, lam):
    m = OrderBookCost(1, 2)
    s = m.state([([(p, size), (p - gap, None)], [(p + gap, size), (p + 2 * gap, None)])])
    a, b = np.asarray(a), np.asarray(b)
    ca, cb = cost(m, 0, s, a), cost(m, 0, s, b)
    tol = 1e-9 * (1 + abs(ca) + abs(cb))
    assert cost(m, 0, s, (a + b) / 2) <= (ca + cb) / 2 + tol
    assert cost(m, 0, s, lam * a) >= lam * ca - 1e-9 * (1 + abs(lam * ca))


@given(st.floats(10, 200), st.floats(-1e-3, 1e-3))
def test_successors_continuous_in_state(p, dp):
    for sup in (MultiplicativeSupport([0.8, 1.0, 1.25]), AdditiveSupport([-3.0, 0.0, 2.0])):
        a = successors(sup, 0, [p])
        b = successors(sup, 0, [p + dp])
        assert np.max(np.abs(a - b)) <= 1.25 * abs(dp) + 1e-12


@given(st.floats(1, 300), st.floats(0, 300))
def test_builtin_payoffs_nonnegative(p, k):
    for pay in (CashSettledCall(k, (0, 1)), CashSettledPut(k, (0, 1))):
        assert np.all(payoff_vector(pay, [p, p]) >= 0)


def _solve(inst, grid=None):
    lat = inst.lattice
    return solve_on_lattice(inst.cost_model, lat, inst.payoff, grid or inst.grid,
                            SolverConfig(lat.root, lat.horizon))


@given(seeds, st.sampled_from(MODEL_KINDS))
def test_refinement_never_raises_price(seed, kind):
    inst = random_instance(np.random.default_rng(seed), kind, max_strategies=10**4)
    coarse = _solve(inst).price
    fine = _solve(inst, inst.grid.refine()).price
    assert fine <= coarse + 1e-9


@given(seeds, st.sampled_from(MODEL_KINDS))
def test_zero_claim_dominated(seed, kind):
    inst = random_instance(np.random.default_rng(seed), kind, max_strategies=10**4)
    res = _solve(inst)
    zero = zero_solve(inst.cost_model, inst.lattice, inst.grid, SolverConfig(inst.lattice.root, inst.lattice.horizon))
    for a, b in zip(res.layers, zero.layers):
        assert np.all(a.gamma >= b.gamma - 1e-9)


@given(seeds, st.sampled_from(MODEL_KINDS))
def test_policy_attains_tabulated_value(seed, kind):
    inst = random_instance(np.random.default_rng(seed), kind, max_strategies=10**4)
    res = _solve(inst)
    pts = inst.grid.points
    n = inst.grid.size
    for t in range(inst.lattice.horizon):
        layer = res.layers[t]
        for node, s in enumerate(inst.lattice.nodes[t]):
            y = res.policy.argmin[t][node]
            z = np.column_stack([np.zeros(n), pts[y] - pts])
            d = cost(inst.cost_model, t, s, z) + layer.theta[node, y]
            assert np.allclose(d, layer.gamma[node], rtol=1e-12, atol=1e-9)


@given(seeds, st.sampled_from(["frictionless", "proportional", "order_book"]))
def test_convex_models_give_convex_layers(seed, kind):
    inst = random_instance(np.random.default_rng(seed), kind, max_strategies=10**4)
    res = _solve(inst)
    assert all(layer.convex for layer in res.layers)
    assert max(convexity_violation(layer, inst.grid) for layer in res.layers) <= 1e-8


@given(seeds, st.sampled_from(MODEL_KINDS))
def test_terminal_value_nonincreasing_in_position(seed, kind):
    inst = random_instance(np.random.default_rng(seed), kind, max_strategies=10**4)
    layer = terminal_layer(inst.payoff, inst.cost_model, inst.lattice, inst.grid)
    assert np.all(np.diff(layer.gamma, axis=1) <= 1e-9)


@given(seeds, st.sampled_from(MODEL_KINDS))
def test_gamma_ignores_cash_coordinate(seed, kind):
    # the cash part of v only shifts the trade cost by itself
    inst = random_instance(np.random.default_rng(seed), kind, max_strategies=10**4)
    m, s = inst.cost_model, inst.lattice.root
    pts = inst.grid.points
    z = np.column_stack([np.zeros(len(pts)), pts])
    for lam in (-3.25, 0.5, 17.0):
        shifted = cost(m, 0, s, z + [lam, 0]) - lam
        assert np.allclose(shifted, cost(m, 0, s, z), rtol=1e-12, atol=1e-9)


@given(seeds, st.sampled_from(MODEL_KINDS))
def test_report_flags_chain(seed, kind):
    inst = random_instance(np.random.default_rng(seed), kind, max_strategies=10**4)
    rep = check_arbitrage(inst.cost_model, inst.lattice, inst.grid)
    assert rep.consistent()
    for r in rep.rows:
        if r["aip"]:
            zero = zero_solve(inst.cost_model, inst.lattice, inst.grid,
                              SolverConfig(inst.lattice.root, inst.lattice.horizon))
            assert np.all(np.isfinite(zero.layers[r["t"]].gamma))


def d_table(model, lattice, theta, t, node, grid):
    """``D_t(node, v, y)`` for every pair of grid indices."""
    pts = grid.points
    n = grid.size
    s = lattice.nodes[t][node]
    z = np.zeros((n, n, model.dim))
    z[..., 1:] = pts[None, :, :] - pts[:, None, :]
    return cost(model, t, s, z) + theta[node][None, :]


def last_step_tables(model, lattice, payoff, grid):
    from superhedge.payoff import zero_claim

    T = lattice.horizon
    th_x = sup_step(terminal_layer(payoff, model, lattice, grid), lattice, T - 1)
    th_0 = sup_step(terminal_layer(zero_claim(model.dim), model, lattice, grid), lattice, T - 1)
    return th_x, th_0


@given(seeds, st.sampled_from(["frictionless", "proportional"]))
def test_d_is_sub_additive(seed, kind):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, kind, max_strategies=10**4)
    m, lat, grid = inst.cost_model, inst.lattice, PositionGrid.uniform(-2, 2, 0.25)
    th_x, th_0 = last_step_tables(m, lat, inst.payoff, grid)
    T = lat.horizon
    k = grid.index[:, 0] - grid.lo[0]
    for node in range(len(lat.nodes[T - 1])):
        dx = d_table(m, lat, th_x, T - 1, node, grid)
        d0 = d_table(m, lat, th_0, T - 1, node, grid)
        iv, iy, iw, iz = (rng.integers(0, grid.size, 200) for _ in range(4))
        off = -grid.lo[0]
        sv, sy = k[iv] + k[iw] - off, k[iy] + k[iz] - off
        ok = (sv >= 0) & (sv < grid.size) & (sy >= 0) & (sy < grid.size)
        lhs = dx[sv[ok], sy[ok]]
        rhs = dx[iv[ok], iy[ok]] + d0[iw[ok], iz[ok]]
        assert np.all(lhs <= rhs + 1e-9)


@given(seeds, st.sampled_from(["frictionless", "proportional", "order_book"]), st.integers(2, 4))
def test_zero_functional_is_homogeneous(seed, kind, lam):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, kind, max_strategies=10**4)
    m, lat, grid = inst.cost_model, inst.lattice, PositionGrid.uniform(-4, 4, 0.25)
    _, th_0 = last_step_tables(m, lat, inst.payoff, grid)
    T = lat.horizon
    off = -grid.lo[0]
    k = grid.index[:, 0]
    small = np.flatnonzero(np.abs(k) * lam <= grid.hi[0])
    for node in range(len(lat.nodes[T - 1])):
        d0 = d_table(m, lat, th_0, T - 1, node, grid)
        iv, iy = rng.choice(small, 200), rng.choice(small, 200)
        lhs = d0[k[iv] * lam + off, k[iy] * lam + off]
        assert np.all(lhs >= lam * d0[iv, iy] - 1e-9)
