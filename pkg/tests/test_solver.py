import numpy as np
import pytest

from superhedge.errors import NotHedgeable, RadiusDegenerate
from superhedge.market import CustomCost, OrderBookCost, ProportionalCost, cost
from superhedge.payoff import CashSettledCall, CustomTable, zero_claim
from superhedge.solver import (
    PositionGrid,
    SolverConfig,
    compute_radius,
    convexity_violation,
    export_layers_csv,
    inf_step,
    rollout,
    solve,
    solve_on_lattice,
    sphere_sample,
    sup_step,
    terminal_layer,
    zero_solve,
)
from superhedge.support import MultiplicativeSupport, TableSupport, build_lattice


def binomial(T=1, s0=100.0):
    m = ProportionalCost(1)
    lat = build_lattice(MultiplicativeSupport([0.8, 1.2]), m.state([s0], [s0]), T)
    return m, lat


def test_grid_contains_zero_and_refines():
    g = PositionGrid.uniform(-1, 2, 0.5)
    assert g.size == 7
    assert g.points[g.zero_index, 0] == 0.0
    fine = g.refine()
    assert set(g.points[:, 0]) <= set(fine.points[:, 0])
    with pytest.raises(ValueError):
        PositionGrid.uniform(0.5, 2, 0.5)
    with pytest.raises(ValueError):
        PositionGrid.uniform(-1, 1, 0.3)
    with pytest.raises(ValueError):
        PositionGrid.uniform(1, -1, 0.5)


def test_tie_order_prefers_small_norm():
    g = PositionGrid.uniform(-1, 1, 0.5)
    assert g.points[g.tie_order()][:3, 0].tolist() == [0.0, -0.5, 0.5]


def test_terminal_layer_frictionless_call():
    m, lat = binomial()
    g = PositionGrid.uniform(-1, 1, 0.5)
    layer = terminal_layer(CashSettledCall(100, (0, 1)), m, lat, g)
    j = int(np.flatnonzero(g.points[:, 0] == 0.5)[0])
    up = int(np.flatnonzero(lat.nodes[1][:, 0] == 120)[0])
    assert layer.gamma[up, j] == -40.0


def test_terminal_layer_zero_position():
    m, lat = binomial()
    g = PositionGrid.uniform(-1, 1, 0.5)
    layer = terminal_layer(zero_claim(2), m, lat, g)
    assert np.all(layer.gamma[:, g.zero_index] == 0.0)


def test_terminal_layer_order_book_table_payoff():
    m = OrderBookCost(1, 2)
    s = m.state([([(9, 5), (8, None)], [(10, 5), (11, None)])])
    lat = build_lattice(TableSupport([(0, s, s)]), s, 1)
    g = PositionGrid.uniform(-1, 1, 1)
    layer = terminal_layer(CustomTable({0: [0, 7]}, 2), m, lat, g)
    assert layer.gamma[0, g.zero_index] == pytest.approx(72.0)


def test_sup_step_two_point_max():
    m, lat = binomial()
    g = PositionGrid.uniform(-1, 1, 0.5)
    theta = sup_step(terminal_layer(CashSettledCall(100, (0, 1)), m, lat, g), lat, 0)
    j = int(np.flatnonzero(g.points[:, 0] == 0.5)[0])
    assert theta[0, j] == -40.0
    theta0 = sup_step(terminal_layer(zero_claim(2), m, lat, g), lat, 0)
    v = g.points[:, 0]
    pos = v >= 0
    assert np.allclose(theta0[0, pos], -80 * v[pos])


def test_inf_step_binomial_call():
    m, lat = binomial()
    g = PositionGrid.uniform(-1, 1, 0.125)
    pay = CashSettledCall(100, (0, 1))
    theta = sup_step(terminal_layer(pay, m, lat, g), lat, 0)
    layer, arg, _ = inf_step(theta, m, lat, g, 0)
    assert layer.gamma[0, g.zero_index] == 10.0
    assert g.points[arg[0, g.zero_index], 0] == 0.5


def test_inf_step_singleton_grid():
    m, lat = binomial()
    g = PositionGrid.from_axes([(-1, 1, 1)])
    pay = CashSettledCall(100, (0, 1))
    theta = sup_step(terminal_layer(pay, m, lat, g), lat, 0)
    layer, _, _ = inf_step(theta, m, lat, g, 0)
    # with candidates restricted to y = 0 the value is D(v, 0)
    only0 = np.full_like(theta, np.inf)
    only0[:, g.zero_index] = theta[:, g.zero_index]
    layer0, _, _ = inf_step(only0, m, lat, g, 0)
    for j, v in enumerate(g.points):
        expect = cost(m, 0, lat.nodes[0][0], [0, -v[0]]) + theta[0, g.zero_index]
        assert layer0.gamma[0, j] == expect


def test_compute_radius_binomial():
    m, lat = binomial()
    g = PositionGrid.uniform(-2, 2, 0.25)
    z = zero_solve(m, lat, g, SolverConfig(lat.root, 1))
    rb = z.radii[0]
    assert rb.i_sphere[0] == pytest.approx(20.0, abs=1e-9)
    assert not rb.fallback[0]
    assert np.all(rb.radius > 0)
    # identity delta: r = lambda / i + 1
    assert np.allclose(rb.radius[0], rb.lam[0] / rb.i_used[0] + 1)


def test_compute_radius_degenerate_without_fallback():
    m = ProportionalCost(1)
    tab = TableSupport([(0, [120, 120], [80, 80]), (0, [120, 120], [120, 120])])
    lat = build_lattice(tab, [120, 120], 1)
    g = PositionGrid.uniform(-1, 1, 0.5)
    cfg = SolverConfig(lat.root, 1, fallback_radius=None)
    with pytest.raises(RadiusDegenerate):
        solve_on_lattice(m, lat, zero_claim(2), g, cfg)
    res = solve_on_lattice(m, lat, zero_claim(2), g, SolverConfig(lat.root, 1))
    assert res.radii[0].fallback[0]
    assert res.radii[0].i_sphere[0] == pytest.approx(0.0, abs=1e-9)


def test_solve_binomial_one_and_two_steps():
    m = ProportionalCost(1)
    sup = MultiplicativeSupport([0.8, 1.2])
    pay = CashSettledCall(100, (0, 1))
    g = PositionGrid.uniform(-1, 1, 1 / 1200)
    r1 = solve(m, sup, pay, g, SolverConfig(m.state([100], [100]), 1))
    r2 = solve(m, sup, pay, g, SolverConfig(m.state([100], [100]), 2))
    assert r1.price == pytest.approx(10.0, abs=1e-9)
    assert r2.price == pytest.approx(11.0, abs=1e-9)
    pts = g.points[:, 0]
    assert pts[r2.policy.argmin[0][0, g.zero_index]] == pytest.approx(0.55)


def test_solve_zero_claim_is_zero():
    m, lat = binomial(T=3)
    res = solve_on_lattice(m, lat, zero_claim(2), PositionGrid.uniform(-2, 2, 0.25), SolverConfig(lat.root, 3))
    assert res.price == 0.0
    assert res.zero is res


def test_policy_achieves_gamma():
    m, lat = binomial(T=2)
    g = PositionGrid.uniform(-1, 1, 0.125)
    res = solve_on_lattice(m, lat, CashSettledCall(95, (0, 1)), g, SolverConfig(lat.root, 2))
    pts = g.points
    for t in range(2):
        layer = res.layers[t]
        for node, s in enumerate(lat.nodes[t]):
            y = res.policy.argmin[t][node]
            d = cost(m, t, s, np.column_stack([np.zeros(g.size), pts[y] - pts])) + layer.theta[node, y]
            assert np.allclose(d, layer.gamma[node], atol=1e-9)


def test_rollout_binomial_replicates():
    m, lat = binomial()
    g = PositionGrid.uniform(-1, 1, 0.125)
    pay = CashSettledCall(100, (0, 1))
    res = solve_on_lattice(m, lat, pay, g, SolverConfig(lat.root, 1))
    rep = rollout(res.policy, lat, m, pay, 10.0)
    assert rep.worst_shortfall == 0.0
    assert [p["shortfall"] for p in rep.paths] == [0.0, 0.0]
    assert rollout(res.policy, lat, m, pay, 9.0).worst_shortfall == pytest.approx(-1.0)


def test_rollout_zero_claim_no_trades():
    m, lat = binomial(T=2)
    g = PositionGrid.uniform(-1, 1, 0.25)
    res = solve_on_lattice(m, lat, zero_claim(2), g, SolverConfig(lat.root, 2))
    rep = rollout(res.policy, lat, m, res.payoff, 0.0)
    assert rep.worst_shortfall == 0.0
    assert all(c == 0.0 for p in rep.paths for c in p["costs"])


def test_not_hedgeable():
    inf_cost = CustomCost(1, 1, lambda t, s, y: np.where(y[..., 0] == 0, 0.0, np.inf),
                          lambda t, s, y: np.abs(y[..., 0]))
    lat = build_lattice(MultiplicativeSupport([0.5, 2.0]), [1.0], 1)
    g = PositionGrid.uniform(-1, 1, 1)
    pay = CustomTable({}, 2, default=[0.0, 1.0])
    with pytest.raises(NotHedgeable):
        solve_on_lattice(inf_cost, lat, pay, g, SolverConfig(lat.root, 1, prune=False))


def test_threads_do_not_change_results():
    m = OrderBookCost(1, 2)
    s0 = m.state([([(99, 5), (98, None)], [(101, 5), (102, None)])])
    lat = build_lattice(MultiplicativeSupport([0.8, 1.0, 1.25], mask=m.price_mask()), s0, 2)
    g = PositionGrid.uniform(-3, 3, 0.25)
    pay = CashSettledCall(100, m.mid_coords(0), m.dim)
    a = solve_on_lattice(m, lat, pay, g, SolverConfig(lat.root, 2, threads=1))
    b = solve_on_lattice(m, lat, pay, g, SolverConfig(lat.root, 2, threads=4))
    for la, lb in zip(a.layers, b.layers):
        assert np.array_equal(la.gamma, lb.gamma)
    for pa, pb in zip(a.policy.argmin, b.policy.argmin):
        assert np.array_equal(pa, pb)


def test_pruning_does_not_change_values():
    m = OrderBookCost(1, 2)
    s0 = m.state([([(99, 5), (98, None)], [(101, 5), (102, None)])])
    lat = build_lattice(MultiplicativeSupport([0.8, 1.2], mask=m.price_mask()), s0, 2)
    g = PositionGrid.uniform(-4, 4, 0.25)
    pay = CashSettledCall(100, m.mid_coords(0), m.dim)
    a = solve_on_lattice(m, lat, pay, g, SolverConfig(lat.root, 2))
    b = solve_on_lattice(m, lat, pay, g, SolverConfig(lat.root, 2, prune=False))
    for la, lb in zip(a.layers, b.layers):
        assert np.array_equal(la.gamma, lb.gamma)


def test_convexity_on_order_book():
    m = OrderBookCost(1, 2)
    s0 = m.state([([(99, 5), (98, None)], [(101, 5), (102, None)])])
    lat = build_lattice(MultiplicativeSupport([0.8, 1.2], mask=m.price_mask()), s0, 2)
    g = PositionGrid.uniform(-4, 4, 0.25)
    res = solve_on_lattice(m, lat, CashSettledCall(100, m.mid_coords(0), m.dim), g, SolverConfig(lat.root, 2))
    assert all(layer.convex for layer in res.layers)
    assert max(convexity_violation(layer, g) for layer in res.layers) <= 1e-8


def test_sphere_sample_nested_and_unit():
    for k in (1, 2, 3, 5):
        a = sphere_sample(k, 32)
        b = sphere_sample(k, 64)
        assert np.allclose(np.linalg.norm(b, axis=1), 1.0)
        assert all(np.any(np.all(np.isclose(b, x), axis=1)) for x in a)
    assert sphere_sample(1).tolist() == [[-1.0], [1.0]]


def test_two_asset_solve_basket():
    m = ProportionalCost(2)
    sup = MultiplicativeSupport([[0.9, 0.9, 0.9, 0.9], [1.1, 1.1, 1.1, 1.1], [1.1, 1.1, 0.9, 0.9]])
    g = PositionGrid.uniform(-1, 1, 0.25, n_assets=2)
    from superhedge.payoff import Basket
    pay = Basket(100, [0.5, 0.5], [m.mid_coords(0), m.mid_coords(1)])
    res = solve(m, sup, pay, g, SolverConfig(m.state([100, 100], [100, 100]), 1))
    # hedging in asset 1 alone replicates the basket exposure on the diagonal moves
    assert 0 < res.price <= 10.0
    assert rollout(res.policy, res.lattice, m, pay, res.price).worst_shortfall >= -1e-9


def test_export_csv(tmp_path):
    m, lat = binomial()
    g = PositionGrid.uniform(-1, 1, 0.5)
    res = solve_on_lattice(m, lat, CashSettledCall(100, (0, 1)), g, SolverConfig(lat.root, 1))
    p = tmp_path / "layers.csv"
    export_layers_csv(res, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "t,node_id,s0,s1,v0,gamma,theta,y0"
    assert len(lines) == 1 + g.size * (1 + 2)


def test_zero_dominance_and_cash_shift():
    m, lat = binomial(T=2)
    g = PositionGrid.uniform(-1, 1, 0.125)
    cfg = SolverConfig(lat.root, 2)
    res = solve_on_lattice(m, lat, CashSettledCall(90, (0, 1)), g, cfg)
    zero = zero_solve(m, lat, g, cfg)
    for a, b in zip(res.layers, zero.layers):
        assert np.all(a.gamma >= b.gamma - 1e-12)
