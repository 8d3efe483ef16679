from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from superhedge.cli import build_run, load_config
from superhedge.market import FixedCostModel, OrderBookCost, ProportionalCost
from superhedge.oracle import EnumerationInstance
from superhedge.payoff import CashSettledCall, CashSettledPut, PhysicalCall
from superhedge.solver import PositionGrid, clear_zero_cache
from superhedge.support import AdditiveSupport, MultiplicativeSupport, TableSupport, build_lattice

settings.register_profile("pkg", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("pkg")

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
SHIPPED = sorted(CONFIGS.glob("*.json"))


def load_run(name, threads=1):
    doc, base = load_config(CONFIGS / name)
    return build_run(doc, base, threads=threads)


@pytest.fixture(autouse=True)
def _fresh_cache():
    clear_zero_cache()
    yield


MODEL_KINDS = ("frictionless", "proportional", "order_book", "fixed_cost")


def make_market(kind, price=100.0, spread=1.0, fee=0.5):
    """Model and initial state with mid price ``price``."""
    if kind == "frictionless":
        m = ProportionalCost(1)
        return m, m.state([price], [price])
    if kind == "proportional":
        m = ProportionalCost(1)
        return m, m.state([price - spread], [price + spread])
    if kind == "order_book":
        m = OrderBookCost(1, 2)
        return m, m.state([([(price - spread, 2.0), (price - 2 * spread, None)],
                            [(price + spread, 2.0), (price + 2 * spread, None)])])
    m = FixedCostModel(1)
    return m, m.state([price - spread], [price + spread], [fee])


def random_instance(rng, kind, max_strategies=2 * 10**6):
    """Small enumerable instance: additive or table lattice, dyadic grid."""
    T = int(rng.integers(1, 4))
    b = int(rng.integers(2, 4))
    spread = float(rng.choice([0.5, 1.0, 2.0]))
    model, s0 = make_market(kind, 100.0, spread, fee=float(rng.choice([0.25, 0.5, 1.0])))
    mask = model.price_mask()
    if rng.random() < 0.7:
        inc = np.sort(rng.choice(np.arange(-12, 13), size=b, replace=False)).astype(float)
        if inc[0] >= 0:
            inc[0] = -float(rng.integers(1, 10))
        if inc[-1] <= 0:
            inc[-1] = float(rng.integers(1, 10))
        support = AdditiveSupport(inc, mask=mask)
    else:
        support = MultiplicativeSupport(rng.choice([0.75, 0.875, 1.0, 1.125, 1.25], size=b, replace=False),
                                        mask=mask)
    lattice = build_lattice(support, s0, T)
    inner = sum(1 for _ in _inner_tree_nodes(lattice))
    n = 21
    while n > 3 and n**inner > max_strategies:
        n -= 2
    m = n // 2
    step = float(rng.choice([0.125, 0.25, 0.5]))
    lo = -m + int(rng.integers(0, 2)) if m > 1 else -m
    grid = PositionGrid.from_axes([(lo * step, (lo + n - 1) * step, step)])
    if grid.size**inner > max_strategies:
        grid = PositionGrid.from_axes([(-step, step, step)])
    strike = float(rng.choice([90.0, 95.0, 100.0, 105.0]))
    coords = model.mid_coords(0)
    pk = rng.choice(["call", "put", "physical"])
    if pk == "call":
        payoff = CashSettledCall(strike, coords, model.dim)
    elif pk == "put":
        payoff = CashSettledPut(strike, coords, model.dim)
    else:
        payoff = PhysicalCall(strike, 0, coords, model.dim)
    return EnumerationInstance(lattice, grid, model, payoff)


def _inner_tree_nodes(lattice):
    frontier = [0]
    for t in range(lattice.horizon):
        for node in frontier:
            yield (t, node)
        frontier = [int(c) for node in frontier for c in lattice.children[t][node]]


def table_support_tree(branching, T, start=100.0):
    """Non-recombining table support over a frictionless price."""
    tab = TableSupport()
    layer = [start]
    for t in range(T):
        nxt = []
        for p in layer:
            for j in range(branching):
                c = p + (j - (branching - 1) / 2) * 10.0 + 0.001 * (len(nxt) + 1)
                tab.add(t, [p, p], [c, c])
                nxt.append(c)
        layer = nxt
    return tab
