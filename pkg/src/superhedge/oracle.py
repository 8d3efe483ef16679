"""Slow reference answers for cross-checking the solver.

:func:`enumerate_price` tries every grid-valued strategy on the unrolled
scenario tree, so it shares nothing with the recursion except the cost
function and the grid.  :func:`binomial_frictionless_price` is the
classical replication value on a recombining binomial tree.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ArbitrageParams, TooLarge
from .market import CostModel, cost
from .payoff import Payoff, payoff_vector
from .solver import PositionGrid, SolveResult, rollout
from .support import SupportLattice

__all__ = [
    "MAX_STEPS",
    "MAX_BRANCHING",
    "MAX_AXIS_POINTS",
    "MAX_STRATEGIES",
    "EnumerationInstance",
    "enumerate_price",
    "binomial_frictionless_price",
    "verify_superhedge",
]

MAX_STEPS = 3
MAX_BRANCHING = 3
MAX_AXIS_POINTS = 21
MAX_STRATEGIES = 10**7
CHUNK = 1 << 15


@dataclass
class EnumerationInstance:
    lattice: SupportLattice
    grid: PositionGrid
    cost_model: CostModel
    payoff: Payoff

    def tree(self):
        """Unrolled path tree: ``(t, lattice node, parent tree index)`` per tree node."""
        out = [(0, 0, -1)]
        frontier = [0]
        for t in range(self.lattice.horizon):
            nxt = []
            for j in frontier:
                _, node, _ = out[j]
                for c in self.lattice.children[t][node]:
                    out.append((t + 1, int(c), j))
                    nxt.append(len(out) - 1)
            frontier = nxt
        return out

    def strategy_count(self) -> int:
        inner = sum(1 for t, _, _ in self.tree() if t < self.lattice.horizon)
        return self.grid.size ** inner

    def check(self) -> None:
        lat = self.lattice
        if lat.horizon > MAX_STEPS:
            raise TooLarge(f"{lat.horizon} steps exceeds {MAX_STEPS}")
        widest = max(len(k) for layer in lat.children for k in layer)
        if widest > MAX_BRANCHING:
            raise TooLarge(f"branching {widest} exceeds {MAX_BRANCHING}")
        if max(self.grid.shape) > MAX_AXIS_POINTS:
            raise TooLarge(f"grid axis with {max(self.grid.shape)} points exceeds {MAX_AXIS_POINTS}")
        n = self.strategy_count()
        if n > MAX_STRATEGIES:
            raise TooLarge(f"{n} strategies exceeds {MAX_STRATEGIES}")


def _tables(inst: EnumerationInstance):
    """Trade-cost tables per tree node and terminal tables per leaf."""
    lat, grid, model = inst.lattice, inst.grid, inst.cost_model
    T = lat.horizon
    k = grid.index
    step = np.asarray(grid.step)
    d = model.dim
    tree = inst.tree()
    inner = [j for j, (t, _, _) in enumerate(tree) if t < T]
    slot = {j: n for n, j in enumerate(inner)}
    trade = {}
    term = {}
    for j, (t, node, parent) in enumerate(tree):
        s = lat.nodes[t][node]
        if t < T:
            prev = np.zeros((1, grid.n_assets), dtype=int) if parent < 0 else k
            z = np.zeros((len(prev), grid.size, d))
            z[..., 1:] = (k[None, :, :] - prev[:, None, :]) * step
            trade[j] = cost(model, t, s, z)
        else:
            g = payoff_vector(inst.payoff, s, node_id=node)
            z = np.zeros((grid.size, d))
            z[:, 1:] = g[1:] - k * step
            term[j] = g[0] + cost(model, T, s, z)
    leaves = [j for j, (t, _, _) in enumerate(tree) if t == T]
    paths = []
    for leaf in leaves:
        chain = []
        j = tree[leaf][2]
        while j >= 0:
            chain.append(j)
            j = tree[j][2]
        paths.append((leaf, chain))
    return tree, slot, trade, term, paths


def _chunk_min(start, stop, n_inner, G, slot, tree, trade, term, paths):
    a = np.arange(start, stop, dtype=np.int64)
    digits = np.empty((n_inner, a.size), dtype=np.int64)
    for n in range(n_inner):
        digits[n] = a % G
        a //= G
    worst = np.full(stop - start, -np.inf)
    for leaf, chain in paths:
        # chain runs from the leaf's parent up to the root; sum innermost first
        y = digits[slot[chain[0]]]
        val = term[leaf][y]
        for j in chain:
            yj = digits[slot[j]]
            parent = tree[j][2]
            yp = 0 if parent < 0 else digits[slot[parent]]
            val = trade[j][yp, yj] + val
        worst = np.maximum(worst, val)
    return float(np.min(worst))


def enumerate_price(inst: EnumerationInstance, threads: int = 1) -> float:
    """``min`` over all grid-valued strategies of the ``max`` over paths of the total cost.

    A strategy assigns one grid position to every non-terminal node of the
    unrolled tree (a recombined lattice node reached along two paths gets
    two independent actions).  The cost along a path is
    ``sum_t C_t(s_t, (0, y_t - y_{t-1})) + g^1 + C_T(s_T, (0, g^(2) - y_{T-1}))``.
    """
    inst.check()
    tree, slot, trade, term, paths = _tables(inst)
    G = inst.grid.size
    n_inner = len(slot)
    total = G ** n_inner
    bounds = [(s, min(total, s + CHUNK)) for s in range(0, total, CHUNK)]

    def run(b):
        return _chunk_min(b[0], b[1], n_inner, G, slot, tree, trade, term, paths)

    if threads and threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            vals = list(ex.map(run, bounds))
    else:
        vals = [run(b) for b in bounds]
    return min(vals)


def binomial_frictionless_price(s0: float, up: float, down: float, K: float, T: int) -> float:
    """Replication value of a call ``(S_T - K)^+`` on a recombining binomial tree.

    ``up`` and ``down`` are per-step factors; the risk-neutral weight is
    ``q = (1 - down) / (up - down)``.
    """
    if not down < 1.0 < up:
        raise ArbitrageParams(f"need down < 1 < up, got down={down}, up={up}")
    if T < 1:
        raise ValueError("T must be >= 1")
    q = (1.0 - down) / (up - down)
    j = np.arange(T + 1)
    values = np.maximum(s0 * up**j * down ** (T - j) - K, 0.0)
    for _ in range(T):
        values = q * values[1:] + (1 - q) * values[:-1]
    return float(values[0])


def verify_superhedge(result: SolveResult, slack: float = 0.0, max_paths: int = 10_000) -> float:
    """Worst terminal liquidation value of ``V_T - xi`` starting from ``price + slack``."""
    rep = rollout(result.policy, result.lattice, result.cost_model, result.payoff,
                  result.price + slack, max_paths=max_paths)
    return rep.worst_shortfall
