"""Backward dynamic programming for minimal super-hedging costs.

Notation used throughout:

``gamma_t(s, v)``
    minimal cash needed at time ``t`` in state ``s``, starting from the
    risky position ``v``, to end up delivering the claim at maturity.
``theta_t(s, y) = max_{s' in succ(s)} gamma_{t+1}(s', y)``
    worst case over the successors of ``s`` after moving to ``y``.
``D_t(s, v, y) = C_t(s, (0, y - v)) + theta_t(s, y)``
    cost of rebalancing from ``v`` to ``y`` and carrying on.

``gamma_t(s, v) = min_y D_t(s, v, y)`` with ``y`` ranging over a uniform
position grid.  The search is restricted to the ball of radius
``delta^{-1}(lambda / i) + 1`` where ``i`` lower-bounds the zero-claim
functional ``D^0_t(s, 0, .)`` on the unit sphere; see :func:`compute_radius`.
"""
from __future__ import annotations

import csv
import logging
import os
import weakref
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import NotHedgeable, RadiusDegenerate
from .market import CostModel, cost, liquidation
from .payoff import Payoff, payoff_vector, zero_claim
from .support import NODE_CAP, SupportLattice, SupportModel, build_lattice

__all__ = [
    "PositionGrid",
    "ValueLayer",
    "HedgePolicy",
    "RadiusBound",
    "SolverConfig",
    "SolveResult",
    "RolloutReport",
    "terminal_layer",
    "sup_step",
    "inf_step",
    "compute_radius",
    "solve",
    "solve_on_lattice",
    "zero_solve",
    "rollout",
    "sphere_sample",
    "convexity_violation",
    "export_layers_csv",
    "clear_zero_cache",
]

log = logging.getLogger(__name__)

EPSILON = 1e-10
CHUNK_CELLS = 1 << 22
SPHERE_POINTS = 128


@dataclass(frozen=True)
class PositionGrid:
    """Uniform grid over risky positions, one ``(min, max, step)`` per asset.

    Points are ``k * step`` for integer ``k``, so 0 is always a grid point
    and halving the step gives a superset.  Flattened in C order.
    """

    lo: tuple
    hi: tuple
    step: tuple

    @classmethod
    def from_axes(cls, axes: Sequence[Sequence[float]]) -> "PositionGrid":
        lo, hi, step = [], [], []
        for a in axes:
            mn, mx, h = (float(x) for x in a)
            if not h > 0:
                raise ValueError("grid step must be positive")
            if not mn < mx:
                raise ValueError("grid min must be below grid max")
            kl, kh = mn / h, mx / h
            if abs(kl - round(kl)) > 1e-9 * max(1.0, abs(kl)) or abs(kh - round(kh)) > 1e-9 * max(1.0, abs(kh)):
                raise ValueError(f"grid bounds {mn}, {mx} are not multiples of the step {h}")
            kl, kh = int(round(kl)), int(round(kh))
            if not kl <= 0 <= kh:
                raise ValueError("the grid must contain 0")
            lo.append(kl)
            hi.append(kh)
            step.append(h)
        return cls(tuple(lo), tuple(hi), tuple(step))

    @classmethod
    def uniform(cls, lo: float, hi: float, step: float, n_assets: int = 1) -> "PositionGrid":
        return cls.from_axes([(lo, hi, step)] * n_assets)

    @property
    def n_assets(self) -> int:
        return len(self.step)

    @property
    def shape(self) -> tuple:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def key(self) -> tuple:
        return (self.lo, self.hi, self.step)

    def axis_values(self, a: int) -> np.ndarray:
        return np.arange(self.lo[a], self.hi[a] + 1) * self.step[a]

    @property
    def index(self) -> np.ndarray:
        """``(size, n_assets)`` integer multipliers ``k`` of the steps."""
        ranges = [np.arange(l, h + 1) for l, h in zip(self.lo, self.hi)]
        mesh = np.meshgrid(*ranges, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def points(self) -> np.ndarray:
        return self.index * np.asarray(self.step)

    @property
    def zero_index(self) -> int:
        return int(np.ravel_multi_index(tuple(-l for l in self.lo), self.shape))

    @property
    def max_norm(self) -> float:
        corner = np.maximum(np.abs(self.lo), np.abs(self.hi)) * np.asarray(self.step)
        return float(np.linalg.norm(corner))

    def flat_index(self, k) -> int:
        k = np.asarray(k, dtype=int)
        return int(np.ravel_multi_index(tuple(k - np.asarray(self.lo)), self.shape))

    def on_boundary(self) -> np.ndarray:
        idx = self.index
        return np.any((idx == np.asarray(self.lo)) | (idx == np.asarray(self.hi)), axis=1)

    def refine(self) -> "PositionGrid":
        """Same box, half the step."""
        return PositionGrid(tuple(2 * l for l in self.lo), tuple(2 * h for h in self.hi),
                            tuple(h / 2 for h in self.step))

    def tie_order(self) -> np.ndarray:
        """Candidate order for argmin ties: smallest norm, then lexicographic."""
        pts = self.points
        norms = np.linalg.norm(pts, axis=1)
        keys = [pts[:, a] for a in range(self.n_assets - 1, -1, -1)] + [norms]
        return np.lexsort(keys)

    def interpolator(self, values: np.ndarray) -> RegularGridInterpolator:
        axes = [self.axis_values(a) for a in range(self.n_assets)]
        return RegularGridInterpolator(axes, np.asarray(values).reshape(self.shape),
                                       method="linear", bounds_error=False, fill_value=np.nan)

    def describe(self) -> dict:
        return {
            "axes": [
                {"min": l * h, "max": u * h, "step": h}
                for l, u, h in zip(self.lo, self.hi, self.step)
            ]
        }


@dataclass
class ValueLayer:
    """Tabulated ``gamma_t`` (and ``theta_t`` for ``t < T``) per node and grid point."""

    t: int
    gamma: np.ndarray
    theta: Optional[np.ndarray] = None
    convex: bool = False

    def value(self, node: int, grid: PositionGrid, y) -> float:
        """Multilinear interpolation of ``gamma_t(node, .)`` at ``y``."""
        return float(grid.interpolator(self.gamma[node])(np.atleast_2d(y))[0])


@dataclass
class HedgePolicy:
    """Argmin grid indices: ``argmin[t][node, v_index]`` (``-1`` when infinite)."""

    argmin: list
    grid: PositionGrid

    def target(self, t: int, node: int, v_index: int) -> Optional[np.ndarray]:
        j = int(self.argmin[t][node, v_index])
        return None if j < 0 else self.grid.points[j]


@dataclass
class RadiusBound:
    """Search radius per node and grid point at time ``t``.

    ``i_sphere`` is the zero-claim functional minimized over the unit
    sphere sample, ``i_grid`` its minimum over grid points outside the unit
    ball, rescaled by delta.  The smaller of the two drives the radius.
    """

    t: int
    i_sphere: np.ndarray
    i_grid: np.ndarray
    i_used: np.ndarray
    lam: np.ndarray
    radius: np.ndarray
    fallback: np.ndarray
    source: str = "plain"


@dataclass
class SolverConfig:
    s0: Sequence[float]
    horizon: int
    fallback_radius: object = "auto"
    epsilon: float = EPSILON
    threads: int = 1
    node_cap: int = NODE_CAP
    prune: bool = True
    radius_market: str = "auto"
    sphere_points: int = SPHERE_POINTS


@dataclass
class SolveResult:
    price: float
    layers: list
    policy: HedgePolicy
    radii: list
    lattice: SupportLattice
    grid: PositionGrid
    cost_model: CostModel
    payoff: Payoff
    diagnostics: dict = field(default_factory=dict)
    zero: Optional["SolveResult"] = None
    zero_horizon: Optional["SolveResult"] = None

    @property
    def horizon(self) -> int:
        return self.lattice.horizon

    def gamma(self, t: int, node: int = 0, v=None) -> float:
        j = self.grid.zero_index if v is None else self.grid.flat_index(np.round(np.atleast_1d(v) / self.grid.step))
        return float(self.layers[t].gamma[node, j])


# -- steps ---------------------------------------------------------------

def _diff_table(grid: PositionGrid):
    """Difference lattice ``(k_y - k_v) * step`` and the code map into it."""
    shape = grid.shape
    dshape = tuple(2 * n - 1 for n in shape)
    ranges = [np.arange(-(n - 1), n) for n in shape]
    mesh = np.meshgrid(*ranges, indexing="ij")
    dpts = np.stack([m.ravel() for m in mesh], axis=1) * np.asarray(grid.step)
    strides = np.array([int(np.prod(dshape[a + 1:])) for a in range(len(dshape))], dtype=np.int64)
    code = (grid.index - np.asarray(grid.lo)) @ strides
    base = int(np.asarray([n - 1 for n in shape]) @ strides)
    return dpts, code, base


def terminal_layer(payoff: Payoff, cost_model: CostModel, lattice: SupportLattice,
                   grid: PositionGrid) -> ValueLayer:
    """``gamma_T(s, v) = g^1(s) + C_T(s, (0, g^(2)(s) - v))`` at every leaf and grid point."""
    T = lattice.horizon
    pts = grid.points
    leaves = lattice.nodes[T]
    gamma = np.empty((len(leaves), grid.size))
    for i, s in enumerate(leaves):
        g = payoff_vector(payoff, s, node_id=i)
        z = np.zeros((grid.size, cost_model.dim))
        z[:, 1:] = g[1:] - pts
        gamma[i] = g[0] + cost(cost_model, T, s, z)
    return ValueLayer(T, gamma, None, convex=cost_model.convex)


def sup_step(next_layer: ValueLayer, lattice: SupportLattice, t: int) -> np.ndarray:
    """``theta_t(node, y) = max`` of ``gamma_{t+1}(child, y)`` over the children of ``node``."""
    if next_layer.t != t + 1:
        raise ValueError(f"sup_step at t={t} needs the layer at t={t + 1}, got {next_layer.t}")
    return np.stack([next_layer.gamma[kids].max(axis=0) for kids in lattice.children[t]])


def sphere_sample(n_assets: int, count: int = SPHERE_POINTS) -> np.ndarray:
    """Deterministic sample of unit risky directions.

    Exactly ``{-1, +1}`` for one asset; ``count`` equally spaced angles for
    two; for more, the signed axes plus the first ``count`` points of an
    unscrambled Sobol sequence pushed through the normal quantile.  Samples
    are nested: ``sphere_sample(k, 2 n)`` contains ``sphere_sample(k, n)``.
    """
    if n_assets == 1:
        return np.array([[-1.0], [1.0]])
    if n_assets == 2:
        ang = 2 * np.pi * np.arange(count) / count
        pts = np.column_stack([np.cos(ang), np.sin(ang)])
        return np.round(pts, 15)
    from scipy.stats import norm, qmc

    eye = np.eye(n_assets)
    axes = np.concatenate([eye, -eye])
    # Sobol point 0 sits on the clip boundary and point 1 maps to the origin
    m = int(np.ceil(np.log2(count + 2)))
    sob = qmc.Sobol(n_assets, scramble=False).random_base2(m)[2:count + 2]
    g = norm.ppf(np.clip(sob, 1e-12, 1 - 1e-12))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return np.concatenate([axes, g])


def _zero_functional(zero_model, t, s, theta0_row, grid, directions):
    """``D^0_t(s, 0, z)`` at off-grid directions via interpolation of ``theta^0``."""
    th = grid.interpolator(theta0_row)(directions)
    ok = np.isfinite(th)
    out = np.full(len(directions), np.nan)
    if ok.any():
        out[ok] = zero_model.risky_cost(t, s, directions[ok]) + th[ok]
    return out


def compute_radius(zero_theta: np.ndarray, theta: np.ndarray, cost_model: CostModel,
                   lattice: SupportLattice, grid: PositionGrid, t: int, *,
                   zero_model: Optional[CostModel] = None, fallback_radius=None,
                   epsilon: float = EPSILON, sphere_points: int = SPHERE_POINTS) -> RadiusBound:
    """Radius of the ball that contains every minimizer of ``D_t(s, v, .)``.

    ``zero_theta`` is ``theta^0_t`` of the zero claim in ``zero_model``
    (the market itself, or its horizon market when the cost is not super
    delta-homogeneous).  ``theta`` is ``theta^xi_t`` of the claim being
    priced.  With ``b(v)`` from :meth:`CostModel.shift_bound`,

        lambda(s, v) = |D^xi(s, v, 0)| + max(h_t(s, v), h_t(s, -v), b(v))
        r(s, v)      = delta^{-1}(lambda / i(s)) + 1,

    falling back to ``fallback_radius`` wherever ``i(s) <= epsilon``.
    """
    zero_model = cost_model if zero_model is None else zero_model
    nodes = lattice.nodes[t]
    n = len(nodes)
    pts = grid.points
    norms = np.linalg.norm(pts, axis=1)
    outside = norms >= 1.0
    dirs = sphere_sample(grid.n_assets, sphere_points)
    delta = zero_model.delta

    i_sphere = np.full(n, np.nan)
    i_grid = np.full(n, np.inf)
    lam = np.empty((n, grid.size))
    fallback = np.zeros(n, dtype=bool)
    radius = np.empty((n, grid.size))
    zi = grid.zero_index

    for i, s in enumerate(nodes):
        vals = _zero_functional(zero_model, t, s, zero_theta[i], grid, dirs)
        if np.any(np.isfinite(vals)):
            i_sphere[i] = np.nanmin(vals)
        if delta is not None and outside.any():
            d0 = zero_model.risky_cost(t, s, pts[outside]) + zero_theta[i, outside]
            i_grid[i] = float(np.min(d0 / delta(norms[outside])))
        b = cost_model.shift_bound(t, s, pts)
        d_at_zero = cost_model.risky_cost(t, s, -pts) + theta[i, zi]
        h = np.maximum(cost_model.risky_bound(t, s, pts), cost_model.risky_bound(t, s, -pts))
        lam[i] = np.abs(d_at_zero) + (h if b is None else np.maximum(h, b))

        i_use = np.nanmin([i_sphere[i], i_grid[i]])
        if delta is None or b is None or not i_use > epsilon:
            fallback[i] = True
            if fallback_radius is None:
                raise RadiusDegenerate(
                    f"sphere infimum {i_use:.3g} <= {epsilon:g} at t={t}, node {i}; "
                    "configure a fallback radius"
                )
            radius[i] = float(fallback_radius)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = lam[i] / i_use
            radius[i] = np.where(np.isfinite(ratio), delta.inverse(np.where(np.isfinite(ratio), ratio, 0.0)) + 1.0, np.inf)

    i_used = np.fmin(i_sphere, i_grid)
    source = "plain" if zero_model is cost_model else "horizon"
    return RadiusBound(t, i_sphere, i_grid, i_used, lam, radius, fallback, source)


def _inf_node(t, s, theta_row, cost_model, grid, radius_row, dtab, order, prune):
    dpts, code, base = dtab
    cdiff = cost_model.risky_cost(t, s, dpts)
    norms = np.linalg.norm(grid.points, axis=1)
    cand = order
    if prune:
        rmax = np.max(radius_row)
        cand = order[norms[order] <= rmax]
    cand = cand[np.isfinite(theta_row[cand])] if np.isfinite(theta_row[cand]).any() else cand[:0]
    n = grid.size
    gamma = np.full(n, np.inf)
    arg = np.full(n, -1, dtype=np.intp)
    if cand.size == 0:
        return gamma, arg, 0
    th = theta_row[cand]
    cnorm = norms[cand]
    ccode = code[cand]
    rows = max(1, CHUNK_CELLS // cand.size)
    counted = 0
    for start in range(0, n, rows):
        v = np.arange(start, min(n, start + rows))
        m = cdiff[ccode[None, :] - code[v][:, None] + base] + th[None, :]
        if prune:
            far = cnorm[None, :] > radius_row[v][:, None]
            m[far] = np.inf
            counted += int((~far).sum())
        else:
            counted += m.size
        j = np.argmin(m, axis=1)
        best = m[np.arange(len(v)), j]
        fin = np.isfinite(best)
        gamma[v] = best
        arg[v[fin]] = cand[j[fin]]
    return gamma, arg, counted


def inf_step(theta: np.ndarray, cost_model: CostModel, lattice: SupportLattice,
             grid: PositionGrid, t: int, radius: Optional[RadiusBound] = None, *,
             convex: bool = False, threads: int = 1):
    """``gamma_t(node, v) = min_y C_t(node, (0, y - v)) + theta_t(node, y)``.

    ``y`` ranges over grid points within ``radius`` (all grid points when
    ``radius`` is None).  Ties go to the smallest ``|y|``, then the
    lexicographically smallest ``y``.  Returns the layer, the argmin table
    and the number of candidates evaluated.
    """
    nodes = lattice.nodes[t]
    dtab = _diff_table(grid)
    order = grid.tie_order()
    prune = radius is not None
    rad = radius.radius if prune else np.full((len(nodes), grid.size), np.inf)

    def work(i):
        return _inf_node(t, nodes[i], theta[i], cost_model, grid, rad[i], dtab, order, prune)

    if threads and threads > 1 and len(nodes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            out = list(ex.map(work, range(len(nodes))))
    else:
        out = [work(i) for i in range(len(nodes))]
    gamma = np.stack([o[0] for o in out])
    arg = np.stack([o[1] for o in out])
    counted = sum(o[2] for o in out)
    return ValueLayer(t, gamma, theta, convex=convex), arg, counted


# -- full solve ----------------------------------------------------------

_ZERO_CACHE: "OrderedDict[tuple, tuple]" = OrderedDict()
_ZERO_CACHE_SIZE = 16


def clear_zero_cache() -> None:
    _ZERO_CACHE.clear()


def _resolve_threads(threads):
    if threads is None:
        return 1
    if threads == 0:
        return os.cpu_count() or 1
    return int(threads)


def _radius_market(cost_model: CostModel, mode: str) -> Optional[CostModel]:
    if mode == "plain":
        return cost_model
    if mode == "horizon":
        return cost_model.horizon_model()
    if mode != "auto":
        raise ValueError(f"unknown radius market {mode!r}")
    if cost_model.delta is not None:
        return cost_model
    return cost_model.horizon_model()


def _default_fallback(payoff, lattice, grid):
    T = lattice.horizon
    g = np.array([payoff_vector(payoff, s, node_id=i)[1:] for i, s in enumerate(lattice.nodes[T])])
    return 10.0 * float(np.max(np.abs(g))) + grid.max_norm


def _is_zero_claim(payoff, lattice):
    T = lattice.horizon
    return all(not np.any(payoff_vector(payoff, s, node_id=i)) for i, s in enumerate(lattice.nodes[T]))


def _zero_solve(cost_model, lattice, grid, cfg, support_key):
    """Memoized zero-claim solve keyed on (market, support, grid, s0, horizon)."""
    key = (id(cost_model), support_key, grid.key, tuple(np.asarray(cfg.s0, float).tolist()),
           cfg.horizon, cfg.radius_market, cfg.prune)
    hit = _ZERO_CACHE.get(key)
    if hit is not None and hit[0]() is cost_model:
        _ZERO_CACHE.move_to_end(key)
        return hit[1]
    res = solve_on_lattice(cost_model, lattice, zero_claim(cost_model.dim), grid, cfg,
                           _support_key=support_key, _allow_inf=True)
    _ZERO_CACHE[key] = (weakref.ref(cost_model), res)
    while len(_ZERO_CACHE) > _ZERO_CACHE_SIZE:
        _ZERO_CACHE.popitem(last=False)
    return res


def zero_solve(cost_model: CostModel, lattice: SupportLattice, grid: PositionGrid,
               config: SolverConfig, *, horizon: bool = False) -> SolveResult:
    """Zero-claim solve on ``lattice`` (of the horizon market when ``horizon``), memoized."""
    market = cost_model.horizon_model() if horizon else cost_model
    return _zero_solve(market, lattice, grid, config, ("lattice", id(lattice)))


def solve_on_lattice(cost_model: CostModel, lattice: SupportLattice, payoff: Payoff,
                     grid: PositionGrid, config: SolverConfig, *, _support_key=None,
                     _allow_inf=False) -> SolveResult:
    """Run the backward recursion on an already built lattice."""
    if grid.n_assets != cost_model.n_assets or payoff.dim != cost_model.dim:
        raise ValueError("grid, payoff and market disagree on the number of assets")
    support_key = _support_key if _support_key is not None else ("lattice", id(lattice))
    threads = _resolve_threads(config.threads)
    T = lattice.horizon
    fb = config.fallback_radius
    if isinstance(fb, str):
        if fb != "auto":
            raise ValueError("fallback_radius must be a number, None or 'auto'")
        fb = _default_fallback(payoff, lattice, grid)

    zmodel = _radius_market(cost_model, config.radius_market) if config.prune else None
    is_zero = _is_zero_claim(payoff, lattice)
    zero_res = zero_hz = None
    if config.prune and not (is_zero and zmodel is cost_model):
        if zmodel is not cost_model:
            zero_hz = _zero_solve(zmodel, lattice, grid, config, support_key)
        else:
            zero_res = _zero_solve(cost_model, lattice, grid, config, support_key)

    layers = [None] * (T + 1)
    layers[T] = terminal_layer(payoff, cost_model, lattice, grid)
    argmins = [None] * T
    radii = [None] * T
    stats = []
    for t in range(T - 1, -1, -1):
        theta = sup_step(layers[t + 1], lattice, t)
        rb = None
        if config.prune:
            if zero_hz is not None:
                ztheta = zero_hz.layers[t].theta
            elif zero_res is not None:
                ztheta = zero_res.layers[t].theta
            else:
                ztheta = theta
            rb = compute_radius(ztheta, theta, cost_model, lattice, grid, t, zero_model=zmodel,
                                fallback_radius=fb, epsilon=config.epsilon,
                                sphere_points=config.sphere_points)
            radii[t] = rb
            if rb.fallback.any():
                log.warning("t=%d: radius fallback engaged at %d node(s)", t, int(rb.fallback.sum()))
        layer, arg, counted = inf_step(theta, cost_model, lattice, grid, t, rb,
                                       convex=cost_model.convex, threads=threads)
        layers[t] = layer
        argmins[t] = arg
        fin = layer.gamma[np.isfinite(layer.gamma)]
        stats.append({
            "t": t,
            "nodes": len(lattice.nodes[t]),
            "gamma_min": float(fin.min()) if fin.size else None,
            "gamma_max": float(fin.max()) if fin.size else None,
            "candidates": int(counted),
            "radius_max": None if rb is None else float(np.max(rb.radius)),
            "radius_min": None if rb is None else float(np.min(rb.radius)),
            "i_used_min": None if rb is None else float(np.nanmin(rb.i_used)),
            "fallback_nodes": 0 if rb is None else int(rb.fallback.sum()),
        })
        if not np.isfinite(layer.gamma).any() and not _allow_inf:
            raise NotHedgeable(f"every cell of layer t={t} is +infinity")

    stats.reverse()
    price = float(layers[0].gamma[0, grid.zero_index])
    lip = [cost_model.lipschitz(s) for layer_nodes in lattice.nodes for s in layer_nodes]
    lip_max = None if any(l is None for l in lip) else float(max(np.max(l) for l in lip))
    diagnostics = {
        "layers": stats,
        "layer_sizes": lattice.layer_sizes,
        "grid_points": grid.size,
        "fallback_radius": fb,
        "radius_market": None if zmodel is None else ("plain" if zmodel is cost_model else "horizon"),
        "lipschitz": lip_max,
        "lipschitz_step": None if lip_max is None else lip_max * max(grid.step),
    }
    res = SolveResult(price, layers, HedgePolicy(argmins, grid), radii, lattice, grid,
                      cost_model, payoff, diagnostics,
                      zero=zero_res, zero_horizon=zero_hz)
    if is_zero and zmodel is cost_model:
        res.zero = res
    if not np.isfinite(price) and not _allow_inf:
        err = NotHedgeable("the claim is not hedgeable on this grid (gamma_0 = +inf)")
        err.result = res
        raise err
    return res


def solve(cost_model: CostModel, support_model: SupportModel, payoff: Payoff,
          grid: PositionGrid, config: SolverConfig) -> SolveResult:
    """Minimal super-hedging cost ``gamma_0(s0, 0)`` and the hedge policy.

    Builds the lattice from ``config.s0`` over ``config.horizon`` steps,
    then runs :func:`terminal_layer` and, for ``t = T-1 .. 0``,
    :func:`sup_step`, :func:`compute_radius` and :func:`inf_step`.  The
    zero-claim solve behind the radius is memoized.
    """
    s0 = cost_model.check_state(config.s0)
    lattice = build_lattice(support_model, s0, config.horizon, config.node_cap)
    return solve_on_lattice(cost_model, lattice, payoff, grid, config,
                            _support_key=("support", id(support_model)))


# -- forward checks --------------------------------------------------------

@dataclass
class RolloutReport:
    worst_shortfall: float
    n_paths: int
    paths: list
    truncated: bool
    initial_cash: float

    def as_dict(self):
        return {"worst_shortfall": self.worst_shortfall, "n_paths": self.n_paths,
                "truncated": self.truncated, "initial_cash": self.initial_cash}


def rollout(policy: HedgePolicy, lattice: SupportLattice, cost_model: CostModel, payoff: Payoff,
            initial_cash: float, max_paths: int = 10_000) -> RolloutReport:
    """Follow the policy along the lattice and measure terminal shortfalls.

    Each rebalance from ``v`` to ``y`` debits ``C_t(s, (0, y - v))`` from
    cash.  At maturity the shortfall is ``L_T(s, V_T - g(s))``; the worst
    case over all paths is found by forward propagation over the reachable
    ``(node, position)`` pairs, and up to ``max_paths`` paths are listed.
    """
    grid = policy.grid
    pts = grid.points
    T = lattice.horizon
    d = cost_model.dim

    def trade(t, s, vi, yi):
        z = np.zeros(d)
        z[1:] = pts[yi] - pts[vi]
        return float(cost(cost_model, t, s, z))

    def shortfall(s, leaf, cash, yi):
        g = payoff_vector(payoff, s, node_id=leaf)
        z = np.concatenate([[cash], pts[yi]]) - g
        return float(liquidation(cost_model, T, s, z))

    frontier = {(0, grid.zero_index): float(initial_cash)}
    for t in range(T):
        nxt = {}
        for (node, vi), cash in frontier.items():
            yi = int(policy.argmin[t][node, vi])
            s = lattice.nodes[t][node]
            if yi < 0:
                c = -np.inf
                yi = vi
            else:
                c = cash - trade(t, s, vi, yi)
            for child in lattice.children[t][node]:
                k = (int(child), yi)
                nxt[k] = min(nxt.get(k, np.inf), c)
        frontier = nxt
    worst = np.inf
    for (leaf, yi), cash in frontier.items():
        sf = -np.inf if not np.isfinite(cash) else shortfall(lattice.nodes[T][leaf], leaf, cash, yi)
        worst = min(worst, sf)

    listed = []
    for path in lattice.paths(limit=max_paths):
        vi = grid.zero_index
        cash = float(initial_cash)
        trades, costs = [], []
        for t, node in enumerate(path[:-1]):
            yi = int(policy.argmin[t][node, vi])
            if yi < 0:
                cash = -np.inf
                break
            c = trade(t, lattice.nodes[t][node], vi, yi)
            cash -= c
            trades.append(pts[yi].tolist())
            costs.append(c)
            vi = yi
        leaf = path[-1]
        sf = -np.inf if not np.isfinite(cash) else shortfall(lattice.nodes[T][leaf], leaf, cash, vi)
        listed.append({"path": list(path), "trades": trades, "costs": costs,
                       "terminal_cash": cash, "shortfall": sf})
    n_paths = lattice.n_paths()
    return RolloutReport(float(worst), n_paths, listed, n_paths > len(listed), float(initial_cash))


# -- layer checks and export ----------------------------------------------

def convexity_violation(layer: ValueLayer, grid: PositionGrid) -> float:
    """Largest failure of ``f(x - h) + f(x + h) >= 2 f(x)`` along any grid axis."""
    worst = 0.0
    for row in layer.gamma:
        f = row.reshape(grid.shape)
        for a in range(grid.n_assets):
            if grid.shape[a] < 3:
                continue
            lo = np.take(f, range(0, grid.shape[a] - 2), axis=a)
            mid = np.take(f, range(1, grid.shape[a] - 1), axis=a)
            hi = np.take(f, range(2, grid.shape[a]), axis=a)
            ok = np.isfinite(lo) & np.isfinite(mid) & np.isfinite(hi)
            gap = (2 * mid - lo - hi)[ok]
            if gap.size:
                worst = max(worst, float(gap.max()))
    return worst


def export_layers_csv(result: SolveResult, path) -> None:
    """Columns: ``t, node_id, s0.., v0.., gamma, theta, y0..`` (theta/argmin empty at T)."""
    grid = result.grid
    pts = grid.points
    k = grid.n_assets
    m = result.cost_model.state_dim
    header = (["t", "node_id"] + [f"s{j}" for j in range(m)] + [f"v{j}" for j in range(k)]
              + ["gamma", "theta"] + [f"y{j}" for j in range(k)])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for layer in result.layers:
            t = layer.t
            arg = result.policy.argmin[t] if t < result.horizon else None
            for node, s in enumerate(result.lattice.nodes[t]):
                for j in range(grid.size):
                    th = "" if layer.theta is None else repr(float(layer.theta[node, j]))
                    if arg is None or arg[node, j] < 0:
                        y = [""] * k
                    else:
                        y = [repr(float(x)) for x in pts[arg[node, j]]]
                    w.writerow([t, node] + [repr(float(x)) for x in s]
                               + [repr(float(x)) for x in pts[j]]
                               + [repr(float(layer.gamma[node, j])), th] + y)
