"""Cost and liquidation functions of markets with transaction costs.

A market model maps a market state ``s`` (a flat vector of prices and
volumes, layout fixed per model) and a position ``z`` (cash first, then
the risky assets) to the minimal cash needed to acquire ``z``.  Every model
here is cash invariant, ``C(s, z + a e_1) = C(s, z) + a``, so the models
only implement the risky part ``C(s, (0, y))``.

Built-in models
---------------
OrderBookCost
    Limit order book with ``depth`` price levels per side.  Per asset the
    state block is ``[bid prices, ask prices, bid sizes, ask sizes]`` with
    ``depth`` entries each.  The deepest level has infinite size.
ProportionalCost
    Bid/ask spread, state block ``[bid, ask]`` per asset.  ``bid == ask``
    is the frictionless market.
FixedCostModel
    Bid/ask plus a fixed fee per transaction, block ``[bid, ask, fee]``.
CustomCost
    User supplied cost, bound and structural flags.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidState, LayoutMismatch, NonConvergent

__all__ = [
    "DeltaLaw",
    "IDENTITY_DELTA",
    "CostModel",
    "OrderBookCost",
    "ProportionalCost",
    "FixedCostModel",
    "CustomCost",
    "AxiomResult",
    "PropertyReport",
    "cost",
    "liquidation",
    "horizon_cost",
    "probe_properties",
    "frictionless",
]

PROBE_ATOL = 1e-9
PROBE_RTOL = 1e-9
HORIZON_EXPONENTS = np.arange(4, 21)
HORIZON_RTOL = 1e-9


@dataclass(frozen=True)
class DeltaLaw:
    """Increasing bijection of ``[0, inf]`` used in super delta-homogeneity.

    ``forward(l)`` is delta, ``inverse(r)`` its inverse.  Both must map 0 to
    0 and infinity to infinity.
    """

    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"

    def __call__(self, lam):
        return self.forward(lam)

    @classmethod
    def tabulated(cls, xs: Sequence[float], ys: Sequence[float]) -> "DeltaLaw":
        """Piecewise-linear law through ``(xs, ys)``.

        The table must start at ``(0, 0)`` and be strictly increasing in
        both coordinates; the last segment is extended linearly to infinity.
        """
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
            raise ValueError("delta table needs two 1-D arrays of equal length >= 2")
        if xs[0] != 0.0 or ys[0] != 0.0:
            raise ValueError("delta table must start at (0, 0)")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
            raise ValueError("delta table must be strictly increasing")
        slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])

        def _extend(a, b, sl):
            def f(x):
                x = np.asarray(x, dtype=float)
                out = np.interp(x, a, b)
                tail = x > a[-1]
                return np.where(tail, b[-1] + (x - a[-1]) * sl, out)

            return f

        return cls(_extend(xs, ys, slope), _extend(ys, xs, 1.0 / slope), name="tabulated")


IDENTITY_DELTA = DeltaLaw(lambda x: np.asarray(x, dtype=float), lambda x: np.asarray(x, dtype=float), "identity")


class CostModel:
    """Time-indexed family of cost functions ``C_t(s, z)``.

    Subclasses implement :meth:`risky_cost`, :meth:`validate_state` and the
    bound :meth:`risky_bound`.  Positions are arrays whose last axis has
    length ``dim = n_assets + 1``; coordinate 0 is cash.
    """

    kind = "custom"
    convex = False
    sub_additive = False
    super_additive = False
    delta: Optional[DeltaLaw] = None

    def __init__(self, n_assets: int, state_dim: int):
        if n_assets < 1:
            raise ValueError("a market needs at least one risky asset")
        self.n_assets = int(n_assets)
        self.state_dim = int(state_dim)

    @property
    def dim(self) -> int:
        return self.n_assets + 1

    # -- layout ---------------------------------------------------------
    def check_state(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if s.shape != (self.state_dim,):
            raise LayoutMismatch(
                f"{self.kind} state must have shape ({self.state_dim},), got {s.shape}"
            )
        self.validate_state(s)
        return s

    def validate_state(self, s: np.ndarray) -> None:
        pass

    def _check_risky(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.ndim == 0 or y.shape[-1] != self.n_assets:
            raise LayoutMismatch(
                f"risky positions need a last axis of length {self.n_assets}, got {y.shape}"
            )
        return y

    def _check_position(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.ndim == 0 or z.shape[-1] != self.dim:
            raise LayoutMismatch(f"positions need a last axis of length {self.dim}, got {z.shape}")
        if not np.all(np.isfinite(z)):
            raise ValueError("positions must be finite")
        return z

    def price_mask(self) -> np.ndarray:
        """Boolean mask of state coordinates that are prices."""
        return np.ones(self.state_dim, dtype=bool)

    def mid_coords(self, asset: int) -> tuple:
        """State coordinates whose mean is the reference price of ``asset``."""
        raise NotImplementedError

    # -- cost -----------------------------------------------------------
    def risky_cost(self, t: int, s: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Cost of acquiring ``(0, y)``; ``y`` has shape ``(..., n_assets)``."""
        raise NotImplementedError

    def risky_bound(self, t: int, s: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Continuous bound ``h_t(s, (0, y)) >= |C_t(s, (0, y))|``."""
        raise NotImplementedError

    def horizon_risky_cost(self, t: int, s: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Horizon (recession) cost ``liminf_a C(s, a y) / a``."""
        return _numerical_horizon(lambda yy: self.risky_cost(t, s, yy), y)

    def lipschitz(self, s: np.ndarray) -> Optional[np.ndarray]:
        """Per-asset Lipschitz constants of the risky cost, if finite."""
        return None

    def shift_bound(self, t: int, s: np.ndarray, v: np.ndarray) -> Optional[np.ndarray]:
        """Offset ``b(v)`` with ``C(y - v) >= C(y) - b(v)`` for every ``y``.

        Derived from sub-additivity, super-additivity or a Lipschitz bound,
        whichever the model supports.  ``None`` when none applies.
        """
        v = self._check_risky(v)
        if self.sub_additive:
            return self.risky_cost(t, s, v)
        if self.super_additive:
            return -self.risky_cost(t, s, -v)
        lip = self.lipschitz(s)
        if lip is not None:
            return np.abs(v) @ lip
        return None

    def horizon_model(self) -> "CostModel":
        """Conic market whose cost is :meth:`horizon_risky_cost` (one instance per model)."""
        h = self.__dict__.get("_horizon")
        if h is None:
            h = self._horizon = _HorizonMarket(self)
        return h

    def full_bound(self, t, s, z):
        z = self._check_position(z)
        return np.abs(z[..., 0]) + self.risky_bound(t, s, z[..., 1:])

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "n_assets": self.n_assets,
            "state_dim": self.state_dim,
            "convex": self.convex,
            "sub_additive": self.sub_additive,
            "super_additive": self.super_additive,
            "delta": None if self.delta is None else self.delta.name,
        }


def _numerical_horizon(risky, y):
    """liminf of ``risky(a*y)/a`` over ``a = 2**k``, ``k = 4..20``.

    Returns the running minimum of the tail averages of the ratios and
    raises :class:`NonConvergent` if the tail of the schedule oscillates.
    """
    y = np.asarray(y, dtype=float)
    alphas = 2.0 ** HORIZON_EXPONENTS
    ratios = np.stack([risky(a * y) / a for a in alphas], axis=0)
    n = ratios.shape[0]
    tail_sums = np.cumsum(ratios[::-1], axis=0)[::-1]
    tail_avgs = tail_sums / np.arange(n, 0, -1).reshape((-1,) + (1,) * (ratios.ndim - 1))
    estimate = np.min(tail_avgs, axis=0)

    tail = ratios[n // 2:]
    steps = np.diff(tail, axis=0)
    scale = HORIZON_RTOL * np.maximum(1.0, np.abs(tail[-1]))
    big = np.abs(steps) > scale
    rising = np.any(big & (steps > 0), axis=0)
    falling = np.any(big & (steps < 0), axis=0)
    spread = np.max(tail, axis=0) - np.min(tail, axis=0)
    if np.any(rising & falling & (spread > scale)):
        raise NonConvergent("horizon cost ratios oscillate across the alpha schedule")
    return estimate


class _HorizonMarket(CostModel):
    kind = "horizon"
    convex = True
    sub_additive = True
    delta = IDENTITY_DELTA

    def __init__(self, base: CostModel):
        super().__init__(base.n_assets, base.state_dim)
        self.base = base

    def validate_state(self, s):
        self.base.validate_state(s)

    def price_mask(self):
        return self.base.price_mask()

    def mid_coords(self, asset):
        return self.base.mid_coords(asset)

    def risky_cost(self, t, s, y):
        return self.base.horizon_risky_cost(t, s, self._check_risky(y))

    horizon_risky_cost = risky_cost

    def risky_bound(self, t, s, y):
        return self.base.risky_bound(t, s, y)

    def lipschitz(self, s):
        return self.base.lipschitz(s)

    def horizon_model(self):
        return self


def _split_sides(y):
    return np.maximum(y, 0.0), np.maximum(-y, 0.0)


class ProportionalCost(CostModel):
    """Bid/ask market: buy at the ask, sell at the bid.

    State layout: ``[bid_1, ask_1, bid_2, ask_2, ...]``, one pair per risky
    asset.  Positively homogeneous, convex and sub-additive.
    """

    kind = "proportional"
    convex = True
    sub_additive = True
    delta = IDENTITY_DELTA

    def __init__(self, n_assets: int = 1):
        super().__init__(n_assets, 2 * n_assets)

    def state(self, bid, ask) -> np.ndarray:
        bid = np.atleast_1d(np.asarray(bid, dtype=float))
        ask = np.atleast_1d(np.asarray(ask, dtype=float))
        s = np.column_stack([bid, ask]).ravel()
        return self.check_state(s)

    def _pairs(self, s):
        p = s.reshape(self.n_assets, 2)
        return p[:, 0], p[:, 1]

    def validate_state(self, s):
        bid, ask = self._pairs(s)
        if not (np.all(np.isfinite(s)) and np.all(bid > 0)):
            raise InvalidState("bid and ask prices must be finite and positive")
        if np.any(bid > ask):
            raise InvalidState("bid price above ask price")

    def mid_coords(self, asset):
        return (2 * asset, 2 * asset + 1)

    def risky_cost(self, t, s, y):
        y = self._check_risky(y)
        bid, ask = self._pairs(s)
        buy, sell = _split_sides(y)
        return buy @ ask - sell @ bid

    horizon_risky_cost = risky_cost

    def risky_bound(self, t, s, y):
        bid, ask = self._pairs(s)
        return np.abs(self._check_risky(y)) @ np.maximum(bid, ask)

    def lipschitz(self, s):
        bid, ask = self._pairs(s)
        return np.maximum(bid, ask)

    def horizon_model(self):
        return self


def frictionless(n_assets: int = 1) -> ProportionalCost:
    """Proportional market meant to be used with ``bid == ask`` states."""
    return ProportionalCost(n_assets)


class OrderBookCost(CostModel):
    """Limit order book cost, walking the book level by level.

    Per asset the state block has ``4 * depth`` entries: bid prices
    (decreasing), ask prices (increasing), bid sizes and ask sizes.  The
    deepest size on each side is ``inf``.  Buying ``y`` units consumes ask
    levels in order and pays ``sum N_r S_r + (y - Q_j) S_{j+1}`` where
    ``Q_j`` is the cumulated size of the first ``j`` levels; selling walks
    the bid side the same way.
    """

    kind = "order_book"
    convex = True
    delta = IDENTITY_DELTA

    def __init__(self, n_assets: int = 1, depth: int = 2):
        if depth < 1:
            raise ValueError("order book depth must be >= 1")
        self.depth = int(depth)
        super().__init__(n_assets, 4 * depth * n_assets)

    def state(self, books) -> np.ndarray:
        """Build a state from ``[(bids, asks), ...]``, one book per asset.

        ``bids`` and ``asks`` are lists of ``(price, size)``; a size of
        ``None`` stands for ``inf``.
        """
        if len(books) != self.n_assets:
            raise LayoutMismatch(f"expected {self.n_assets} books, got {len(books)}")
        blocks = []
        for bids, asks in books:
            if len(bids) != self.depth or len(asks) != self.depth:
                raise LayoutMismatch(f"each side needs {self.depth} levels")
            size = lambda q: np.inf if q is None else float(q)  # noqa: E731
            blocks.append(
                [p for p, _ in bids] + [p for p, _ in asks]
                + [size(q) for _, q in bids] + [size(q) for _, q in asks]
            )
        return self.check_state(np.asarray(blocks, dtype=float).ravel())

    def _blocks(self, s):
        k = self.depth
        b = s.reshape(self.n_assets, 4, k)
        return b[:, 0], b[:, 1], b[:, 2], b[:, 3]

    def validate_state(self, s):
        bp, ap, bq, aq = self._blocks(s)
        prices = np.concatenate([bp.ravel(), ap.ravel()])
        if not (np.all(np.isfinite(prices)) and np.all(prices > 0)):
            raise InvalidState("order book prices must be finite and positive")
        sizes = np.concatenate([bq.ravel(), aq.ravel()])
        if np.any(np.isnan(sizes)) or np.any(sizes <= 0):
            raise InvalidState("order book sizes must be positive")
        if not (np.all(np.isinf(bq[:, -1])) and np.all(np.isinf(aq[:, -1]))):
            raise InvalidState("the deepest level must have infinite size")
        if np.any(np.isinf(bq[:, :-1])) or np.any(np.isinf(aq[:, :-1])):
            raise InvalidState("only the deepest level may have infinite size")
        if np.any(np.diff(bp, axis=1) >= 0) or np.any(np.diff(ap, axis=1) <= 0):
            raise InvalidState("bids must strictly decrease and asks strictly increase")
        if np.any(bp[:, 0] >= ap[:, 0]):
            raise InvalidState("best bid must be below best ask")

    def price_mask(self):
        mask = np.zeros((self.n_assets, 4, self.depth), dtype=bool)
        mask[:, :2] = True
        return mask.ravel()

    def mid_coords(self, asset):
        base = 4 * self.depth * asset
        return (base, base + self.depth)

    @staticmethod
    def _walk(prices, sizes, u):
        """Cash exchanged for ``u >= 0`` units walking one side of the book."""
        cum_q = np.cumsum(sizes[:-1])
        cum_v = np.cumsum(sizes[:-1] * prices[:-1])
        q0 = np.concatenate([[0.0], cum_q])
        v0 = np.concatenate([[0.0], cum_v])
        j = np.searchsorted(cum_q, u, side="left")
        return v0[j] + (u - q0[j]) * prices[j]

    def risky_cost(self, t, s, y):
        y = self._check_risky(y)
        bp, ap, bq, aq = self._blocks(s)
        buy, sell = _split_sides(y)
        out = np.zeros(y.shape[:-1])
        for i in range(self.n_assets):
            out = out + self._walk(ap[i], aq[i], buy[..., i]) - self._walk(bp[i], bq[i], sell[..., i])
        return out

    def horizon_risky_cost(self, t, s, y):
        y = self._check_risky(y)
        bp, ap, _, _ = self._blocks(s)
        buy, sell = _split_sides(y)
        return buy @ ap[:, -1] - sell @ bp[:, -1]

    def risky_bound(self, t, s, y):
        return np.abs(self._check_risky(y)) @ self.lipschitz(s)

    def lipschitz(self, s):
        bp, ap, _, _ = self._blocks(s)
        return np.maximum(bp.max(axis=1), ap.max(axis=1))


class FixedCostModel(CostModel):
    """Bid/ask market with a fixed fee charged on every nonzero trade.

    State block per asset: ``[bid, ask, fee]``.  The liquidation value of
    ``y > 0`` units is ``(y * bid - fee)^+``; buying ``y > 0`` costs
    ``y * ask + fee``.  Sub-additive but not convex, and the fee makes the
    cost lower (not super) homogeneous.  Its horizon market is the
    proportional bid/ask market.
    """

    kind = "fixed_cost"
    sub_additive = True

    def __init__(self, n_assets: int = 1):
        super().__init__(n_assets, 3 * n_assets)

    def state(self, bid, ask, fee) -> np.ndarray:
        cols = [np.atleast_1d(np.asarray(a, dtype=float)) for a in (bid, ask, fee)]
        return self.check_state(np.column_stack(cols).ravel())

    def _triples(self, s):
        p = s.reshape(self.n_assets, 3)
        return p[:, 0], p[:, 1], p[:, 2]

    def validate_state(self, s):
        bid, ask, fee = self._triples(s)
        if not np.all(np.isfinite(s)):
            raise InvalidState("fixed-cost state must be finite")
        if np.any(bid <= 0) or np.any(bid > ask):
            raise InvalidState("need 0 < bid <= ask")
        if np.any(fee < 0):
            raise InvalidState("fees must be nonnegative")

    def price_mask(self):
        mask = np.zeros((self.n_assets, 3), dtype=bool)
        mask[:, :2] = True
        return mask.ravel()

    def mid_coords(self, asset):
        return (3 * asset, 3 * asset + 1)

    def risky_cost(self, t, s, y):
        y = self._check_risky(y)
        bid, ask, fee = self._triples(s)
        buy = np.where(y > 0, y * ask + fee, 0.0)
        sell = np.where(y < 0, -np.maximum(-y * bid - fee, 0.0), 0.0)
        return (buy + sell).sum(axis=-1)

    def horizon_risky_cost(self, t, s, y):
        y = self._check_risky(y)
        bid, ask, _ = self._triples(s)
        buy, sell = _split_sides(y)
        return buy @ ask - sell @ bid

    def risky_bound(self, t, s, y):
        y = self._check_risky(y)
        bid, ask, fee = self._triples(s)
        return (np.abs(y) * np.maximum(bid, ask) + fee).sum(axis=-1)


class CustomCost(CostModel):
    """Cost model from user callables.

    Parameters
    ----------
    n_assets, state_dim : int
        Number of risky assets and length of the state vector.
    risky_cost : callable ``(t, s, y) -> array``
        Cost of ``(0, y)``, vectorized over the leading axes of ``y``.
    bound : callable ``(t, s, y) -> array``
        Continuous bound ``h_t(s, (0, y))``; required.
    convex, sub_additive, super_additive : bool
        Declared structure; :func:`probe_properties` can verify it.
    delta : DeltaLaw, optional
        Super homogeneity law, e.g. ``DeltaLaw.tabulated``.
    lipschitz : callable ``s -> array``, optional
    mid_coords : callable ``asset -> tuple``, optional
    price_mask : array of bool, optional
    validate : callable ``s -> None``, optional
    """

    kind = "custom"

    def __init__(self, n_assets, state_dim, risky_cost, bound, *, convex=False,
                 sub_additive=False, super_additive=False, delta=None,
                 lipschitz=None, mid_coords=None, price_mask=None, validate=None,
                 horizon=None):
        super().__init__(n_assets, state_dim)
        if bound is None:
            raise ValueError("custom cost models must supply a bound h_t")
        self._cost = risky_cost
        self._bound = bound
        self._lip = lipschitz
        self._mid = mid_coords
        self._mask = None if price_mask is None else np.asarray(price_mask, dtype=bool)
        self._validate = validate
        self._horizon = horizon
        self.convex = bool(convex)
        self.sub_additive = bool(sub_additive)
        self.super_additive = bool(super_additive)
        self.delta = delta

    def validate_state(self, s):
        if self._validate is not None:
            self._validate(s)

    def price_mask(self):
        if self._mask is None:
            return super().price_mask()
        return self._mask

    def mid_coords(self, asset):
        if self._mid is None:
            raise NotImplementedError("custom model has no reference price")
        return tuple(self._mid(asset))

    def risky_cost(self, t, s, y):
        return np.asarray(self._cost(t, s, self._check_risky(y)), dtype=float)

    def risky_bound(self, t, s, y):
        return np.asarray(self._bound(t, s, self._check_risky(y)), dtype=float)

    def horizon_risky_cost(self, t, s, y):
        if self._horizon is not None:
            return np.asarray(self._horizon(t, s, self._check_risky(y)), dtype=float)
        return super().horizon_risky_cost(t, s, y)

    def lipschitz(self, s):
        return None if self._lip is None else np.asarray(self._lip(s), dtype=float)


# -- public operations ---------------------------------------------------

def cost(model: CostModel, t: int, s, z):
    """Minimal cash needed at time ``t`` in state ``s`` to acquire ``z``."""
    s = model.check_state(s)
    z = model._check_position(z)
    return z[..., 0] + model.risky_cost(t, s, z[..., 1:])


def liquidation(model: CostModel, t: int, s, z):
    """Cash obtained by liquidating ``z``; ``z`` is solvent iff this is >= 0."""
    return -cost(model, t, s, -np.asarray(z, dtype=float))


def horizon_cost(model: CostModel, t: int, s, z):
    """Positively homogeneous horizon cost ``liminf_a C(s, a z) / a``.

    Closed forms for the built-in models; custom models without one fall
    back to a numerical liminf over ``a = 2**4 .. 2**20``.
    """
    s = model.check_state(s)
    z = model._check_position(z)
    return z[..., 0] + model.horizon_risky_cost(t, s, z[..., 1:])


@dataclass
class AxiomResult:
    name: str
    declared: bool
    checked: int = 0
    violations: int = 0
    worst: float = 0.0

    @property
    def passed(self) -> bool:
        return self.violations == 0


@dataclass
class PropertyReport:
    model: str
    results: dict = field(default_factory=dict)

    def __getitem__(self, name) -> AxiomResult:
        return self.results[name]

    @property
    def ok(self) -> bool:
        """True when every axiom the model declares (or must satisfy) holds."""
        return all(r.passed for r in self.results.values() if r.declared)

    def failures(self):
        return [r.name for r in self.results.values() if not r.passed]

    def as_dict(self):
        return {
            n: {"declared": r.declared, "checked": r.checked, "violations": r.violations,
                "passed": r.passed, "worst": r.worst}
            for n, r in self.results.items()
        }


def _violation(lhs, rhs):
    """Amount by which ``lhs <= rhs`` fails beyond the probe tolerance."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    slack = PROBE_ATOL + PROBE_RTOL * np.maximum(np.abs(lhs), np.abs(rhs))
    return np.maximum(lhs - rhs - slack, 0.0)


def _record(report, name, declared, excess):
    excess = np.atleast_1d(excess)
    res = report.results.setdefault(name, AxiomResult(name, declared))
    res.checked += excess.size
    res.violations += int(np.count_nonzero(excess > 0))
    if excess.size:
        res.worst = max(res.worst, float(excess.max()))


def probe_properties(model: CostModel, t: int, sample_states, sample_positions,
                     lambdas=None, terminal: bool = True, rng=None) -> PropertyReport:
    """Check the cost axioms and the declared flags on samples.

    Always checked: ``C(s, 0) = 0``, cash invariance, ``|C| <= h_t``,
    monotonicity w.r.t. the positive orthant (when ``terminal``) and super
    delta-homogeneity (with the identity law if the model declares none;
    then the check is informative only).  Sub-/super-additivity and
    convexity are checked when declared.
    """
    states = [model.check_state(s) for s in sample_states]
    z = model._check_position(np.atleast_2d(np.asarray(sample_positions, dtype=float)))
    if not states or z.shape[0] == 0:
        raise ValueError("need nonempty state and position samples")
    rng = np.random.default_rng(0) if rng is None else rng
    lambdas = np.concatenate([[1.0, 2.0], rng.uniform(1.0, 5.0, 8)]) if lambdas is None \
        else np.asarray(lambdas, dtype=float)
    if np.any(lambdas < 1):
        raise ValueError("homogeneity is probed for lambda >= 1 only")
    delta = model.delta if model.delta is not None else IDENTITY_DELTA
    report = PropertyReport(model.kind)
    other = z[rng.permutation(z.shape[0])]
    shift = rng.normal(scale=10.0, size=z.shape[0])

    for s in states:
        c = lambda x: cost(model, t, s, x)  # noqa: E731
        cz = c(z)
        zero = c(np.zeros(model.dim))
        _record(report, "zero", True, np.abs(zero) - PROBE_ATOL)
        moved = z.copy()
        moved[:, 0] += shift
        _record(report, "cash_invariance", True,
                np.abs(c(moved) - cz - shift)
                - (PROBE_ATOL + PROBE_RTOL * np.maximum(np.abs(cz), np.abs(shift))))
        _record(report, "bound", True, _violation(np.abs(cz), model.full_bound(t, s, z)))
        if terminal:
            bump = np.abs(other)
            _record(report, "monotone", True, _violation(cz, c(z + bump)))
        _record(report, "sub_additive", model.sub_additive, _violation(c(z + other), cz + c(other)))
        _record(report, "super_additive", model.super_additive, _violation(cz + c(other), c(z + other)))
        for lam in lambdas:
            _record(report, "delta_homogeneous", model.delta is not None,
                    _violation(delta(lam) * cz, c(lam * z)))
        mid = 0.5 * (z + other)
        _record(report, "convex", model.convex, _violation(c(mid), 0.5 * (cz + c(other))))
    return report
