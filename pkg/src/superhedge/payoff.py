"""European claims ``xi = g(S_T)`` with nonnegative payoff vectors.

A payoff vector has one coordinate per asset, cash first, so a claim may
deliver cash and risky units.  Every built-in payoff reads its reference
price as the mean of a few state coordinates (for instance the best bid
and best ask), chosen with :meth:`CostModel.mid_coords`.
"""
from __future__ import annotations

import csv
from typing import Optional, Sequence

import numpy as np

from .errors import LayoutMismatch, NegativePayoff

__all__ = [
    "Payoff",
    "CashSettledCall",
    "CashSettledPut",
    "PhysicalCall",
    "Basket",
    "CustomTable",
    "zero_claim",
    "payoff_vector",
]


class Payoff:
    """Base class.  ``dim`` is the number of assets including cash."""

    kind = "abstract"

    def __init__(self, dim: int):
        if dim < 2:
            raise ValueError("payoffs live in markets with at least one risky asset")
        self.dim = int(dim)

    def evaluate(self, s: np.ndarray, node_id: Optional[int] = None) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": self.kind}


def _price(s, coords):
    return float(np.mean(s[list(coords)]))


class CashSettledCall(Payoff):
    """Pays ``(price - K)^+`` in cash."""

    kind = "cash_call"

    def __init__(self, strike: float, price_coords: Sequence[int], dim: int = 2):
        super().__init__(dim)
        self.strike = float(strike)
        self.price_coords = tuple(int(c) for c in price_coords)

    def evaluate(self, s, node_id=None):
        out = np.zeros(self.dim)
        out[0] = max(_price(s, self.price_coords) - self.strike, 0.0)
        return out

    def describe(self):
        return {"kind": self.kind, "strike": self.strike, "price_coords": list(self.price_coords)}


class CashSettledPut(CashSettledCall):
    """Pays ``(K - price)^+`` in cash."""

    kind = "cash_put"

    def evaluate(self, s, node_id=None):
        out = np.zeros(self.dim)
        out[0] = max(self.strike - _price(s, self.price_coords), 0.0)
        return out


class PhysicalCall(Payoff):
    """Delivers one unit of ``asset`` when ``price >= K``, strike prepaid.

    The strike is not netted against the delivery because payoffs must be
    nonnegative; a caller wanting the net claim pre-composes the strike
    into its own :class:`CustomTable`.
    """

    kind = "physical_call"

    def __init__(self, strike: float, asset: int, price_coords: Sequence[int], dim: int = 2):
        super().__init__(dim)
        if not 0 <= asset < dim - 1:
            raise LayoutMismatch(f"asset index {asset} out of range for dim {dim}")
        self.strike = float(strike)
        self.asset = int(asset)
        self.price_coords = tuple(int(c) for c in price_coords)

    def evaluate(self, s, node_id=None):
        out = np.zeros(self.dim)
        if _price(s, self.price_coords) >= self.strike:
            out[1 + self.asset] = 1.0
        return out

    def describe(self):
        return {"kind": self.kind, "strike": self.strike, "asset": self.asset,
                "price_coords": list(self.price_coords)}


class Basket(Payoff):
    """Cash-settled call on a weighted basket: ``(sum_i w_i p_i - K)^+``."""

    kind = "basket"

    def __init__(self, strike: float, weights: Sequence[float], price_coords: Sequence[Sequence[int]],
                 dim: Optional[int] = None):
        weights = np.asarray(weights, dtype=float)
        if len(price_coords) != weights.size:
            raise LayoutMismatch("one price coordinate group per basket weight")
        super().__init__(dim if dim is not None else weights.size + 1)
        self.strike = float(strike)
        self.weights = weights
        self.price_coords = [tuple(int(c) for c in g) for g in price_coords]

    def evaluate(self, s, node_id=None):
        prices = np.array([_price(s, g) for g in self.price_coords])
        out = np.zeros(self.dim)
        out[0] = max(float(self.weights @ prices) - self.strike, 0.0)
        return out

    def describe(self):
        return {"kind": self.kind, "strike": self.strike, "weights": self.weights.tolist(),
                "price_coords": [list(g) for g in self.price_coords]}


class CustomTable(Payoff):
    """Payoff given per terminal node id, with an optional default vector."""

    kind = "custom_table"

    def __init__(self, values: dict, dim: int, default=None):
        super().__init__(dim)
        self.values = {}
        for k, v in values.items():
            self.values[int(k)] = self._check(v)
        self.default = None if default is None else self._check(default)

    def _check(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise LayoutMismatch(f"payoff vectors need {self.dim} coordinates, got {v.shape}")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise NegativePayoff(f"payoff vector {v.tolist()} is not finite and nonnegative")
        return v

    def evaluate(self, s, node_id=None):
        if node_id is not None and int(node_id) in self.values:
            return self.values[int(node_id)].copy()
        if self.default is None:
            raise KeyError(f"no payoff for terminal node {node_id}")
        return self.default.copy()

    def describe(self):
        return {"kind": self.kind, "n_values": len(self.values),
                "default": None if self.default is None else self.default.tolist()}

    @classmethod
    def from_csv(cls, path, dim: int, default=None):
        """Load ``node_id, g0..g{d-1}`` rows (header optional)."""
        values = {}
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().lower() in ("node_id", "node"):
                    continue
                if len(row) != dim + 1:
                    raise LayoutMismatch(f"payoff rows need {dim + 1} columns, got {len(row)}")
                values[int(row[0])] = [float(x) for x in row[1:]]
        return cls(values, dim, default=default)


def zero_claim(dim: int) -> CustomTable:
    """The claim paying nothing."""
    return CustomTable({}, dim, default=np.zeros(dim))


def payoff_vector(p: Payoff, s, node_id: Optional[int] = None) -> np.ndarray:
    """Evaluate ``g(s)`` and check it is a nonnegative vector of length ``dim``."""
    out = p.evaluate(np.asarray(s, dtype=float), node_id)
    if np.any(out < 0):
        raise NegativePayoff(f"payoff {p.kind} is negative at {np.asarray(s).tolist()}")
    return out
