"""Conditional supports of the market state and the scenario lattice.

The support of ``S_{t+1}`` given ``S_t = s`` is represented by a finite list
of successor maps ``alpha_m(s)``: coordinatewise factors, additive
increments, or an explicit lookup table.  :func:`build_lattice` walks the
maps from the initial state and merges states that agree within a relative
tolerance, so recombining trees stay small.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import EmptySupport, LatticeExplosion, LayoutMismatch

__all__ = [
    "SupportModel",
    "MultiplicativeSupport",
    "AdditiveSupport",
    "TableSupport",
    "SupportLattice",
    "successors",
    "build_lattice",
    "states_close",
    "RECOMBINE_RTOL",
    "NODE_CAP",
]

RECOMBINE_RTOL = 1e-9
RECOMBINE_ATOL = 1e-12
NODE_CAP = 10**6


def states_close(a, b, rtol=RECOMBINE_RTOL):
    """Coordinatewise closeness used for recombination (``inf == inf``)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.isclose(a, b, rtol=rtol, atol=RECOMBINE_ATOL).all(axis=-1)


def _dedupe(states, rtol):
    """Merge near-equal rows, keeping each group's lexicographically smallest row.

    Returns the representatives (sorted lexicographically) and, for every
    input row, the index of its representative.
    """
    states = np.asarray(states, dtype=float)
    order = np.lexsort(states.T[::-1])
    reps: List[np.ndarray] = []
    rep_first = []
    owner = np.empty(len(states), dtype=np.intp)
    for i in order:
        x = states[i]
        found = -1
        # reps arrive in lexicographic order; only those whose first coordinate
        # is within tolerance of x[0] can match
        j = len(reps) - 1
        while j >= 0:
            f = rep_first[j]
            if not np.isclose(f, x[0], rtol=rtol, atol=RECOMBINE_ATOL) and f < x[0]:
                break
            if states_close(reps[j], x, rtol):
                found = j
            j -= 1
        if found < 0:
            reps.append(x)
            rep_first.append(x[0])
            found = len(reps) - 1
        owner[i] = found
    return np.asarray(reps), owner


class SupportModel:
    """Finite Castaing-style representation of the conditional support."""

    kind = "abstract"

    def __init__(self, rtol: float = RECOMBINE_RTOL):
        self.rtol = rtol

    def raw_successors(self, t: int, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def radius(self, t: int, s) -> float:
        """Continuous bound ``R_t(s)`` on the norm of the finite successor coordinates."""
        raise NotImplementedError


class MultiplicativeSupport(SupportModel):
    """Successors ``s * f`` for each factor vector ``f``.

    ``factors`` is a list of scalars or length-``m`` vectors; ``mask``
    restricts the factors to some coordinates (e.g. prices but not sizes
    or fees).
    """

    kind = "multiplicative"

    def __init__(self, factors, mask=None, rtol: float = RECOMBINE_RTOL):
        super().__init__(rtol)
        self.factors = [np.atleast_1d(np.asarray(f, dtype=float)) for f in factors]
        if not self.factors:
            raise EmptySupport("multiplicative support needs at least one factor")
        if any(np.any(f <= 0) for f in self.factors):
            raise ValueError("multiplicative factors must be positive")
        self.mask = None if mask is None else np.asarray(mask, dtype=bool)

    def _apply(self, s, f):
        mult = np.broadcast_to(f, s.shape) if f.size in (1, s.size) else None
        if mult is None:
            raise LayoutMismatch(f"factor of length {f.size} for a state of length {s.size}")
        if self.mask is not None:
            mult = np.where(self.mask, mult, 1.0)
        return s * mult

    def raw_successors(self, t, s):
        s = np.asarray(s, dtype=float)
        return np.stack([self._apply(s, f) for f in self.factors])

    def radius(self, t, s):
        s = np.asarray(s, dtype=float)
        big = np.max(np.stack([np.abs(self._apply(s, f)) for f in self.factors]), axis=0)
        big = big[np.isfinite(big)]
        return float(np.sqrt(np.sum(big**2)))


class AdditiveSupport(SupportModel):
    """Successors ``s + inc`` for each increment vector."""

    kind = "additive"

    def __init__(self, increments, mask=None, rtol: float = RECOMBINE_RTOL):
        super().__init__(rtol)
        self.increments = [np.atleast_1d(np.asarray(d, dtype=float)) for d in increments]
        if not self.increments:
            raise EmptySupport("additive support needs at least one increment")
        self.mask = None if mask is None else np.asarray(mask, dtype=bool)

    def _apply(self, s, d):
        if d.size not in (1, s.size):
            raise LayoutMismatch(f"increment of length {d.size} for a state of length {s.size}")
        d = np.broadcast_to(d, s.shape)
        if self.mask is not None:
            d = np.where(self.mask, d, 0.0)
        return s + d

    def raw_successors(self, t, s):
        s = np.asarray(s, dtype=float)
        return np.stack([self._apply(s, d) for d in self.increments])

    def radius(self, t, s):
        s = np.asarray(s, dtype=float)
        fin = np.isfinite(s)
        big = np.max(np.stack([np.abs(self._apply(s, d)) for d in self.increments]), axis=0)
        return float(np.sqrt(np.sum(big[fin] ** 2)))


class TableSupport(SupportModel):
    """Explicit successor map ``(t, parent state) -> child states``.

    Parents are matched with the recombination tolerance.  Children keep
    the order in which they were added.
    """

    kind = "table"

    def __init__(self, entries=None, rtol: float = RECOMBINE_RTOL):
        super().__init__(rtol)
        self._table = {}
        for t, parent, child in entries or []:
            self.add(t, parent, child)

    def add(self, t, parent, child):
        parent = np.atleast_1d(np.asarray(parent, dtype=float))
        child = np.atleast_1d(np.asarray(child, dtype=float))
        if parent.shape != child.shape:
            raise LayoutMismatch("parent and child states need the same length")
        rows = self._table.setdefault(int(t), [])
        for p, kids in rows:
            if p.shape == parent.shape and states_close(p, parent, self.rtol):
                kids.append(child)
                return
        rows.append((parent, [child]))

    def raw_successors(self, t, s):
        s = np.asarray(s, dtype=float)
        for p, kids in self._table.get(int(t), []):
            if p.shape == s.shape and states_close(p, s, self.rtol):
                return np.stack(kids)
        return np.empty((0, s.size))

    def radius(self, t, s):
        kids = self.raw_successors(t, s)
        if kids.shape[0] == 0:
            return 0.0
        k = np.where(np.isfinite(kids), kids, 0.0)
        return float(np.max(np.linalg.norm(k, axis=1)))

    @classmethod
    def from_csv(cls, path, state_dim: int, rtol: float = RECOMBINE_RTOL):
        """Load ``t, p0..p{m-1}, c0..c{m-1}`` rows (header optional)."""
        table = cls(rtol=rtol)
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().lower() == "t":
                    continue
                vals = [float(x) for x in row]
                if len(vals) != 1 + 2 * state_dim:
                    raise LayoutMismatch(
                        f"table rows need {1 + 2 * state_dim} columns, got {len(vals)}"
                    )
                table.add(int(vals[0]), vals[1:1 + state_dim], vals[1 + state_dim:])
        return table


def successors(model: SupportModel, t: int, s) -> np.ndarray:
    """Deduplicated successor states of ``s`` at time ``t``, in first-seen order."""
    raw = model.raw_successors(t, s)
    if raw.shape[0] == 0:
        raise EmptySupport(f"no successor for state {np.asarray(s).tolist()} at t={t}")
    keep = []
    for x in raw:
        if not any(states_close(x, k, model.rtol) for k in keep):
            keep.append(x)
    return np.stack(keep)


@dataclass(frozen=True)
class SupportLattice:
    """Materialized scenario lattice.

    ``nodes[t]`` is an ``(n_t, m)`` array; ``children[t][i]`` holds the
    indices in ``nodes[t + 1]`` of the successors of node ``i``.
    """

    nodes: tuple
    children: tuple

    @property
    def horizon(self) -> int:
        return len(self.nodes) - 1

    @property
    def layer_sizes(self) -> list:
        return [len(n) for n in self.nodes]

    @property
    def root(self) -> np.ndarray:
        return self.nodes[0][0]

    def n_paths(self) -> int:
        counts = np.ones(len(self.nodes[-1]), dtype=object)
        for t in range(self.horizon - 1, -1, -1):
            counts = np.array([sum(counts[c] for c in kids) for kids in self.children[t]], dtype=object)
        return int(counts[0])

    def paths(self, limit: Optional[int] = None):
        """Yield root-to-leaf node index tuples (depth first)."""
        stack = [(0,)]
        count = 0
        while stack:
            path = stack.pop()
            t = len(path) - 1
            if t == self.horizon:
                yield path
                count += 1
                if limit is not None and count >= limit:
                    return
                continue
            for c in reversed(self.children[t][path[-1]]):
                stack.append(path + (int(c),))


def build_lattice(model: SupportModel, s0, horizon: int, node_cap: int = NODE_CAP) -> SupportLattice:
    """Expand the support model from ``s0`` over ``horizon`` steps."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    layer = np.atleast_2d(np.asarray(s0, dtype=float))
    nodes = [layer]
    children = []
    for t in range(horizon):
        per_parent = [successors(model, t, s) for s in layer]
        flat = np.concatenate(per_parent)
        if len(flat) > node_cap * 64:
            raise LatticeExplosion(f"layer {t + 1} would examine {len(flat)} raw states")
        reps, owner = _dedupe(flat, model.rtol)
        if len(reps) > node_cap:
            raise LatticeExplosion(f"layer {t + 1} has {len(reps)} nodes (cap {node_cap})")
        kids, start = [], 0
        for block in per_parent:
            kids.append(np.asarray(owner[start:start + len(block)], dtype=np.intp))
            start += len(block)
        children.append(tuple(kids))
        layer = reps
        nodes.append(layer)
    return SupportLattice(tuple(nodes), tuple(children))
