"""Instantaneous-profit diagnostics computed from zero-claim solves.

All checks read a completed :class:`~superhedge.solver.SolveResult` of the
zero claim.  ``D^0_t(s, 0, z) = C_t(s, (0, z)) + theta^0_t(s, z)`` is
evaluated at unit directions ``z``; ``theta^0`` is interpolated
multilinearly when ``z`` is off the grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NonConvergent, NotApplicable
from .solver import (
    SPHERE_POINTS,
    SolverConfig,
    SolveResult,
    _zero_functional,
    sphere_sample,
    zero_solve,
)

__all__ = [
    "TOL_AIP",
    "TOL_SAIP",
    "AipResult",
    "SaipResult",
    "NullSpace",
    "ArbitrageReport",
    "check_aip",
    "check_saip",
    "check_saip_horizon",
    "estimate_null_space",
    "check_arbitrage",
]

TOL_AIP = 1e-8
TOL_SAIP = 1e-8
RANK_TOL = 1e-8


@dataclass
class AipResult:
    ok: bool
    residual: float
    boundary_hits: list


@dataclass
class SaipResult:
    ok: bool
    i_t: float
    per_node: np.ndarray


@dataclass
class NullSpace:
    laip: bool
    basis: list
    symmetric: bool
    closed: bool


def check_aip(zero: SolveResult, t: int, tol: float = TOL_AIP) -> AipResult:
    """AIP at time ``t``: ``|gamma^0_t(node, 0)| <= tol`` at every node.

    Nodes whose minimizer at ``v = 0`` sits on the grid boundary with a
    negative value are listed in ``boundary_hits``: on a compact grid this
    is how an unbounded-below zero claim shows up.
    """
    grid = zero.grid
    g0 = zero.layers[t].gamma[:, grid.zero_index]
    with np.errstate(invalid="ignore"):
        residual = float(np.max(np.abs(g0)))
    hits = []
    if t < zero.horizon:
        edge = grid.on_boundary()
        arg = zero.policy.argmin[t][:, grid.zero_index]
        for node, (j, g) in enumerate(zip(arg, g0)):
            if j >= 0 and edge[j] and g < -tol:
                hits.append(node)
    ok = bool(np.isfinite(residual) and residual <= tol)
    return AipResult(ok, residual, hits)


def _sphere_values(zero: SolveResult, t: int, dirs: np.ndarray) -> np.ndarray:
    """``D^0_t(node, 0, z)`` for every node (rows) and direction (columns)."""
    layer = zero.layers[t]
    nodes = zero.lattice.nodes[t]
    return np.stack([
        _zero_functional(zero.cost_model, t, s, layer.theta[i], zero.grid, dirs)
        for i, s in enumerate(nodes)
    ])


def check_saip(zero: SolveResult, t: int, tol: float = TOL_SAIP, aip_tol: float = TOL_AIP,
               sphere_points: int = SPHERE_POINTS) -> SaipResult:
    """SAIP at ``t``: AIP and ``i_t = min_{node, z} D^0_t(node, 0, z) > tol``.

    The sphere is exactly ``{-1, +1}`` with one risky asset; otherwise the
    nested sample of :func:`~superhedge.solver.sphere_sample` is used, so
    doubling ``sphere_points`` never raises ``i_t``.  Directions whose
    interpolation leaves the grid are skipped.
    """
    if t >= zero.horizon:
        raise ValueError("SAIP is defined for t < T")
    dirs = sphere_sample(zero.grid.n_assets, sphere_points)
    vals = _sphere_values(zero, t, dirs)
    per_node = np.array([np.nanmin(r) if np.isfinite(r).any() else np.nan for r in vals])
    i_t = float(np.nanmin(per_node)) if np.isfinite(per_node).any() else float("nan")
    aip = check_aip(zero, t, aip_tol).ok
    return SaipResult(bool(aip and i_t > tol), i_t, per_node)


def check_saip_horizon(zero_horizon: SolveResult, t: int, tol: float = TOL_SAIP,
                       aip_tol: float = TOL_AIP, sphere_points: int = SPHERE_POINTS) -> SaipResult:
    """SAIP of the horizon market; pass a zero solve run under the horizon cost."""
    return check_saip(zero_horizon, t, tol, aip_tol, sphere_points)


def estimate_null_space(zero: SolveResult, t: int, tol: float = TOL_SAIP,
                        aip_tol: float = TOL_AIP, sphere_points: int = SPHERE_POINTS) -> NullSpace:
    """Estimate the zero-cost direction space at each node and test LAIP.

    Sample directions with ``D^0(z) <= tol`` are collected and an
    orthonormal basis of their span is extracted by SVD.  LAIP holds when
    AIP holds, every collected ``z`` also has ``D^0(-z) <= tol``, and every
    basis vector and its negative have ``D^0 <= tol``.  ``basis`` holds one
    ``(r, k)`` list per node.
    """
    model = zero.cost_model
    if not model.sub_additive:
        raise NotApplicable(f"null-space estimation needs a sub-additive cost, got {model.kind}")
    dirs = sphere_sample(zero.grid.n_assets, sphere_points)
    layer = zero.layers[t]
    symmetric = closed = True
    bases = []
    for i, s in enumerate(zero.lattice.nodes[t]):
        theta = layer.theta[i]
        d_plus = _zero_functional(model, t, s, theta, zero.grid, dirs)
        zs = dirs[np.nan_to_num(d_plus, nan=np.inf) <= tol]
        if len(zs) == 0:
            bases.append([])
            continue
        d_minus = _zero_functional(model, t, s, theta, zero.grid, -zs)
        if not np.all(np.nan_to_num(d_minus, nan=np.inf) <= tol):
            symmetric = False
        _, sv, vt = np.linalg.svd(zs, full_matrices=False)
        rank = int(np.sum(sv > RANK_TOL * max(1.0, sv[0])))
        basis = vt[:rank]
        both = np.concatenate([basis, -basis])
        db = _zero_functional(model, t, s, theta, zero.grid, both)
        if not np.all(np.nan_to_num(db, nan=np.inf) <= tol):
            closed = False
        bases.append(np.round(basis, 12).tolist())
    aip = check_aip(zero, t, aip_tol).ok
    return NullSpace(bool(aip and symmetric and closed), bases, symmetric, closed)


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else None


@dataclass
class ArbitrageReport:
    """Per-time AIP / SAIP / LAIP / horizon-SAIP flags and the tolerances used."""

    rows: list
    tolerances: dict = field(default_factory=dict)

    @property
    def aip(self) -> bool:
        return all(r["aip"] for r in self.rows)

    @property
    def saip(self) -> bool:
        return all(r["saip"] for r in self.rows)

    def consistent(self) -> bool:
        """``saip => laip => aip`` on every row (LAIP skipped when not applicable)."""
        for r in self.rows:
            if r["saip"] and not r["aip"]:
                return False
            if r["laip"] is not None:
                if r["saip"] and not r["laip"]:
                    return False
                if r["laip"] and not r["aip"]:
                    return False
        return True

    def as_dict(self) -> dict:
        return {"per_time": self.rows, "tolerances": self.tolerances,
                "aip": self.aip, "saip": self.saip}


def check_arbitrage(cost_model, lattice, grid, config: Optional[SolverConfig] = None, *,
                    tol_aip: float = TOL_AIP, tol_saip: float = TOL_SAIP,
                    sphere_points: int = SPHERE_POINTS, horizon: Optional[bool] = None) -> ArbitrageReport:
    """Run every diagnostic for ``t = 0 .. T-1`` and collect the report.

    ``horizon`` controls the horizon-market check: by default it runs for
    markets without a delta law (fixed costs) and for order books.
    """
    if config is None:
        config = SolverConfig(s0=lattice.root, horizon=lattice.horizon)
    zero = zero_solve(cost_model, lattice, grid, config)
    if horizon is None:
        horizon = cost_model.delta is None or cost_model.horizon_model() is not cost_model
    zero_h = None
    if horizon:
        try:
            zero_h = zero_solve(cost_model, lattice, grid, config, horizon=True)
        except NonConvergent:
            zero_h = None
    rows = []
    for t in range(lattice.horizon):
        a = check_aip(zero, t, tol_aip)
        s = check_saip(zero, t, tol_saip, tol_aip, sphere_points)
        row = {
            "t": t,
            "aip": a.ok,
            "aip_residual": _num(a.residual),
            "boundary_hits": a.boundary_hits,
            "saip": s.ok,
            "i_t": _num(s.i_t),
        }
        try:
            ns = estimate_null_space(zero, t, tol_saip, tol_aip, sphere_points)
            row["laip"] = ns.laip
            row["null_basis"] = ns.basis
        except NotApplicable:
            row["laip"] = True if s.ok else None
            row["null_basis"] = None
        if zero_h is not None:
            h = check_saip_horizon(zero_h, t, tol_saip, tol_aip, sphere_points)
            row["horizon_saip"] = h.ok
            row["horizon_i_t"] = _num(h.i_t)
        else:
            row["horizon_saip"] = None
            row["horizon_i_t"] = None
        rows.append(row)
    tols = {"aip": tol_aip, "saip": tol_saip, "rank": RANK_TOL, "sphere_points": sphere_points}
    return ArbitrageReport(rows, tols)
