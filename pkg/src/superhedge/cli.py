"""Batch driver: ``superhedge {price,check,hedge,converge} --config run.json``.

Results go to stdout as JSON (and to ``<out-dir>/<command>.json`` with CSV
side files when ``--out-dir`` is given).  Output is deterministic; wall
times are only included with ``--timing``.

Exit codes: 0 ok, 2 configuration error, 3 not hedgeable, 4 degenerate
radius without fallback, 5 internal error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from .arbitrage import TOL_AIP, TOL_SAIP, check_arbitrage
from .errors import (
    ConfigError,
    EmptySupport,
    InvalidState,
    LatticeExplosion,
    LayoutMismatch,
    NegativePayoff,
    NotHedgeable,
    RadiusDegenerate,
)
from .market import FixedCostModel, OrderBookCost, ProportionalCost
from .payoff import Basket, CashSettledCall, CashSettledPut, CustomTable, PhysicalCall, zero_claim
from .solver import PositionGrid, SolverConfig, export_layers_csv, rollout, solve_on_lattice
from .support import AdditiveSupport, MultiplicativeSupport, TableSupport, build_lattice

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_HEDGEABLE = 3
EXIT_RADIUS = 4
EXIT_INTERNAL = 5

SHORTFALL_TOL = 1e-8
MONOTONE_TOL = 1e-9

log = logging.getLogger("superhedge")


def load_schema() -> dict:
    return json.loads(resources.files("superhedge").joinpath("config_schema.json").read_text())


def validate_config(doc) -> None:
    """Raise :class:`ConfigError` naming the first offending key."""
    errors = sorted(Draft202012Validator(load_schema()).iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.path) or "<root>"
        raise ConfigError(f"{where}: {e.message}")


def load_config(path) -> tuple:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    validate_config(doc)
    return doc, path.resolve().parent


@dataclass
class Run:
    doc: dict
    model: object
    support: object
    payoff: object
    grid: PositionGrid
    s0: np.ndarray
    solver: SolverConfig
    tol: dict


def _inf(xs):
    return [np.inf if x is None else float(x) for x in xs]


def _need(section, key, what):
    if key not in section:
        raise ConfigError(f"{what}: missing key '{key}'")
    return section[key]


def build_market(doc):
    m = doc["market"]
    kind = m["kind"]
    n = m.get("n_assets", 1)
    st = doc["initial_state"]
    if kind == "frictionless":
        model = ProportionalCost(n)
        if "state" in st:
            return model, model.check_state(_inf(st["state"]))
        p = _need(st, "price", "initial_state")
        return model, model.state(p, p)
    if kind == "proportional":
        model = ProportionalCost(n)
        if "state" in st:
            return model, model.check_state(_inf(st["state"]))
        return model, model.state(_need(st, "bid", "initial_state"), _need(st, "ask", "initial_state"))
    if kind == "fixed_cost":
        model = FixedCostModel(n)
        if "state" in st:
            return model, model.check_state(_inf(st["state"]))
        return model, model.state(_need(st, "bid", "initial_state"), _need(st, "ask", "initial_state"),
                                  _need(st, "fee", "initial_state"))
    model = OrderBookCost(n, m.get("depth", 2))
    if "state" in st:
        return model, model.check_state(_inf(st["state"]))
    books = [([tuple(l) for l in b["bids"]], [tuple(l) for l in b["asks"]])
             for b in _need(st, "books", "initial_state")]
    return model, model.state(books)


def build_support(doc, model, base):
    sp = doc["support"]
    kind = sp["kind"]
    mask = sp.get("mask", "prices")
    if mask == "prices":
        mask = model.price_mask()
    elif mask == "all":
        mask = None
    if kind == "multiplicative":
        return MultiplicativeSupport(_need(sp, "factors", "support"), mask=mask)
    if kind == "additive":
        return AdditiveSupport(_need(sp, "increments", "support"), mask=mask)
    if "csv" in sp:
        return TableSupport.from_csv(base / sp["csv"], model.state_dim)
    entries = _need(sp, "entries", "support")
    return TableSupport([(e["t"], _inf(e["parent"]), _inf(e["child"])) for e in entries])


def build_payoff(doc, model, base):
    p = doc["payoff"]
    kind = p["kind"]
    d = model.dim
    if kind == "zero":
        return zero_claim(d)
    if kind == "table":
        default = p.get("default")
        if "csv" in p:
            return CustomTable.from_csv(base / p["csv"], d, default=default)
        return CustomTable(p.get("values", {}), d, default=default)
    if kind == "basket":
        w = _need(p, "weights", "payoff")
        coords = [model.mid_coords(i) for i in range(len(w))]
        return Basket(_need(p, "strike", "payoff"), w, coords, dim=d)
    asset = p.get("asset", 0)
    if asset >= model.n_assets:
        raise ConfigError(f"payoff: asset {asset} out of range")
    coords = model.mid_coords(asset)
    strike = _need(p, "strike", "payoff")
    if kind == "cash_call":
        return CashSettledCall(strike, coords, d)
    if kind == "cash_put":
        return CashSettledPut(strike, coords, d)
    return PhysicalCall(strike, asset, coords, d)


def build_grid(doc, model):
    g = doc["grid"]
    if "axes" in g:
        axes = [(a["min"], a["max"], a["step"]) for a in g["axes"]]
        if len(axes) != model.n_assets:
            raise ConfigError(f"grid: {len(axes)} axes for {model.n_assets} risky assets")
        return PositionGrid.from_axes(axes)
    for k in ("min", "max", "step"):
        _need(g, k, "grid")
    return PositionGrid.uniform(g["min"], g["max"], g["step"], model.n_assets)


def build_run(doc, base, threads=1) -> Run:
    try:
        model, s0 = build_market(doc)
        support = build_support(doc, model, base)
        payoff = build_payoff(doc, model, base)
        grid = build_grid(doc, model)
    except ConfigError:
        raise
    except (LayoutMismatch, InvalidState, NegativePayoff, ValueError, KeyError, FileNotFoundError) as exc:
        raise ConfigError(str(exc)) from exc
    tol = {"aip": TOL_AIP, "saip": TOL_SAIP, "epsilon": 1e-10,
           "shortfall": SHORTFALL_TOL, "monotone": MONOTONE_TOL}
    tol.update(doc.get("tolerances", {}))
    cfg = SolverConfig(
        s0=s0,
        horizon=doc["horizon"],
        fallback_radius=doc.get("fallback_radius", "auto"),
        epsilon=tol["epsilon"],
        threads=threads,
        sphere_points=doc.get("sphere_points", 128),
    )
    if "node_cap" in doc:
        cfg.node_cap = doc["node_cap"]
    return Run(doc, model, support, payoff, grid, s0, cfg, tol)


def _lattice(run):
    try:
        return build_lattice(run.support, run.s0, run.solver.horizon, run.solver.node_cap)
    except (EmptySupport, LatticeExplosion, LayoutMismatch) as exc:
        raise ConfigError(f"support: {exc}") from exc


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else None
    return x


def _arbitrage(run, lattice):
    return check_arbitrage(run.model, lattice, run.grid, run.solver,
                           tol_aip=run.tol["aip"], tol_saip=run.tol["saip"],
                           sphere_points=run.solver.sphere_points).as_dict()


def _solve(run, lattice):
    return solve_on_lattice(run.model, lattice, run.payoff, run.grid, run.solver)


def _summary(res):
    return {
        "price": res.price,
        "grid": res.grid.describe(),
        "layer_sizes": res.lattice.layer_sizes,
        "layers": res.diagnostics["layers"],
        "radius_market": res.diagnostics["radius_market"],
        "lipschitz_step": res.diagnostics["lipschitz_step"],
    }


def cmd_price(run, out_dir=None):
    lattice = _lattice(run)
    res = _solve(run, lattice)
    doc = {"command": "price", **_summary(res), "arbitrage": _arbitrage(run, lattice)}
    if out_dir is not None:
        export_layers_csv(res, out_dir / "value_layers.csv")
    return doc


def cmd_check(run, out_dir=None):
    lattice = _lattice(run)
    return {"command": "check", "layer_sizes": lattice.layer_sizes,
            "market": run.model.describe(), "arbitrage": _arbitrage(run, lattice)}


def _slack(run, res, slack):
    if slack == "lipschitz":
        ls = res.diagnostics["lipschitz_step"]
        return 0.0 if ls is None else ls
    return float(slack)


def cmd_hedge(run, out_dir=None, initial_cash=None):
    lattice = _lattice(run)
    res = _solve(run, lattice)
    hedge = run.doc.get("hedge", {})
    slack = _slack(run, res, hedge.get("slack", 0.0))
    cash = initial_cash if initial_cash is not None else hedge.get("initial_cash")
    if cash is None:
        cash = res.price + slack
    rep = rollout(res.policy, lattice, run.model, run.payoff, cash, max_paths=hedge.get("max_paths", 10_000))
    doc = {
        "command": "hedge",
        "price": res.price,
        "initial_cash": float(cash),
        "worst_shortfall": rep.worst_shortfall,
        "super_replicates": bool(rep.worst_shortfall >= -run.tol["shortfall"]),
        "n_paths": rep.n_paths,
        "paths_listed": len(rep.paths),
        "truncated": rep.truncated,
    }
    if out_dir is not None:
        with open(out_dir / "rollout_paths.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path_id", "nodes", "trades", "costs", "terminal_cash", "shortfall"])
            for i, p in enumerate(rep.paths):
                w.writerow([i, " ".join(map(str, p["path"])),
                            " ".join(";".join(repr(float(x)) for x in y) for y in p["trades"]),
                            " ".join(repr(float(c)) for c in p["costs"]),
                            repr(float(p["terminal_cash"])), repr(float(p["shortfall"]))])
    return doc


def cmd_converge(run, out_dir=None, levels=None):
    levels = levels or run.doc.get("converge", {}).get("levels", 4)
    if levels < 1:
        raise ConfigError("converge: levels must be >= 1")
    lattice = _lattice(run)
    grid = run.grid
    rows = []
    for _ in range(levels):
        run.grid = grid
        res = _solve(run, lattice)
        rows.append({"step": list(grid.step), "price": res.price})
        grid = grid.refine()
    finest = rows[-1]["price"]
    for r in rows:
        r["delta_from_finest"] = r["price"] - finest
    prices = [r["price"] for r in rows]
    tol = run.tol["monotone"]
    monotone = all(b <= a + tol for a, b in zip(prices, prices[1:]))
    if not monotone:
        log.warning("refinement prices are not nonincreasing within %g", tol)
    if out_dir is not None:
        with open(out_dir / "convergence.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "price", "delta_from_finest"])
            for r in rows:
                w.writerow([" ".join(repr(float(h)) for h in r["step"]), repr(r["price"]),
                            repr(r["delta_from_finest"])])
    return {"command": "converge", "levels": levels, "rows": rows, "monotone": monotone,
            "tolerance": tol}


COMMANDS = {"price": cmd_price, "check": cmd_check, "hedge": cmd_hedge, "converge": cmd_converge}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="superhedge", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="run configuration (JSON)")
    common.add_argument("--out-dir", help="directory for JSON and CSV outputs")
    common.add_argument("--threads", type=int, default=1, help="worker threads (0 = all cores)")
    common.add_argument("--verbose", action="store_true", help="log progress to stderr")
    common.add_argument("--timing", action="store_true", help="add wall time to the JSON output")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("price", parents=[common], help="minimal super-hedging cost")
    sub.add_parser("check", parents=[common], help="AIP / SAIP / LAIP diagnostics")
    h = sub.add_parser("hedge", parents=[common], help="roll the hedge policy forward")
    h.add_argument("--cash", type=float, help="initial cash (default: price + slack)")
    c = sub.add_parser("converge", parents=[common], help="price under successive grid halvings")
    c.add_argument("--levels", type=int, help="number of grids (default 4)")
    return parser


def run_command(argv=None) -> tuple:
    """Parse ``argv`` and run; returns ``(exit code, result document or None)``."""
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.threads < 0:
        print("error: --threads must be >= 0", file=sys.stderr)
        return EXIT_CONFIG, None
    out_dir = None
    try:
        doc, base = load_config(args.config)
        run = build_run(doc, base, threads=args.threads)
        if args.out_dir:
            out_dir = Path(args.out_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
        extra = {}
        if args.command == "hedge":
            extra["initial_cash"] = args.cash
        if args.command == "converge":
            extra["levels"] = args.levels
        start = time.perf_counter()
        result = COMMANDS[args.command](run, out_dir, **extra)
        if args.timing:
            result["timing_seconds"] = time.perf_counter() - start
        log.info("%s finished", args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG, None
    except NotHedgeable as exc:
        print(f"not hedgeable: {exc}", file=sys.stderr)
        return EXIT_NOT_HEDGEABLE, None
    except RadiusDegenerate as exc:
        print(f"radius degenerate: {exc}", file=sys.stderr)
        return EXIT_RADIUS, None
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL, None
    result = _clean(result)
    text = json.dumps(result, indent=2, sort_keys=True)
    print(text)
    if out_dir is not None:
        (out_dir / f"{args.command}.json").write_text(text + "\n")
    return EXIT_OK, result


def main(argv=None) -> int:
    code, _ = run_command(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
