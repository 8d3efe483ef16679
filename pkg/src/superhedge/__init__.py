"""Super-hedging costs of European claims under transaction costs.

A market is a cost function ``C_t(s, z)`` on a finite scenario lattice.
:func:`solve` runs the backward recursion on a uniform position grid and
returns the minimal initial cash, the value layers and a hedge policy.
"""
from .arbitrage import (
    ArbitrageReport,
    check_aip,
    check_arbitrage,
    check_saip,
    check_saip_horizon,
    estimate_null_space,
)
from .errors import (
    ArbitrageParams,
    ConfigError,
    EmptySupport,
    InvalidState,
    LatticeExplosion,
    LayoutMismatch,
    NegativePayoff,
    NonConvergent,
    NotApplicable,
    NotHedgeable,
    RadiusDegenerate,
    SuperhedgeError,
    TooLarge,
)
from .market import (
    IDENTITY_DELTA,
    CostModel,
    CustomCost,
    DeltaLaw,
    FixedCostModel,
    OrderBookCost,
    ProportionalCost,
    cost,
    frictionless,
    horizon_cost,
    liquidation,
    probe_properties,
)
from .oracle import EnumerationInstance, binomial_frictionless_price, enumerate_price, verify_superhedge
from .payoff import Basket, CashSettledCall, CashSettledPut, CustomTable, Payoff, PhysicalCall, zero_claim
from .solver import (
    HedgePolicy,
    PositionGrid,
    RadiusBound,
    SolveResult,
    SolverConfig,
    ValueLayer,
    compute_radius,
    convexity_violation,
    export_layers_csv,
    inf_step,
    rollout,
    solve,
    solve_on_lattice,
    sup_step,
    terminal_layer,
    zero_solve,
)
from .support import (
    AdditiveSupport,
    MultiplicativeSupport,
    SupportLattice,
    SupportModel,
    TableSupport,
    build_lattice,
    successors,
)

__version__ = "0.1.0"
