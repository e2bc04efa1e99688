"""Price intervals, maximal hedges and measure checks for the continuous-binomial market."""

from ._cbm import (
    BasketOption,
    DeformationError,
    MarketModel,
    MeasureInfeasible,
    ModelError,
    backtest_path,
    compute_b,
    gamma_max,
    gamma_max_naive,
    gamma_min,
    hedge_weights,
    mc_price,
    order_assets,
    phi,
    price_interval,
    solve_deformation,
    state_after,
    vertex_weights,
    y_values,
)

__all__ = [
    "BasketOption",
    "DeformationError",
    "MarketModel",
    "MeasureInfeasible",
    "ModelError",
    "backtest_path",
    "compute_b",
    "gamma_max",
    "gamma_max_naive",
    "gamma_min",
    "hedge_weights",
    "mc_price",
    "order_assets",
    "phi",
    "price_interval",
    "solve_deformation",
    "state_after",
    "vertex_weights",
    "y_values",
]
