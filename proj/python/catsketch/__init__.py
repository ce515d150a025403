"""Online sketching of incomplete categorical data streams."""

from ._core import (
    Model,
    NumericalError,
    OnlineLearner,
    default_config,
    gen_synthetic,
    impute,
    log_tail,
    log_tail_diff,
    run_config,
    solve_sketch,
)

__all__ = [
    "Model",
    "NumericalError",
    "OnlineLearner",
    "default_config",
    "gen_synthetic",
    "impute",
    "log_tail",
    "log_tail_diff",
    "run_config",
    "solve_sketch",
]
