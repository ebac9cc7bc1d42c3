"""Event-lifetime trend forecasting with right-censoring bias correction.

Thin bindings over the C++ core: growth-curve fitting against failure times,
sliding-window feature plumbing, the regression benchmark's OLS/VIF tools,
sequential hyperparameter search, and checkpoint-based prediction.
"""

from ._core import (
    ValidationError,
    RuntimeError,
    launch_curve,
    solve_failure_lifetime,
    fit_closed_form,
    naive_launch_fit,
    mse,
    rmse,
    log2_target,
    inverse_log2_target,
    make_windows,
    time_split,
    moving_average,
    ols_fit,
    vif,
    pearson_matrix,
    tune_study,
    predict_from_checkpoint,
)

__all__ = [
    "ValidationError",
    "RuntimeError",
    "launch_curve",
    "solve_failure_lifetime",
    "fit_closed_form",
    "naive_launch_fit",
    "mse",
    "rmse",
    "log2_target",
    "inverse_log2_target",
    "make_windows",
    "time_split",
    "moving_average",
    "ols_fit",
    "vif",
    "pearson_matrix",
    "tune_study",
    "predict_from_checkpoint",
]

__version__ = "0.1.0"
