"""Model-data feedback loop simulations (linear regression and n-gram analogs)."""

from ._core import (
    ConfigError,
    NumericalError,
    accumulate_closed_form,
    analytic_curve,
    basel_bound,
    expected_inverse_gram,
    fit_least_squares,
    fit_ridge,
    ngram,
    prefactor,
    run_command,
    run_trial,
    simulate,
)

__all__ = [
    "ConfigError",
    "NumericalError",
    "accumulate_closed_form",
    "analytic_curve",
    "basel_bound",
    "expected_inverse_gram",
    "fit_least_squares",
    "fit_ridge",
    "ngram",
    "prefactor",
    "run_command",
    "run_trial",
    "simulate",
]
