"""Low-degree advantage and total-variation tools (compiled core in _ldtv)."""

from ._ldtv import (
    BudgetExceeded,
    InvalidArgument,
    NumericalError,
    __version__,
    biased_product_bound,
    chi_theta,
    chi_theta_edges,
    describe_schema,
    experiment_kinds,
    hermite_values,
    krawtchouk_values,
    poly_cf,
    run_experiment,
    run_experiment_csv,
    weight_law_bound,
)

__all__ = [
    "BudgetExceeded",
    "InvalidArgument",
    "NumericalError",
    "__version__",
    "biased_product_bound",
    "chi_theta",
    "chi_theta_edges",
    "describe_schema",
    "experiment_kinds",
    "hermite_values",
    "krawtchouk_values",
    "poly_cf",
    "run_experiment",
    "run_experiment_csv",
    "weight_law_bound",
]
