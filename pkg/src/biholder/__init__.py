"""Numerical checks for locally biHoelder maps between Ahlfors regular spaces
and the Besov-space embeddings they induce."""

from .besov import (
    BesovParams,
    DiscretizationParams,
    SampledFunction,
    admissible_smoothness,
    besov_seminorm,
    compose,
    default_discretization,
    discrete_besov,
    embedding_ratio_study,
    gen_bumps,
    lp_norm,
)
from .mapping import (
    HolderParams,
    QsParams,
    SampledMap,
    check_local_biholder,
    check_uniform_boundedness,
    fit_local_biholder,
    fit_power_qs,
    inverse_params,
    qs_to_holder_constants,
    transfer_ub,
)
from .space import (
    SampledSpace,
    Window,
    build_cantor,
    build_grid,
    check_uniform_perfectness,
    estimate_regularity,
    snowflake,
)

__version__ = "0.1.0"

__all__ = [
    "BesovParams",
    "DiscretizationParams",
    "HolderParams",
    "QsParams",
    "SampledFunction",
    "SampledMap",
    "SampledSpace",
    "Window",
    "admissible_smoothness",
    "besov_seminorm",
    "build_cantor",
    "build_grid",
    "check_local_biholder",
    "check_uniform_boundedness",
    "check_uniform_perfectness",
    "compose",
    "default_discretization",
    "discrete_besov",
    "embedding_ratio_study",
    "estimate_regularity",
    "fit_local_biholder",
    "fit_power_qs",
    "gen_bumps",
    "inverse_params",
    "lp_norm",
    "qs_to_holder_constants",
    "snowflake",
    "transfer_ub",
]
