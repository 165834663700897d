"""Python access to the gffdrift core: analytic tables, field sampling, SDE moments,
resolvent integrals and the command harness."""

from ._gffdrift import (
    ModelParams,
    __version__,
    annealed_moments,
    base_diffusivity,
    command_names,
    config_hash,
    effective_diffusivity,
    g_closed,
    g_table,
    identity_suite,
    l_eps,
    laplace_limit,
    mc_laplace_comparator,
    replacement_residual,
    run_command,
    run_criterion,
    s_closed,
    s_n,
    sample_field,
    theoretical_covariance,
    truncated_diffusivity,
    truncated_limit,
)

__all__ = [
    "ModelParams",
    "__version__",
    "annealed_moments",
    "base_diffusivity",
    "command_names",
    "config_hash",
    "effective_diffusivity",
    "g_closed",
    "g_table",
    "identity_suite",
    "l_eps",
    "laplace_limit",
    "mc_laplace_comparator",
    "replacement_residual",
    "run_command",
    "run_criterion",
    "s_closed",
    "s_n",
    "sample_field",
    "theoretical_covariance",
    "truncated_diffusivity",
    "truncated_limit",
]
