"""Projection of the Fokker-Planck equation onto exponential and mixture families."""

from ._core import (
    ExpFamily,
    FpkError,
    MixtureFamily,
    SdeModel,
    divergences,
    ef_eta_rhs,
    ef_theta_rhs,
    ep_to_canonical,
    galerkin_rhs,
    integrate_ef,
    metric_project_ef,
    metric_project_mix,
    mixture_m_rhs,
    mixture_theta_rhs,
    model_presets,
    residual,
    run_scenario,
    solve_fpk,
)

__all__ = [
    "ExpFamily",
    "FpkError",
    "MixtureFamily",
    "SdeModel",
    "divergences",
    "ef_eta_rhs",
    "ef_theta_rhs",
    "ep_to_canonical",
    "galerkin_rhs",
    "integrate_ef",
    "metric_project_ef",
    "metric_project_mix",
    "mixture_m_rhs",
    "mixture_theta_rhs",
    "model_presets",
    "residual",
    "run_scenario",
    "solve_fpk",
]
