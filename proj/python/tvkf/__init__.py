"""Kalman-style filters for time-varying stochastic convex optimization.

Thin wrapper over the compiled extension: JSON-string entry points are
decoded into dictionaries here, everything else passes through.
"""

import json as _json

from tvkf._core import (  # noqa: F401
    asymptotic_error_bound,
    contraction_factors,
    is_nsd,
    lmi_feasible_matrix,
    lmi_feasible_scalar,
    lpv_gain_eval,
    percentile,
    prox,
    solve_linear,
    spectral_norm,
    sym_eig_max,
    sym_eigenvalues,
    tune_chi,
    worst_case_params,
    zeta_xi,
)
from tvkf import _core as _c

__all__ = [
    "asymptotic_error_bound",
    "contraction_factors",
    "design_lpv_gain",
    "design_static_gain",
    "ground_truth",
    "is_nsd",
    "lmi_feasible_matrix",
    "lmi_feasible_scalar",
    "lpv_gain_eval",
    "percentile",
    "prox",
    "run_experiment",
    "solve_linear",
    "spectral_norm",
    "sym_eig_max",
    "sym_eigenvalues",
    "tune_chi",
    "worst_case_params",
    "zeta_xi",
]


def run_experiment(config):
    """Run one experiment from a config dict; returns the report as a dict."""
    return _json.loads(_c.run_experiment_json(_json.dumps(config)))


def ground_truth(config):
    """Ground-truth trajectory for a config dict."""
    return _json.loads(_c.ground_truth_json(_json.dumps(config)))


def design_static_gain(omega1, omega2, q, r, delta, rho_grid=()):
    """Static gain synthesis; returns the certificate as a dict."""
    return _json.loads(
        _c.design_static_gain_json(omega1, omega2, q, r, delta, list(rho_grid))
    )


def design_lpv_gain(omega1, omega2, q0, q1, r, delta, nu=0.4, theta_grid=(), rho_grid=()):
    """LPV gain synthesis; returns the certificate as a dict."""
    return _json.loads(
        _c.design_lpv_gain_json(
            omega1, omega2, q0, q1, r, delta, nu, list(theta_grid), list(rho_grid)
        )
    )
