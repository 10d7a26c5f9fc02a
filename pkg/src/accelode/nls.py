"""Nonlinear least squares baseline via Levenberg-Marquardt.

The residual Jacobian comes from the first-order sensitivity system
(Gauss-Newton; the full-Newton Jacobian belongs to the one-step
update).  Damping uses Marquardt's diagonal scaling with a
doubling/halving schedule.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .accel import AccelConfig, EstimateReport, preliminary_estimate
from .errors import MaxIterationsExceeded, SingularJacobian
from .inference import (asymptotic_variances, confidence_intervals,
                        fisher_info)
from .ode_core import (DEFAULT_TOL, Dataset, OdeModel, ParameterVector,
                       ToleranceSpec, integrate)
from .sensitivity import solve_sensitivities

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class NlsConfig:
    eta0: Optional[ParameterVector] = None  # default: SME, largest bandwidth
    max_iter: int = 200
    gtol: float = 1e-8
    xtol: float = 1e-12
    lam0: float = 1e-3
    lam_max: float = 1e10
    level: float = 0.95
    tol: ToleranceSpec = DEFAULT_TOL
    raise_on_failure: bool = False

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.gtol <= 0 or self.xtol <= 0:
            raise ValueError("tolerances must be positive")


def _residuals_and_jacobian(model, eta, data, tol):
    sol = solve_sensitivities(model, eta, float(data.times[-1]),
                              order="first", tol=tol)
    x, s, _ = sol.at(data.times)
    resid = (data.values.T - x).ravel()           # (n*d,)
    mask = eta.estimate_mask
    J = -s[:, :, mask].reshape(resid.size, -1)    # (n*d, q_est)
    return resid, J


def _rss_at(model, eta, data, tol):
    traj = integrate(model, eta, float(data.times[-1]), tol)
    return float(np.sum((data.values - traj(data.times)) ** 2))


def nls_fit(model: OdeModel, data: Dataset, config: NlsConfig = NlsConfig(),
            pipeline: AccelConfig = AccelConfig()) -> EstimateReport:
    """Minimize the least squares criterion; inference fields are filled
    at the minimizer with the same machinery as the one-step report."""
    if data.times[0] != 0.0:
        data = Dataset(data.times - data.times[0], data.values)
    eta = config.eta0
    prelim = None
    if eta is None:
        b_max = pipeline.bandwidth_candidates(data).max()
        eta = preliminary_estimate(model, data, b_max, pipeline)
        prelim = eta
    mask = eta.estimate_mask

    lam = config.lam0
    resid, J = _residuals_and_jacobian(model, eta, data, config.tol)
    rss = float(resid @ resid)
    n_solves = 1
    status = "max_iterations"
    for _ in range(config.max_iter):
        grad = J.T @ resid  # = -Psi over estimated components
        if np.max(np.abs(grad)) < config.gtol:
            status = "gradient_converged"
            break
        H = J.T @ J
        dH = np.diag(H).copy()
        if np.any(dH <= 0):
            raise SingularJacobian("residual Jacobian has a zero column")
        # Marquardt scaling: damp in units of the diagonal, which also
        # equilibrates parameters living on very different scales
        dd = np.sqrt(dH)
        Hs = H / np.outer(dd, dd)
        step = None
        while lam <= config.lam_max:
            A = Hs + lam * np.eye(dd.size)
            sv = np.linalg.svd(A, compute_uv=False)
            if sv[-1] <= 0 or sv[0] / sv[-1] > MAX_CONDITION:
                lam *= 2.0
                continue
            delta = np.linalg.solve(A, -grad / dd) / dd
            trial_vec = eta.eta.copy()
            trial_vec[mask] += delta
            trial = eta.with_eta(trial_vec)
            try:
                rss_trial = _rss_at(model, trial, data, config.tol)
            except Exception:
                rss_trial = np.inf
            if np.isfinite(rss_trial) and rss_trial <= rss:
                step = (trial, rss_trial, delta)
                break
            lam *= 2.0
        if step is None:
            status = "stalled"
            break
        eta, rss, delta = step
        lam = max(lam / 2.0, 1e-14)
        resid, J = _residuals_and_jacobian(model, eta, data, config.tol)
        n_solves += 1
        rel_step = np.max(np.abs(delta) / (np.abs(eta.eta[mask]) + config.xtol))
        if rel_step < config.xtol:
            status = "step_converged"
            break

    converged = status in ("gradient_converged", "step_converged")

    n, d = data.n, data.dim_state
    sigma2 = rss / (d * (n - 1)) if n > 1 else 0.0
    fisher = None
    ci = None
    asym = None
    if sigma2 > 0:
        fisher = fisher_info(model, eta, sigma2, float(data.times[-1]),
                             tol=config.tol)
        asym = asymptotic_variances(fisher, n)
        ci = confidence_intervals(eta, fisher, n, config.level)
    report = EstimateReport(
        method="nls",
        eta_prelim=prelim,
        eta_est=eta,
        selected_bandwidth=float("nan"),
        rss=rss,
        sigma2_hat=sigma2,
        fisher=fisher,
        ci=ci,
        asym_var=asym,
        level=config.level,
        diagnostics={
            "status": status,
            "converged": converged,
            "iterations": n_solves,
            "lambda": lam,
        },
    )
    if not converged and config.raise_on_failure:
        raise MaxIterationsExceeded(
            f"Levenberg-Marquardt did not converge ({status})", report)
    return report
