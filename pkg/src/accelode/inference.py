"""Residual variance, Fisher information and Wald confidence intervals."""

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import SingularFisher
from .ode_core import DEFAULT_TOL, OdeModel, ParameterVector, integrate
from .sensitivity import solve_sensitivities

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class FisherMatrix:
    """Information matrix over the estimated components."""

    matrix: np.ndarray   # (q_est, q_est)
    horizon: float
    sigma2: float
    mask: np.ndarray     # estimated-component mask into eta

    def inverse(self):
        # judge conditioning after diagonal equilibration so that
        # parameters on very different scales do not trip the check
        dd = np.sqrt(np.abs(np.diag(self.matrix)))
        dd[dd == 0] = 1.0
        scaled = self.matrix / np.outer(dd, dd)
        sv = np.linalg.svd(scaled, compute_uv=False)
        if sv[-1] <= 0 or sv[0] / sv[-1] > MAX_CONDITION:
            raise SingularFisher(
                "Fisher information matrix is numerically singular")
        return np.linalg.inv(scaled) / np.outer(dd, dd)


def sigma2_hat(model: OdeModel, eta, data, tol=DEFAULT_TOL):
    """Pooled residual mean square with divisor d*(n-1)."""
    if data.n < 2:
        raise ValueError("need at least two observations")
    traj = integrate(model, eta, float(data.times[-1]), tol)
    resid = data.values - traj(data.times)
    return float(np.sum(resid**2) / (data.dim_state * (data.n - 1)))


def fisher_info(model: OdeModel, eta, sigma2, t_end,
                tol=DEFAULT_TOL, grid_size=201) -> FisherMatrix:
    """Information per observation under uniform-in-time sampling:
    (1 / sigma^2) * (1/T) * sum over states of the time integral of the
    outer products of the sensitivities (trapezoidal rule)."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    if isinstance(eta, ParameterVector):
        mask = eta.estimate_mask
    else:
        mask = np.ones(model.dim_eta, dtype=bool)
    sol = solve_sensitivities(model, eta, float(t_end), order="first",
                              tol=tol, grid_size=grid_size)
    s = sol.s[:, :, mask]                       # (m, d, q_est)
    outer = np.einsum("mia,mib->mab", s, s)
    integral = np.trapezoid(outer, sol.grid, axis=0)
    mat = integral / (sigma2 * float(t_end))
    return FisherMatrix(matrix=mat, horizon=float(t_end), sigma2=float(sigma2),
                        mask=mask.copy())


def asymptotic_variances(fisher: FisherMatrix, n):
    """Estimated asymptotic variance of each estimated component:
    the diagonal of the inverse information divided by n."""
    return np.diag(fisher.inverse()) / n


def confidence_intervals(eta, fisher: FisherMatrix, n, level=0.95):
    """Two-sided Wald intervals, point +/- z * sqrt(I^{-1}_jj / n),
    for the estimated components.  Returns an (q_est, 2) array."""
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    eta_vec = eta.eta if isinstance(eta, ParameterVector) else np.asarray(eta, dtype=float)
    point = eta_vec[fisher.mask]
    z = norm.ppf(0.5 + level / 2)
    half = z * np.sqrt(asymptotic_variances(fisher, n))
    return np.column_stack([point - half, point + half])
