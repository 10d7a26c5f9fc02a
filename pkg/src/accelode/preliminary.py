"""Preliminary root-n-consistent estimators from the smoothed curve.

For systems linear in the rate parameters the closed-form integral
estimator is used; the gradient-matching estimator covers the general
case.  All time integrals are trapezoidal on the smoother's evaluation
grid.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize

from .errors import OptimizerDiverged, SingularNormalMatrix
from .ode_core import OdeModel, ParameterVector
from .smoothing import SmoothedCurve

MAX_CONDITION = 1e12


def _cumtrapz(f, t):
    """Cumulative trapezoid along axis 0, starting at 0."""
    dt = np.diff(t)
    seg = 0.5 * (f[1:] + f[:-1]) * dt.reshape((-1,) + (1,) * (f.ndim - 1))
    out = np.zeros_like(f)
    np.cumsum(seg, axis=0, out=out[1:])
    return out


def _checked_solve(mat, rhs, what):
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv[-1] <= 0 or sv[0] / sv[-1] > MAX_CONDITION:
        raise SingularNormalMatrix(
            f"{what} is numerically singular (condition "
            f"{np.inf if sv[-1] <= 0 else sv[0] / sv[-1]:.2e})")
    return np.linalg.solve(mat, rhs)


@dataclass(frozen=True)
class IntegralOperators:
    """Time-integrated coefficient operators of a theta-linear system."""

    grid: np.ndarray
    G_values: np.ndarray  # (m, d, p): G(t) at the grid nodes
    A_hat: np.ndarray     # (d, p)
    B_hat: np.ndarray     # (p, p)

    def G_hat(self, t):
        m, d, p = self.G_values.shape
        flat = self.G_values.reshape(m, d * p)
        out = np.empty(d * p)
        for j in range(d * p):
            out[j] = np.interp(t, self.grid, flat[:, j])
        return out.reshape(d, p)


@dataclass(frozen=True)
class PreliminaryEstimate:
    eta_hat: ParameterVector
    method: str           # "integral_sme" or "derivative_sme"
    bandwidth: float = float("nan")


def build_integral_operators(curve: SmoothedCurve, model: OdeModel) -> IntegralOperators:
    if model.theta_linear is None:
        raise ValueError("model is not linear in the rate parameters")
    grid = curve.eval_grid
    gvals = np.stack([np.asarray(model.theta_linear(x))
                      for x in curve.values.T])  # (m, d, p)
    G = _cumtrapz(gvals, grid)
    A = np.trapezoid(G, grid, axis=0)
    BtB = np.einsum("mdi,mdj->mij", G, G)
    B = np.trapezoid(BtB, grid, axis=0)
    return IntegralOperators(grid=grid, G_values=G, A_hat=A, B_hat=B)


def integral_sme(curve: SmoothedCurve, model: OdeModel,
                 known_xi=None, bandwidth=float("nan")) -> PreliminaryEstimate:
    """Closed-form estimator for theta-linear systems.

    Solves the normal equations of the criterion
    integral over [0,T] of || xhat(t) - xi - G(t) theta ||^2 dt.  (The
    T = 1 form of these equations is the familiar pair of displayed
    closed forms; for general horizons the identity block carries a
    factor T.)
    """
    ops = build_integral_operators(curve, model)
    grid, G, A, B = ops.grid, ops.G_values, ops.A_hat, ops.B_hat
    span = grid[-1] - grid[0]
    d = model.dim_state
    xhat = curve.values.T  # (m, d)

    AB = _checked_solve(B, A.T, "B_hat").T  # A B^{-1}, (d, p)
    if known_xi is None:
        M = span * np.eye(d) - AB @ A.T
        integrand = xhat - np.einsum("dp,mp->md", AB,
                                     np.einsum("mdp,md->mp", G, xhat))
        rhs = np.trapezoid(integrand, grid, axis=0)
        xi = _checked_solve(M, rhs, "initial-value normal matrix")
    else:
        xi = np.atleast_1d(np.asarray(known_xi, dtype=float))
    resid = xhat - xi
    theta = _checked_solve(B, np.trapezoid(
        np.einsum("mdp,md->mp", G, resid), grid, axis=0), "B_hat")
    return PreliminaryEstimate(
        eta_hat=ParameterVector(xi, theta),
        method="integral_sme",
        bandwidth=bandwidth,
    )


def derivative_sme(curve: SmoothedCurve, model: OdeModel,
                   weight: Optional[Callable] = None,
                   theta_box=None, restarts=10, seed=0,
                   bandwidth=float("nan")) -> PreliminaryEstimate:
    """Gradient matching: minimize the weighted integrated squared
    mismatch between the smoothed derivative and F along the smoothed
    curve.  Linear solve for theta-linear systems, Nelder-Mead with
    random restarts otherwise."""
    grid = curve.eval_grid
    d, p = model.dim_state, model.dim_param
    xhat = curve.values.T       # (m, d)
    xdot = curve.derivatives.T  # (m, d)
    w = np.ones(grid.size) if weight is None else np.asarray(
        [weight(t) for t in grid], dtype=float)
    if np.any(w < 0):
        raise ValueError("weight function must be nonnegative")

    if model.theta_linear is not None:
        gvals = np.stack([np.asarray(model.theta_linear(x)) for x in xhat])
        lhs = np.trapezoid(
            np.einsum("mdi,mdj,m->mij", gvals, gvals, w), grid, axis=0)
        rhs = np.trapezoid(
            np.einsum("mdi,md,m->mi", gvals, xdot, w), grid, axis=0)
        theta = _checked_solve(lhs, rhs, "gradient-matching normal matrix")
    else:
        pad = np.zeros(d)

        def objective(theta):
            F = np.stack([model.rhs(x, np.concatenate([pad, theta]), t)
                          for x, t in zip(xhat, grid)])
            return np.trapezoid(np.sum((xdot - F) ** 2, axis=1) * w, grid)

        if theta_box is None:
            theta_box = [(-5.0, 5.0)] * p
        lo = np.array([b[0] for b in theta_box])
        hi = np.array([b[1] for b in theta_box])
        rng = np.random.default_rng(seed)
        best = None
        for k in range(restarts):
            x0 = lo + (hi - lo) * rng.random(p)
            res = minimize(objective, x0, method="Nelder-Mead",
                           options={"maxiter": 2000 * p, "xatol": 1e-10,
                                    "fatol": 1e-14})
            if best is None or res.fun < best.fun:
                best = res
        if best is None or not np.all(np.isfinite(best.x)):
            raise OptimizerDiverged("gradient-matching minimization failed")
        theta = best.x

    xi = recover_initial_values(curve, model, theta)
    return PreliminaryEstimate(
        eta_hat=ParameterVector(xi, theta),
        method="derivative_sme",
        bandwidth=bandwidth,
    )


def recover_initial_values(curve: SmoothedCurve, model: OdeModel, theta_hat):
    """Initial values minimizing the integrated squared mismatch of the
    integrated system along the smoothed curve (closed form: the time
    average of xhat(t) minus the running integral of F)."""
    grid = curve.eval_grid
    theta_hat = np.atleast_1d(np.asarray(theta_hat, dtype=float))
    d = model.dim_state
    eta = np.concatenate([np.zeros(d), theta_hat])
    F = np.stack([model.rhs(x, eta, t)
                  for x, t in zip(curve.values.T, grid)])
    Fint = _cumtrapz(F, grid)
    span = grid[-1] - grid[0]
    return np.trapezoid(curve.values.T - Fint, grid, axis=0) / span
