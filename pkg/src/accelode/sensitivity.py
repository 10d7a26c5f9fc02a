"""First and second order parameter sensitivities and the estimating
function.

The state, the first-order sensitivity matrix and (optionally) the
second-order sensitivity tensor are integrated together as one augmented
system so all coefficients are evaluated on the same trajectory.
"""

from dataclasses import dataclass

import numpy as np

from . import _dopri
from ._backend import NUMBA_ENABLED
from .errors import DimensionMismatch
from .ode_core import (DEFAULT_TOL, OdeModel, ParameterVector, ToleranceSpec,
                       Trajectory)
from .sensitivity_counters import SolveCounter

solve_counter = SolveCounter()


@dataclass(frozen=True)
class SensitivitySolution:
    """x, dx/deta and optionally d2x/deta2 on a dense grid, with a
    continuous evaluator for arbitrary times."""

    grid: np.ndarray
    x: np.ndarray            # (m, d)
    s: np.ndarray            # (m, d, q)
    z: np.ndarray            # (m, d, q, q) or None
    trajectory: Trajectory   # augmented dense solution
    dim_state: int
    dim_eta: int

    def at(self, t):
        """(x, s, z) at time(s) t; leading axis is time for array t."""
        d, q = self.dim_state, self.dim_eta
        scalar = np.isscalar(t) or np.ndim(t) == 0
        raw = self.trajectory(np.atleast_1d(np.asarray(t, dtype=float))).T
        x = raw[:, :d]
        s = raw[:, d:d + d * q].reshape(-1, d, q)
        z = None
        if raw.shape[1] > d + d * q:
            z = raw[:, d + d * q:].reshape(-1, d, q, q)
        if scalar:
            return x[0], s[0], (None if z is None else z[0])
        return x, s, z


@dataclass(frozen=True)
class EstimatingFunctionValue:
    psi: np.ndarray    # (q_est,)
    dpsi: np.ndarray   # (q_est, q_est)
    mask: np.ndarray   # which eta components the rows/columns refer to


def _augmented_rhs_py(model, order):
    d, p = model.dim_state, model.dim_param
    q = d + p
    second = order == "second"

    def rhs(t, y, params):
        x = y[:d]
        s = y[d:d + d * q].reshape(d, q)
        F = model.rhs(x, params, t)
        Jx = model.jac_state(x, params, t)
        Je = model.jac_eta(x, params, t)
        sdot = Jx @ s + Je
        if not second:
            return np.concatenate([F, sdot.ravel()])
        z = y[d + d * q:].reshape(d, q, q)
        Fxx, Fxe, Fex, Fee = model.hess(x, params, t)
        zdot = (np.einsum("ik,kac->iac", Jx, z)
                + np.einsum("ikl,ka,lc->iac", Fxx, s, s)
                + np.einsum("ikc,ka->iac", Fxe, s)
                + np.einsum("iak,kc->iac", Fex, s)
                + Fee)
        return np.concatenate([F, sdot.ravel(), zdot.ravel()])

    return rhs


def solve_sensitivities(model: OdeModel, eta, t_end, order="second",
                        tol: ToleranceSpec = DEFAULT_TOL,
                        grid_size=201) -> SensitivitySolution:
    """Integrate the coupled (x, s[, z]) system on [0, t_end].

    s(0) is the (d x q) block [I_d | 0]; z(0) = 0.
    """
    if order not in ("first", "second"):
        raise ValueError("order must be 'first' or 'second'")
    eta_vec = eta.eta if isinstance(eta, ParameterVector) else np.asarray(eta, dtype=float)
    d, p = model.dim_state, model.dim_param
    q = d + p
    s0 = np.zeros((d, q))
    s0[:, :d] = np.eye(d)
    parts = [eta_vec[:d], s0.ravel()]
    if order == "second":
        parts.append(np.zeros(d * q * q))
    y0 = np.concatenate(parts)

    solve_counter.count += 1
    driver = None
    if NUMBA_ENABLED and model.fast is not None:
        from . import _fast

        driver = (_fast.var_driver(model) if order == "second"
                  else _fast.sens_driver(model))
    if driver is not None:
        status, ts, ys, qh, _ = driver(
            0.0, float(t_end), y0, eta_vec, tol.rtol, tol.atol, tol.max_steps)
    else:
        rhs = _augmented_rhs_py(model, order)
        status, ts, ys, qh, _ = _dopri.integrate_py(
            rhs, 0.0, float(t_end), y0, eta_vec,
            tol.rtol, tol.atol, tol.max_steps)
    from .ode_core import _raise_for_status

    _raise_for_status(status)
    traj = Trajectory(ts, ys, qh)

    grid = np.linspace(0.0, float(t_end), grid_size)
    dense = traj(grid).T  # (m, dim)
    x = dense[:, :d]
    s = dense[:, d:d + d * q].reshape(-1, d, q)
    z = None
    if order == "second":
        z = dense[:, d + d * q:].reshape(-1, d, q, q)
    return SensitivitySolution(grid=grid, x=x, s=s, z=z, trajectory=traj,
                               dim_state=d, dim_eta=q)


def estimating_function(model: OdeModel, eta, data,
                        tol: ToleranceSpec = DEFAULT_TOL,
                        solution: SensitivitySolution = None) -> EstimatingFunctionValue:
    """Value and Jacobian of the estimating function at eta.

    psi is the sum over observations of s(t_j)^T (Y_j - x(t_j)); its
    eta-derivative adds the contraction of the second-order sensitivity
    tensor with the residual and subtracts s^T s.  Rows and columns for
    components masked as known are dropped.
    """
    if data.dim_state != model.dim_state:
        raise DimensionMismatch(
            f"data has {data.dim_state} states, model has {model.dim_state}")
    if isinstance(eta, ParameterVector):
        mask = eta.estimate_mask
    else:
        mask = np.ones(model.dim_eta, dtype=bool)
    if solution is None:
        solution = solve_sensitivities(
            model, eta, float(data.times[-1]), order="second", tol=tol)
    x, s, z = solution.at(data.times)
    resid = data.values.T - x  # (n, d)
    psi = np.einsum("niq,ni->q", s, resid)
    dpsi = (np.einsum("niac,ni->ac", z, resid)
            - np.einsum("nia,nib->ab", s, s))
    return EstimatingFunctionValue(
        psi=psi[mask], dpsi=dpsi[np.ix_(mask, mask)], mask=mask.copy())
