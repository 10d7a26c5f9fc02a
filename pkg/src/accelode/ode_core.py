"""ODE model abstraction and adaptive integration with dense output."""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _dopri
from ._backend import NUMBA_ENABLED
from .errors import NonFiniteState, StepSizeUnderflow


@dataclass(frozen=True)
class ToleranceSpec:
    """Local error tolerances for the adaptive integrator."""

    rtol: float = 1e-8
    atol: float = 1e-10
    max_steps: int = 100_000

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")


DEFAULT_TOL = ToleranceSpec()


@dataclass(frozen=True)
class OdeModel:
    """An autonomous-in-form ODE system x'(t) = F(x, eta, t).

    ``rhs`` and the derivative callbacks all take ``(x, eta, t)`` with
    ``eta`` the full (d+p,) vector (initial values first, then rate
    parameters).  ``hess`` returns the four second-derivative blocks
    ``(F_xx, F_xeta, F_etax, F_etaeta)`` with shapes (d,d,d), (d,d,d+p),
    (d,d+p,d) and (d,d+p,d+p).

    For systems linear in the rate parameters, ``theta_linear`` maps a
    state to the (d,p) coefficient matrix g(x) with F = g(x) @ theta.
    ``fast`` optionally holds @njit-compiled (g, dg, d2g) callables used
    by the numba hot path; it is ignored when the numpy fallback is
    selected.
    """

    dim_state: int
    dim_param: int
    rhs: Callable
    jac_state: Callable
    jac_eta: Callable
    hess: Callable
    theta_linear: Optional[Callable] = None
    fast: Optional[tuple] = None
    numeric_derivatives: bool = False
    name: str = ""

    @property
    def dim_eta(self):
        return self.dim_state + self.dim_param


@dataclass(frozen=True)
class ParameterVector:
    """eta = (xi, theta) with a per-component estimated/known mask."""

    xi: np.ndarray
    theta: np.ndarray
    estimate_mask: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "xi", np.atleast_1d(np.asarray(self.xi, dtype=float)))
        object.__setattr__(self, "theta", np.atleast_1d(np.asarray(self.theta, dtype=float)))
        if self.estimate_mask is None:
            mask = np.ones(self.xi.size + self.theta.size, dtype=bool)
        else:
            mask = np.asarray(self.estimate_mask, dtype=bool)
            if mask.size != self.xi.size + self.theta.size:
                raise ValueError("estimate_mask length must be d + p")
        object.__setattr__(self, "estimate_mask", mask)

    @property
    def eta(self):
        return np.concatenate([self.xi, self.theta])

    @property
    def dim_state(self):
        return self.xi.size

    def with_eta(self, eta):
        eta = np.asarray(eta, dtype=float)
        d = self.xi.size
        return ParameterVector(eta[:d], eta[d:], self.estimate_mask.copy())

    def replace_mask(self, mask):
        return ParameterVector(self.xi.copy(), self.theta.copy(), np.asarray(mask, dtype=bool))


@dataclass(frozen=True)
class Dataset:
    """Observation times and a (d, n) matrix of noisy measurements."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.times, dtype=float))
        y = np.atleast_2d(np.asarray(self.values, dtype=float))
        if y.shape[1] != t.size:
            raise ValueError("values must have one column per observation time")
        if np.any(np.diff(t) < 0):
            raise ValueError("observation times must be non-decreasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", y)

    @property
    def n(self):
        return self.times.size

    @property
    def dim_state(self):
        return self.values.shape[0]

    @property
    def span(self):
        return float(self.times[-1] - self.times[0])


class Trajectory:
    """Dense solution on [t0, t_end]: callable interpolant plus the
    accepted integration grid."""

    def __init__(self, ts, ys, qh):
        self._ts = ts
        self._ys = ys
        self._qh = qh

    @property
    def grid(self):
        return self._ts

    @property
    def values(self):
        """(d, m) states at the grid nodes."""
        return self._ys.T

    @property
    def t_end(self):
        return float(self._ts[-1])

    def __call__(self, t):
        """State at time(s) t; (d,) for a scalar, (d, m) for an array."""
        out = _dopri.dense_eval(self._ts, self._ys, self._qh, t)
        if np.isscalar(t) or np.ndim(t) == 0:
            return out[0]
        return out.T


def _raise_for_status(status):
    if status == _dopri.STATUS_UNDERFLOW:
        raise StepSizeUnderflow(
            "adaptive step size underflow: problem is stiff or blows up")
    if status == _dopri.STATUS_NONFINITE:
        raise NonFiniteState("solution left the representable range")


def integrate(model: OdeModel, eta, t_end, tol: ToleranceSpec = DEFAULT_TOL):
    """Solve the initial value problem on [0, t_end] with dense output."""
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    eta_vec = eta.eta if isinstance(eta, ParameterVector) else np.asarray(eta, dtype=float)
    if eta_vec.size != model.dim_eta:
        raise ValueError("eta dimension does not match the model")
    d = model.dim_state
    y0 = eta_vec[:d]

    driver = None
    if NUMBA_ENABLED and model.fast is not None:
        from . import _fast

        driver = _fast.plain_driver(model)
    if driver is not None:
        status, ts, ys, qh, _ = driver(
            0.0, float(t_end), y0, eta_vec, tol.rtol, tol.atol, tol.max_steps)
    else:
        def rhs(t, y, params):
            return model.rhs(y, params, t)

        status, ts, ys, qh, _ = _dopri.integrate_py(
            rhs, 0.0, float(t_end), y0, eta_vec, tol.rtol, tol.atol, tol.max_steps)
    _raise_for_status(status)
    return Trajectory(ts, ys, qh)


def finite_difference_derivatives(rhs, dim_state, dim_param,
                                  step_jac=1e-6, step_hess=1e-4):
    """Central finite-difference jacobian/hessian callbacks for a model
    whose analytic derivatives are unavailable.  Models built this way
    are flagged in estimation reports."""
    d, p = dim_state, dim_param

    def jac_state(x, eta, t):
        J = np.empty((d, d))
        for k in range(d):
            h = step_jac * max(1.0, abs(x[k]))
            xp = x.copy(); xp[k] += h
            xm = x.copy(); xm[k] -= h
            J[:, k] = (rhs(xp, eta, t) - rhs(xm, eta, t)) / (2 * h)
        return J

    def jac_eta(x, eta, t):
        J = np.empty((d, d + p))
        for a in range(d + p):
            h = step_jac * max(1.0, abs(eta[a]))
            ep = eta.copy(); ep[a] += h
            em = eta.copy(); em[a] -= h
            J[:, a] = (rhs(x, ep, t) - rhs(x, em, t)) / (2 * h)
        return J

    def hess(x, eta, t):
        q = d + p
        Fxx = np.empty((d, d, d))
        Fxe = np.empty((d, d, q))
        Fee = np.empty((d, q, q))
        for k in range(d):
            h = step_hess * max(1.0, abs(x[k]))
            xp = x.copy(); xp[k] += h
            xm = x.copy(); xm[k] -= h
            Fxx[:, k, :] = (jac_state(xp, eta, t) - jac_state(xm, eta, t)) / (2 * h)
            Fxe[:, k, :] = (jac_eta(xp, eta, t) - jac_eta(xm, eta, t)) / (2 * h)
        for a in range(q):
            h = step_hess * max(1.0, abs(eta[a]))
            ep = eta.copy(); ep[a] += h
            em = eta.copy(); em[a] -= h
            Fee[:, a, :] = (jac_eta(x, ep, t) - jac_eta(x, em, t)) / (2 * h)
        Fex = np.transpose(Fxe, (0, 2, 1))
        return Fxx, Fxe, Fex, Fee

    return jac_state, jac_eta, hess


def autonomize(model: OdeModel) -> OdeModel:
    """Append the clock state x_{d+1}(t) = t, removing explicit time
    dependence.  The appended initial value is fixed to 0."""
    d, p = model.dim_state, model.dim_param

    def rhs(x, eta, t):
        eta_orig = np.concatenate([eta[:d], eta[d + 1:]])
        out = np.empty(d + 1)
        out[:d] = model.rhs(x[:d], eta_orig, x[d])
        out[d] = 1.0
        return out

    def jac_state(x, eta, t):
        eta_orig = np.concatenate([eta[:d], eta[d + 1:]])
        J = np.zeros((d + 1, d + 1))
        J[:d, :d] = model.jac_state(x[:d], eta_orig, x[d])
        # time column by central differences in the clock state
        h = 1e-6 * max(1.0, abs(x[d]))
        J[:d, d] = (model.rhs(x[:d], eta_orig, x[d] + h)
                    - model.rhs(x[:d], eta_orig, x[d] - h)) / (2 * h)
        return J

    def jac_eta(x, eta, t):
        eta_orig = np.concatenate([eta[:d], eta[d + 1:]])
        J0 = model.jac_eta(x[:d], eta_orig, x[d])
        J = np.zeros((d + 1, d + 1 + p))
        J[:d, :d] = J0[:, :d]
        J[:d, d + 1:] = J0[:, d:]
        return J

    _, _, hess = finite_difference_derivatives(rhs, d + 1, p)
    return OdeModel(
        dim_state=d + 1,
        dim_param=p,
        rhs=rhs,
        jac_state=jac_state,
        jac_eta=jac_eta,
        hess=hess,
        numeric_derivatives=True,
        name=model.name + "_autonomized" if model.name else "autonomized",
    )
