"""Local polynomial kernel regression for the trajectory and its
derivative.

At each evaluation point t the weighted least squares problem over the
d x (degree+1) coefficient matrix is solved with kernel weights
K((t_i - t)/b); the fitted value is the first coefficient column and the
fitted derivative the second column divided by the bandwidth.  The
per-point solve is the hot loop and has an @njit variant (Epanechnikov
kernel only) next to the generic numpy one.
"""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._backend import NUMBA_ENABLED, njit
from .errors import SingularLocalDesign

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class Kernel:
    """Nonnegative kernel with compact support [-radius, radius]."""

    evaluate: Callable
    radius: float = 1.0
    name: str = ""


EPANECHNIKOV = Kernel(
    evaluate=lambda u: 0.75 * (1.0 - u**2) * (np.abs(u) <= 1.0),
    radius=1.0,
    name="epanechnikov",
)


@dataclass(frozen=True)
class SmootherConfig:
    degree: int = 1
    bandwidth: float = 1.0
    eval_grid: np.ndarray = None

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.eval_grid is not None:
            grid = np.asarray(self.eval_grid, dtype=float)
            if np.any(np.diff(grid) <= 0):
                raise ValueError("eval_grid must be strictly increasing")
            object.__setattr__(self, "eval_grid", grid)


@dataclass(frozen=True)
class SmoothedCurve:
    eval_grid: np.ndarray
    values: np.ndarray      # (d, m)
    derivatives: np.ndarray  # (d, m)

    @property
    def dim_state(self):
        return self.values.shape[0]

    @property
    def span(self):
        return float(self.eval_grid[-1] - self.eval_grid[0])


def default_eval_grid(t_start, t_end, num=201):
    return np.linspace(t_start, t_end, num)


def interpolant_curve(data, grid) -> SmoothedCurve:
    """Piecewise-linear interpolant of the observations, the
    small-bandwidth limit of the local linear smoother.  Useful on very
    sparse designs where any admissible kernel bandwidth oversmooths."""
    grid = np.asarray(grid, dtype=float)
    vals = np.vstack([np.interp(grid, data.times, data.values[i])
                      for i in range(data.dim_state)])
    derivs = np.gradient(vals, grid, axis=1)
    return SmoothedCurve(grid, vals, derivs)


def bandwidth_set(n, grid_constants):
    """Candidate bandwidths c_j * n^(-1/3) on the unit time scale."""
    if n < 2:
        raise ValueError("need at least two observations")
    c = np.asarray(grid_constants, dtype=float)
    if c.size and (np.any(c <= 0) or np.any(np.diff(c) <= 0)):
        raise ValueError("grid constants must be positive and increasing")
    return c * n ** (-1.0 / 3.0)


def local_poly_fit(data, config: SmootherConfig, kernel: Kernel = EPANECHNIKOV):
    """Fit the local polynomial smoother on ``config.eval_grid``."""
    t_obs = data.times
    y = data.values
    grid = config.eval_grid
    if grid is None:
        grid = default_eval_grid(t_obs[0], t_obs[-1])
    b = float(config.bandwidth)
    deg = int(config.degree)

    if NUMBA_ENABLED and kernel is EPANECHNIKOV:
        vals, ders, status = _fit_nb(t_obs, y, grid, b, deg)
    else:
        vals, ders, status = _fit_py(t_obs, y, grid, b, deg, kernel)
    if status >= 0:
        raise SingularLocalDesign(
            f"local design at t={grid[status]:g} has fewer than "
            f"{deg + 1} weighted points or is ill-conditioned "
            f"(bandwidth {b:g} too small)")
    return SmoothedCurve(eval_grid=grid, values=vals, derivatives=ders)


def _fit_py(t_obs, y, grid, b, deg, kernel):
    d, n = y.shape
    m = grid.size
    vals = np.empty((d, m))
    ders = np.empty((d, m))
    fact = np.array([math.factorial(j) for j in range(deg + 1)])
    for j, t in enumerate(grid):
        u = (t_obs - t) / b
        w = np.asarray(kernel.evaluate(u), dtype=float)
        pos = w > 0
        if np.count_nonzero(pos) < deg + 1:
            return vals, ders, j
        uw = u[pos]
        sw = np.sqrt(w[pos])
        X = (uw[:, None] ** np.arange(deg + 1)) / fact
        Xw = X * sw[:, None]
        Yw = y[:, pos].T * sw[:, None]
        U, sv, Vt = np.linalg.svd(Xw, full_matrices=False)
        if sv[-1] <= 0 or sv[0] / sv[-1] > MAX_CONDITION:
            return vals, ders, j
        nu = Vt.T @ ((U.T @ Yw) / sv[:, None])
        vals[:, j] = nu[0]
        ders[:, j] = nu[1] / b
    return vals, ders, -1


@njit(cache=False)
def _fit_nb(t_obs, y, grid, b, deg):
    d, n = y.shape
    m = grid.size
    vals = np.empty((d, m))
    ders = np.empty((d, m))
    ncol = deg + 1
    fact = np.empty(ncol)
    f = 1.0
    for j in range(ncol):
        if j > 0:
            f *= j
        fact[j] = f
    for j in range(m):
        t = grid[j]
        npts = 0
        for i in range(n):
            u = (t_obs[i] - t) / b
            if abs(u) <= 1.0 and 0.75 * (1.0 - u * u) > 0.0:
                npts += 1
        if npts < ncol:
            return vals, ders, j
        Xw = np.empty((npts, ncol))
        Yw = np.empty((npts, d))
        r = 0
        for i in range(n):
            u = (t_obs[i] - t) / b
            if abs(u) > 1.0:
                continue
            w = 0.75 * (1.0 - u * u)
            if w <= 0.0:
                continue
            sw = np.sqrt(w)
            pw = 1.0
            for c in range(ncol):
                Xw[r, c] = sw * pw / fact[c]
                pw *= u
            for k in range(d):
                Yw[r, k] = sw * y[k, i]
            r += 1
        U, sv, Vt = np.linalg.svd(Xw)
        if sv[ncol - 1] <= 0.0 or sv[0] / sv[ncol - 1] > MAX_CONDITION:
            return vals, ders, j
        proj = np.ascontiguousarray(U[:, :ncol].T) @ Yw
        for c in range(ncol):
            for k in range(d):
                proj[c, k] /= sv[c]
        nu = Vt.T @ proj
        for k in range(d):
            vals[k, j] = nu[0, k]
            ders[k, j] = nu[1, k] / b
    return vals, ders, -1
