"""Numba hot path for models linear in the rate parameters.

A model advertises ``fast = (g, dg, d2g)`` where all three are @njit
callables of the state returning the coefficient matrix g(x) (d,p), its
state gradient (d,p,d) and second state derivative (d,p,d,d).  From
those this module assembles compiled right-hand sides for the plain
system, the system augmented with first-order sensitivities, and the
system augmented with first and second order sensitivities, and pairs
each with the compiled DOPRI5 driver.
"""

import numpy as np

from . import _dopri
from ._backend import njit

_RHS_CACHE = {}


def _factories(fast, d, p):
    g_nb, dg_nb, d2g_nb = fast
    q = d + p

    @njit(cache=False)
    def rhs_plain(t, y, params):
        G = g_nb(y)
        out = np.zeros(d)
        for i in range(d):
            for b in range(p):
                out[i] += G[i, b] * params[d + b]
        return out

    @njit(cache=False)
    def rhs_sens(t, y, params):
        x = y[:d].copy()
        s = y[d:d + d * q].copy().reshape(d, q)
        theta = params[d:]
        G = g_nb(x)
        dG = dg_nb(x)
        Jx = np.zeros((d, d))
        for i in range(d):
            for k in range(d):
                for b in range(p):
                    Jx[i, k] += dG[i, b, k] * theta[b]
        out = np.zeros(d + d * q)
        for i in range(d):
            for b in range(p):
                out[i] += G[i, b] * theta[b]
        sdot = np.zeros((d, q))
        for i in range(d):
            for a in range(q):
                for k in range(d):
                    sdot[i, a] += Jx[i, k] * s[k, a]
            for b in range(p):
                sdot[i, d + b] += G[i, b]
        out[d:] = sdot.ravel()
        return out

    @njit(cache=False)
    def rhs_var(t, y, params):
        x = y[:d].copy()
        s = y[d:d + d * q].copy().reshape(d, q)
        z = y[d + d * q:].copy().reshape(d, q, q)
        theta = params[d:]
        G = g_nb(x)
        dG = dg_nb(x)
        d2G = d2g_nb(x)
        Jx = np.zeros((d, d))
        for i in range(d):
            for k in range(d):
                for b in range(p):
                    Jx[i, k] += dG[i, b, k] * theta[b]
        Hxx = np.zeros((d, d, d))
        for i in range(d):
            for k in range(d):
                for l in range(d):
                    for b in range(p):
                        Hxx[i, k, l] += d2G[i, b, k, l] * theta[b]

        out = np.zeros(d + d * q + d * q * q)
        for i in range(d):
            for b in range(p):
                out[i] += G[i, b] * theta[b]
        sdot = np.zeros((d, q))
        for i in range(d):
            for a in range(q):
                for k in range(d):
                    sdot[i, a] += Jx[i, k] * s[k, a]
            for b in range(p):
                sdot[i, d + b] += G[i, b]
        out[d:d + d * q] = sdot.ravel()

        zdot = np.zeros((d, q, q))
        for i in range(d):
            for a in range(q):
                for c in range(q):
                    v = 0.0
                    for k in range(d):
                        v += Jx[i, k] * z[k, a, c]
                        for l in range(d):
                            v += Hxx[i, k, l] * s[k, a] * s[l, c]
                    if c >= d:
                        for k in range(d):
                            v += dG[i, c - d, k] * s[k, a]
                    if a >= d:
                        for k in range(d):
                            v += dG[i, a - d, k] * s[k, c]
                    zdot[i, a, c] = v
        out[d + d * q:] = zdot.ravel()
        return out

    return rhs_plain, rhs_sens, rhs_var


def _get_rhs(model, kind):
    key = (id(model.fast), kind)
    hit = _RHS_CACHE.get(key)
    if hit is None:
        plain, sens, var = _factories(model.fast, model.dim_state, model.dim_param)
        _RHS_CACHE[(id(model.fast), "plain")] = plain
        _RHS_CACHE[(id(model.fast), "sens")] = sens
        _RHS_CACHE[(id(model.fast), "var")] = var
        hit = _RHS_CACHE[key]
    return hit


def plain_driver(model):
    return _dopri.make_integrator_nb(_get_rhs(model, "plain"))


def sens_driver(model):
    return _dopri.make_integrator_nb(_get_rhs(model, "sens"))


def var_driver(model):
    return _dopri.make_integrator_nb(_get_rhs(model, "var"))
