"""Built-in ODE systems.

All five catalog systems are linear in their rate parameters, i.e.
F(x; theta) = g(x) @ theta, so each is defined through the coefficient
matrix g and its first two state derivatives.  The functions are written
in numba-compatible numpy and @njit-decorated; the same callables back
both the generic numpy path and the compiled hot path.
"""

from dataclasses import dataclass

import numpy as np

from ._backend import njit
from .errors import UnknownModel
from .ode_core import OdeModel, ParameterVector


def theta_linear_model(name, dim_state, dim_param, g, dg, d2g):
    """Assemble an :class:`OdeModel` from the coefficient matrix of a
    system linear in the rate parameters.

    ``g(x) -> (d,p)``, ``dg(x) -> (d,p,d)`` with ``dg[i,b,k]`` the
    derivative of ``g[i,b]`` by ``x_k``, and ``d2g(x) -> (d,p,d,d)``.
    """
    d, p = dim_state, dim_param

    def rhs(x, eta, t):
        return g(x) @ eta[d:]

    def jac_state(x, eta, t):
        return np.einsum("ibk,b->ik", dg(x), eta[d:])

    def jac_eta(x, eta, t):
        J = np.zeros((d, d + p))
        J[:, d:] = g(x)
        return J

    def hess(x, eta, t):
        q = d + p
        Fxx = np.einsum("ibkl,b->ikl", d2g(x), eta[d:])
        Fxe = np.zeros((d, d, q))
        Fxe[:, :, d:] = np.transpose(dg(x), (0, 2, 1))
        Fex = np.transpose(Fxe, (0, 2, 1))
        Fee = np.zeros((d, q, q))
        return Fxx, Fxe, Fex, Fee

    return OdeModel(
        dim_state=d,
        dim_param=p,
        rhs=rhs,
        jac_state=jac_state,
        jac_eta=jac_eta,
        hess=hess,
        theta_linear=g,
        fast=(g, dg, d2g),
        name=name,
    )


@dataclass(frozen=True)
class ModelCatalogEntry:
    name: str
    model: OdeModel
    default_eta: ParameterVector
    default_horizon: float
    # subtracted from raw observation times before fitting (autonomous
    # systems are translation invariant); nonzero only for alpha_pinene
    time_offset: float = 0.0


# ---------------------------------------------------------------- linear

@njit(cache=False)
def _linear_g(x):
    G = np.empty((1, 1))
    G[0, 0] = x[0]
    return G


@njit(cache=False)
def _linear_dg(x):
    D = np.zeros((1, 1, 1))
    D[0, 0, 0] = 1.0
    return D


@njit(cache=False)
def _linear_d2g(x):
    return np.zeros((1, 1, 1, 1))


# ------------------------------------------------------- Lotka-Volterra

@njit(cache=False)
def _lotka_g(x):
    G = np.zeros((2, 4))
    G[0, 0] = x[0]
    G[0, 1] = -x[0] * x[1]
    G[1, 2] = -x[1]
    G[1, 3] = x[0] * x[1]
    return G


@njit(cache=False)
def _lotka_dg(x):
    D = np.zeros((2, 4, 2))
    D[0, 0, 0] = 1.0
    D[0, 1, 0] = -x[1]
    D[0, 1, 1] = -x[0]
    D[1, 2, 1] = -1.0
    D[1, 3, 0] = x[1]
    D[1, 3, 1] = x[0]
    return D


@njit(cache=False)
def _lotka_d2g(x):
    D = np.zeros((2, 4, 2, 2))
    D[0, 1, 0, 1] = -1.0
    D[0, 1, 1, 0] = -1.0
    D[1, 3, 0, 1] = 1.0
    D[1, 3, 1, 0] = 1.0
    return D


# ------------------------------------------- nitrogen oxide gas reaction
# x' = theta1*(126.2 - x)*(91.9 - x)^2 - theta2*x^2

@njit(cache=False)
def _nitro_g(x):
    G = np.empty((1, 2))
    G[0, 0] = (126.2 - x[0]) * (91.9 - x[0]) ** 2
    G[0, 1] = -x[0] ** 2
    return G


@njit(cache=False)
def _nitro_dg(x):
    D = np.empty((1, 2, 1))
    u = 91.9 - x[0]
    D[0, 0, 0] = -u * u - 2.0 * (126.2 - x[0]) * u
    D[0, 1, 0] = -2.0 * x[0]
    return D


@njit(cache=False)
def _nitro_d2g(x):
    D = np.empty((1, 2, 1, 1))
    D[0, 0, 0, 0] = 4.0 * (91.9 - x[0]) + 2.0 * (126.2 - x[0])
    D[0, 1, 0, 0] = -2.0
    return D


# --------------------------------------------------------------- Barnes
# x1' = theta1*x1 - theta2*x1*x2 ; x2' = theta2*x1*x2 - theta3*x2

@njit(cache=False)
def _barnes_g(x):
    G = np.zeros((2, 3))
    G[0, 0] = x[0]
    G[0, 1] = -x[0] * x[1]
    G[1, 1] = x[0] * x[1]
    G[1, 2] = -x[1]
    return G


@njit(cache=False)
def _barnes_dg(x):
    D = np.zeros((2, 3, 2))
    D[0, 0, 0] = 1.0
    D[0, 1, 0] = -x[1]
    D[0, 1, 1] = -x[0]
    D[1, 1, 0] = x[1]
    D[1, 1, 1] = x[0]
    D[1, 2, 1] = -1.0
    return D


@njit(cache=False)
def _barnes_d2g(x):
    D = np.zeros((2, 3, 2, 2))
    D[0, 1, 0, 1] = -1.0
    D[0, 1, 1, 0] = -1.0
    D[1, 1, 0, 1] = 1.0
    D[1, 1, 1, 0] = 1.0
    return D


# --------------------------------------------------------- alpha-pinene

@njit(cache=False)
def _alpha_g(x):
    G = np.zeros((5, 5))
    G[0, 0] = -x[0]
    G[0, 1] = -x[0]
    G[1, 0] = x[0]
    G[2, 1] = x[0]
    G[2, 2] = -x[2]
    G[2, 3] = -x[2]
    G[2, 4] = x[4]
    G[3, 2] = x[2]
    G[4, 3] = x[2]
    G[4, 4] = -x[4]
    return G


@njit(cache=False)
def _alpha_dg(x):
    D = np.zeros((5, 5, 5))
    D[0, 0, 0] = -1.0
    D[0, 1, 0] = -1.0
    D[1, 0, 0] = 1.0
    D[2, 1, 0] = 1.0
    D[2, 2, 2] = -1.0
    D[2, 3, 2] = -1.0
    D[2, 4, 4] = 1.0
    D[3, 2, 2] = 1.0
    D[4, 3, 2] = 1.0
    D[4, 4, 4] = -1.0
    return D


@njit(cache=False)
def _alpha_d2g(x):
    return np.zeros((5, 5, 5, 5))


def _build_catalog():
    entries = {}

    entries["linear"] = ModelCatalogEntry(
        name="linear",
        model=theta_linear_model("linear", 1, 1, _linear_g, _linear_dg, _linear_d2g),
        default_eta=ParameterVector([0.5], [-1.0]),
        default_horizon=10.0,
    )
    entries["lotka_volterra"] = ModelCatalogEntry(
        name="lotka_volterra",
        model=theta_linear_model(
            "lotka_volterra", 2, 4, _lotka_g, _lotka_dg, _lotka_d2g),
        default_eta=ParameterVector([1.0, 0.5], [0.5, 0.5, 0.5, 0.5]),
        default_horizon=10.0,
    )
    entries["nitrogen_oxide"] = ModelCatalogEntry(
        name="nitrogen_oxide",
        model=theta_linear_model(
            "nitrogen_oxide", 1, 2, _nitro_g, _nitro_dg, _nitro_d2g),
        default_eta=ParameterVector([0.0], [0.4577e-5, 0.2797e-3]),
        default_horizon=40.0,
    )
    # Barnes truth for the rates comes from the published simulation
    # study; initial values are conventionally taken as the first
    # observation of each state, so the defaults below are placeholders
    # for simulation use only.
    entries["barnes"] = ModelCatalogEntry(
        name="barnes",
        model=theta_linear_model(
            "barnes", 2, 3, _barnes_g, _barnes_dg, _barnes_d2g),
        default_eta=ParameterVector([1.0, 0.5], [0.86, 2.079, 1.624]),
        default_horizon=5.0,
    )
    entries["alpha_pinene"] = ModelCatalogEntry(
        name="alpha_pinene",
        model=theta_linear_model(
            "alpha_pinene", 5, 5, _alpha_g, _alpha_dg, _alpha_d2g),
        default_eta=ParameterVector(
            [88.35, 7.3, 2.3, 0.4, 1.75],
            [5.926e-5, 2.963e-5, 2.047e-5, 2.744e-4, 3.997e-5]),
        default_horizon=35190.0,
        time_offset=1230.0,
    )
    return entries


CATALOG = _build_catalog()

MODEL_NAMES = tuple(sorted(CATALOG))


def catalog_get(name: str) -> ModelCatalogEntry:
    """Look up a built-in system by its stable identifier."""
    try:
        return CATALOG[name]
    except KeyError:
        raise UnknownModel(
            f"unknown model {name!r}; available: {', '.join(MODEL_NAMES)}"
        ) from None


def g_of(name: str, x) -> np.ndarray:
    """Coefficient matrix g(x) of the named system at state x."""
    entry = catalog_get(name)
    return np.asarray(entry.model.theta_linear(np.asarray(x, dtype=float)))
