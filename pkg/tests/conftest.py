import numpy as np
import pytest

from accelode.models import catalog_get
from accelode.ode_core import Dataset, ParameterVector, integrate


@pytest.fixture
def rng():
    return np.random.default_rng(90125)


def linear_solution(xi, theta, t):
    """Closed form for x' = theta * x."""
    return xi * np.exp(theta * np.asarray(t))


def make_dataset(model_name, eta: ParameterVector, times, sigma=0.0,
                 rng=None, tol=None):
    """Exact trajectory at the given times, optionally with noise."""
    entry = catalog_get(model_name)
    kwargs = {} if tol is None else {"tol": tol}
    traj = integrate(entry.model, eta, float(times[-1]), **kwargs)
    clean = traj(np.asarray(times, dtype=float))
    if sigma:
        clean = clean + sigma * rng.standard_normal(clean.shape)
    return Dataset(times, clean)
