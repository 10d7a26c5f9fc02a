import numpy as np
import pytest

from accelode.errors import MaxIterationsExceeded
from accelode.models import catalog_get
from accelode.nls import NlsConfig, nls_fit
from accelode.ode_core import (Dataset, OdeModel, ParameterVector,
                               ToleranceSpec, finite_difference_derivatives,
                               integrate)

from conftest import make_dataset

TIGHT = ToleranceSpec(rtol=1e-10, atol=1e-12)


def test_noiseless_converges_immediately():
    truth = ParameterVector([0.5], [-1.0])
    times = np.linspace(0.0, 10.0, 21)
    data = make_dataset("linear", truth, times, tol=TIGHT)
    model = catalog_get("linear").model
    report = nls_fit(model, data, NlsConfig(eta0=truth, tol=TIGHT))
    assert report.diagnostics["converged"]
    assert report.diagnostics["iterations"] <= 2
    assert np.max(np.abs(report.eta_est.eta - truth.eta)) < 1e-8
    assert report.rss < 1e-10


def test_noiseless_converges_from_offset():
    truth = ParameterVector([0.5], [-1.0])
    times = np.linspace(0.0, 10.0, 21)
    data = make_dataset("linear", truth, times, tol=TIGHT)
    model = catalog_get("linear").model
    start = ParameterVector([0.7], [-1.4])
    report = nls_fit(model, data, NlsConfig(eta0=start, tol=TIGHT))
    assert report.diagnostics["converged"]
    assert np.max(np.abs(report.eta_est.eta - truth.eta)) < 1e-7


def test_matches_grid_search_oracle(rng):
    # x' = theta^2 (nonlinear in theta): x(t) = xi + theta^2 t
    def rhs(x, eta, t):
        return np.array([eta[1] ** 2])

    jac_state, jac_eta, hess = finite_difference_derivatives(rhs, 1, 1)
    model = OdeModel(1, 1, rhs, jac_state, jac_eta, hess, name="sq")
    times = np.linspace(0.0, 5.0, 30)
    y = 1.0 + 0.36 * times + 0.05 * rng.standard_normal(30)
    data = Dataset(times, y[None, :])
    start = ParameterVector([1.0], [0.5], [False, True])
    report = nls_fit(model, data, NlsConfig(eta0=start))

    def rss(th):
        return np.sum((y - (1.0 + th**2 * times)) ** 2)

    grid = np.linspace(0.3, 1.0, 20001)
    best = grid[np.argmin([rss(th) for th in grid])]
    assert abs(report.eta_est.theta[0] - best) < 1e-3
    assert abs(report.rss - rss(best)) < 1e-6


def test_rss_not_worse_than_start(rng):
    truth = ParameterVector([0.5], [-1.0])
    times = np.linspace(0.0, 10.0, 21)
    data = make_dataset("linear", truth, times, sigma=0.05, rng=rng)
    model = catalog_get("linear").model
    start = ParameterVector([0.8], [-1.5])
    traj = integrate(model, start, 10.0)
    rss0 = float(np.sum((data.values - traj(times)) ** 2))
    report = nls_fit(model, data, NlsConfig(eta0=start))
    assert report.rss <= rss0
    assert report.diagnostics["status"] in (
        "gradient_converged", "step_converged")


def test_agrees_with_default_preliminary_start(rng):
    truth = ParameterVector([0.5], [-1.0])
    times = np.linspace(0.0, 10.0, 51)
    data = make_dataset("linear", truth, times, sigma=0.05, rng=rng)
    model = catalog_get("linear").model
    report = nls_fit(model, data)
    assert report.eta_prelim is not None
    assert report.diagnostics["converged"]
    assert np.max(np.abs(report.eta_est.eta - truth.eta)) < 0.2
    assert report.ci.shape == (2, 2)


def test_iteration_budget(rng):
    truth = ParameterVector([0.5], [-1.0])
    times = np.linspace(0.0, 10.0, 21)
    data = make_dataset("linear", truth, times, sigma=0.05, rng=rng)
    model = catalog_get("linear").model
    start = ParameterVector([1.5], [-2.5])
    report = nls_fit(model, data, NlsConfig(eta0=start, max_iter=1))
    assert not report.diagnostics["converged"]
    with pytest.raises(MaxIterationsExceeded) as excinfo:
        nls_fit(model, data, NlsConfig(eta0=start, max_iter=1,
                                       raise_on_failure=True))
    # the best-so-far report rides along with the failure
    assert excinfo.value.report is not None
    assert excinfo.value.report.method == "nls"


def test_config_validation():
    with pytest.raises(ValueError):
        NlsConfig(max_iter=0)
    with pytest.raises(ValueError):
        NlsConfig(gtol=0.0)
