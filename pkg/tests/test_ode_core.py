import numpy as np
import pytest

from accelode.errors import NonFiniteState, StepSizeUnderflow
from accelode.models import catalog_get
from accelode.ode_core import (DEFAULT_TOL, Dataset, OdeModel,
                               ParameterVector, ToleranceSpec, autonomize,
                               finite_difference_derivatives, integrate)

from conftest import linear_solution


def test_linear_matches_closed_form():
    entry = catalog_get("linear")
    eta = ParameterVector([0.5], [-1.0])
    traj = integrate(entry.model, eta, 10.0)
    t = np.linspace(0.0, 10.0, 777)
    exact = linear_solution(0.5, -1.0, t)
    assert np.max(np.abs(traj(t)[0] - exact)) < 1e-9


def test_growth_direction():
    entry = catalog_get("linear")
    up = integrate(entry.model, ParameterVector([0.5], [1.0]), 10.0)
    assert abs(up(10.0)[0] - 0.5 * np.e**10) / (0.5 * np.e**10) < 1e-8


def test_dense_output_exact_at_nodes():
    entry = catalog_get("lotka_volterra")
    eta = ParameterVector([1.0, 0.5], [0.5, 0.5, 0.5, 0.5])
    traj = integrate(entry.model, eta, 10.0)
    vals = traj(traj.grid)
    assert np.allclose(vals, traj.values, rtol=0, atol=1e-14)


def test_lotka_volterra_first_integral():
    # V = th4*x1 - th3*log x1 + th2*x2 - th1*log x2 is conserved
    eta = ParameterVector([1.0, 0.5], [0.5, 0.5, 0.5, 0.5])
    entry = catalog_get("lotka_volterra")
    traj = integrate(entry.model, eta, 10.0)
    t = np.linspace(0.0, 10.0, 400)
    x1, x2 = traj(t)
    th = eta.theta
    V = th[3] * x1 - th[2] * np.log(x1) + th[1] * x2 - th[0] * np.log(x2)
    assert np.max(np.abs(V - V[0])) < 1e-6


def test_scalar_and_vector_call_agree():
    entry = catalog_get("linear")
    traj = integrate(entry.model, ParameterVector([0.5], [-1.0]), 10.0)
    assert traj(3.7).shape == (1,)
    assert np.allclose(traj(np.array([3.7]))[:, 0], traj(3.7))


def test_tighter_tolerance_is_more_accurate():
    entry = catalog_get("linear")
    eta = ParameterVector([0.5], [-1.0])
    errs = []
    for rtol in (1e-4, 1e-7, 1e-10):
        traj = integrate(entry.model, eta, 10.0,
                         ToleranceSpec(rtol=rtol, atol=rtol * 1e-2))
        errs.append(abs(traj(5.0)[0] - linear_solution(0.5, -1.0, 5.0)))
    assert errs[0] > errs[2]
    assert errs[2] < 1e-11


def test_blowup_raises():
    def rhs(x, eta, t):
        return np.array([eta[1] * x[0] ** 2])

    jac_state, jac_eta, hess = finite_difference_derivatives(rhs, 1, 1)
    model = OdeModel(1, 1, rhs, jac_state, jac_eta, hess, name="blowup")
    # finite escape time at t = 1/(xi*theta) = 1
    with pytest.raises((StepSizeUnderflow, NonFiniteState)):
        integrate(model, np.array([1.0, 1.0]), 2.0)


def test_invalid_inputs():
    entry = catalog_get("linear")
    eta = ParameterVector([0.5], [-1.0])
    with pytest.raises(ValueError):
        integrate(entry.model, eta, -1.0)
    with pytest.raises(ValueError):
        integrate(entry.model, np.array([0.5, -1.0, 3.0]), 1.0)
    with pytest.raises(ValueError):
        ToleranceSpec(rtol=0.0)


def test_parameter_vector_roundtrip():
    pv = ParameterVector([1.0, 2.0], [3.0], [True, False, True])
    assert np.array_equal(pv.eta, [1.0, 2.0, 3.0])
    pv2 = pv.with_eta(np.array([4.0, 5.0, 6.0]))
    assert np.array_equal(pv2.xi, [4.0, 5.0])
    assert np.array_equal(pv2.estimate_mask, pv.estimate_mask)
    with pytest.raises(ValueError):
        ParameterVector([1.0], [2.0], [True])


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset([0.0, 1.0], [[1.0, 2.0, 3.0]])
    with pytest.raises(ValueError):
        Dataset([1.0, 0.0], [[1.0, 2.0]])
    data = Dataset([0.0, 1.0, 2.0], [[1.0, 2.0, 3.0]])
    assert data.n == 3 and data.dim_state == 1 and data.span == 2.0


def test_autonomize_clock_model():
    # x' = theta * t, x(0) = xi  ->  x(t) = xi + theta t^2 / 2
    def rhs(x, eta, t):
        return np.array([eta[1] * t])

    jac_state, jac_eta, hess = finite_difference_derivatives(rhs, 1, 1)
    base = OdeModel(1, 1, rhs, jac_state, jac_eta, hess, name="clock")
    aug = autonomize(base)
    assert aug.dim_state == 2 and aug.numeric_derivatives
    traj = integrate(aug, np.array([0.3, 0.0, 2.0]), 4.0)
    x, clock = traj(4.0)
    assert abs(x - (0.3 + 2.0 * 16 / 2)) < 1e-6
    assert abs(clock - 4.0) < 1e-9
