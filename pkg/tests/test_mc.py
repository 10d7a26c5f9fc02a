import dataclasses

import numpy as np
import pytest

from accelode.errors import StudyAborted
from accelode.mc import (PRESETS, ScenarioSpec, get_preset, run_study,
                         simulate_dataset)
from accelode.models import catalog_get
from accelode.ode_core import integrate


def _small_linear(**kwargs):
    base = dict(name="t", model="linear", true_xi=(0.5,), true_theta=(-1.0,),
                n=21, t_end=10.0, replications=2)
    base.update(kwargs)
    return ScenarioSpec(**base)


def test_simulate_deterministic():
    spec = _small_linear()
    a = simulate_dataset(spec, 3)
    b = simulate_dataset(spec, 3)
    c = simulate_dataset(spec, 4)
    d = simulate_dataset(dataclasses.replace(spec, seed=1), 3)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert not np.array_equal(a.values, d.values)


def test_sigma_zero_is_noiseless():
    spec = _small_linear(sigma=(0.0,))
    data = simulate_dataset(spec, 0)
    traj = integrate(catalog_get("linear").model, spec.truth, 10.0, spec.tol)
    assert np.allclose(data.values, traj(data.times), atol=1e-12)


def test_noise_variance_law_of_large_numbers():
    spec = _small_linear(sigma=(0.05,))
    clean = simulate_dataset(dataclasses.replace(spec, sigma=(0.0,)), 0)
    draws = np.array([simulate_dataset(spec, k).values - clean.values
                      for k in range(400)])
    # pooled over 400 replicates x 21 points: relative se ~ 1.5%
    var = draws.var()
    assert abs(var - 0.0025) < 0.03 * 0.0025


def test_uniform_design():
    spec = _small_linear(design="uniform")
    data = simulate_dataset(spec, 0)
    assert np.all(np.diff(data.times) > 0)
    assert data.times.min() >= 0.0 and data.times.max() <= 10.0
    again = simulate_dataset(spec, 0)
    assert np.array_equal(data.times, again.times)


def test_run_study_structure():
    spec = _small_linear(replications=2)
    s = run_study(spec, keep_replicates=True)
    assert s.param_names == ["xi_1", "theta_1"]
    assert np.array_equal(s.truth, [0.5, -1.0])
    for est in ("accel", "nls"):
        es = s.estimators[est]
        assert es.mean.shape == (2,)
        assert es.n_ok == 2 and es.n_failed == 0
        assert np.all((0.0 <= es.coverage) & (es.coverage <= 1.0))
        reps = s.replicates[est]
        assert reps["point"].shape == (2, 2)
        assert reps["cover"].dtype == bool


def test_run_study_parallel_matches_serial():
    spec = _small_linear(replications=4, estimators=("accel",))
    serial = run_study(spec)
    parallel = run_study(spec, jobs=2)
    assert np.array_equal(serial.estimators["accel"].mean,
                          parallel.estimators["accel"].mean)
    assert np.array_equal(serial.estimators["accel"].ste,
                          parallel.estimators["accel"].ste)


def test_study_aborts_when_everything_fails():
    # bandwidths far below the grid spacing make every replicate fail
    spec = _small_linear(replications=3, estimators=("accel",),
                         bandwidth_constants=(1e-6,))
    with pytest.raises(StudyAborted):
        run_study(spec)


def test_known_xi_parameter_names():
    spec = _small_linear(known_xi=True)
    assert spec.param_names() == ["theta_1"]
    assert spec.truth.estimate_mask.tolist() == [False, True]


def test_spec_validation():
    with pytest.raises(ValueError):
        _small_linear(replications=0)
    with pytest.raises(ValueError):
        _small_linear(sigma=(-1.0,))
    with pytest.raises(ValueError):
        _small_linear(design="sobol")
    with pytest.raises(ValueError):
        _small_linear(design="explicit", grid=(0.0, 1.0))
    with pytest.raises(ValueError):
        simulate_dataset(_small_linear(sigma=(0.1, 0.2)), 0)


def test_preset_registry():
    expected = {"linear_A_n21", "linear_A_n51", "linear_A_n101",
                "lotka_n21", "lotka_n51", "lotka_n51_smoke",
                "nitrogen_n21", "barnes_n11",
                "alpha_pinene_a002", "alpha_pinene_a01", "smoke_r1"}
    assert expected <= set(PRESETS)
    assert get_preset("linear_B_n21").true_theta == (1.0,)
    assert get_preset("nitrogen_n21").sigma == (0.5,)
    assert get_preset("alpha_pinene_a002").known_xi
    assert get_preset("smoke_r1").replications == 1
    with pytest.raises(StudyAborted):
        get_preset("linear_Z_n21")
