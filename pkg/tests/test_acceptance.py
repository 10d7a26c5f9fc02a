"""Acceptance gate for the package.

Each test prints a single PASS/FAIL line for its criterion directly to
the terminal (bypassing capture) so the gate summary is always visible.
The Monte Carlo criteria run the shipped presets at full replication
counts; expect this module to take on the order of ten minutes.

Known honest failures, asserted verbatim anyway: the linear-model
theta STE/ASYM bands (criterion 2) lie below the Cramer-Rao bound of
the n=21 design (discrete-information sd 0.166, plug-in asym sd 0.195),
the xi coverage cap of criterion 1 is exceeded because the plug-in
information formula understates the coarse design's information about
xi (CI too wide, coverage ~0.98), and the one-step-vs-NLS agreement
rate of criterion 5 tops out near 78% because the integral preliminary
estimator's errors-in-variables noise exceeds what a single undamped
Newton step can remove. See the project notes for the full analysis.
"""

import dataclasses
import os
import sys
import time

import numpy as np
import pytest

from accelode.accel import AccelConfig, fit, one_step, preliminary_estimate
from accelode.mc import get_preset, run_study
from accelode.models import CATALOG, catalog_get
from accelode.nls import NlsConfig, nls_fit
from accelode.ode_core import (Dataset, ParameterVector, ToleranceSpec,
                               integrate)
from accelode.sensitivity import estimating_function, solve_sensitivities

from conftest import make_dataset

TIGHT = ToleranceSpec(rtol=1e-11, atol=1e-13)


def _verdict(num, label, failures):
    status = "PASS" if not failures else "FAIL"
    line = f"[criterion {num:2d}] {status}: {label}"
    if failures:
        line += " -- " + "; ".join(failures)
    print(line, file=sys.__stdout__, flush=True)
    assert not failures, f"criterion {num}: " + "; ".join(failures)


def _check(failures, ok, msg):
    if not ok:
        failures.append(msg)


# ---------------------------------------------------------------- MC runs


@pytest.fixture(scope="module")
def linear_a_n21():
    t0 = time.monotonic()
    summary = run_study(get_preset("linear_A_n21"))
    return summary, time.monotonic() - t0


def test_criterion_1_linear_table(linear_a_n21):
    summary, elapsed = linear_a_n21
    es = summary.estimators["accel"]
    f = []
    _check(f, 0.495 <= es.mean[0] <= 0.515,
           f"mean xi {es.mean[0]:.4f} outside [0.495, 0.515]")
    _check(f, abs(es.mean[1] + 1.0) <= 0.02,
           f"mean theta {es.mean[1]:.4f} not within 0.02 of -1")
    for j, name in enumerate(("xi", "theta")):
        _check(f, 0.91 <= es.coverage[j] <= 0.975,
               f"{name} coverage {es.coverage[j]:.3f} outside [0.91, 0.975]")
    _check(f, elapsed < 300.0, f"runtime {elapsed:.0f}s >= 300s")
    _verdict(1, "linear setup A n=21 R=500 means/coverage/runtime", f)


def test_criterion_2_ste_asym(linear_a_n21):
    summary, _ = linear_a_n21
    es = summary.estimators["accel"]
    ste, asym = es.ste[1], es.asym[1]
    f = []
    _check(f, 0.10 <= ste <= 0.15,
           f"theta STE {ste:.4f} outside [0.10, 0.15]")
    _check(f, 0.11 <= asym <= 0.17,
           f"theta ASYM {asym:.4f} outside [0.11, 0.17]")
    _check(f, abs(ste / asym - 1.0) < 0.5,
           f"|STE/ASYM - 1| = {abs(ste / asym - 1.0):.3f} >= 0.5")
    _verdict(2, "linear setup A n=21 STE/ASYM agreement", f)


def test_criterion_3_lotka_full():
    t0 = time.monotonic()
    summary = run_study(get_preset("lotka_n51"))
    elapsed = time.monotonic() - t0
    es = summary.estimators["accel"]
    f = []
    for j in range(6):
        _check(f, 0.92 <= es.coverage[j] <= 0.98,
               f"coverage[{j}] {es.coverage[j]:.3f} outside [0.92, 0.98]")
    worst = float(np.max(np.abs(es.mean - summary.truth)))
    _check(f, worst <= 0.01, f"worst mean error {worst:.4f} > 0.01")
    _check(f, elapsed < 1800.0, f"runtime {elapsed:.0f}s >= 30min")
    _verdict(3, "Lotka-Volterra n=51 R=500 coverage/means/runtime", f)


def test_criterion_3_lotka_smoke():
    t0 = time.monotonic()
    summary = run_study(get_preset("lotka_n51_smoke"))
    elapsed = time.monotonic() - t0
    es = summary.estimators["accel"]
    f = []
    for j in range(6):
        _check(f, 0.88 <= es.coverage[j] <= 1.0,
               f"coverage[{j}] {es.coverage[j]:.3f} outside [0.88, 1.0]")
    _check(f, elapsed < 360.0, f"runtime {elapsed:.0f}s >= 6min")
    _verdict(3, "Lotka-Volterra R=100 smoke variant", f)


def test_criterion_4_nitrogen():
    summary = run_study(get_preset("nitrogen_n21"))
    es = summary.estimators["accel"]
    truth = summary.truth
    f = []
    rel1 = abs(es.mean[1] - truth[1]) / truth[1]
    rel2 = abs(es.mean[2] - truth[2]) / truth[2]
    _check(f, rel1 <= 0.01, f"theta1 mean off by {rel1:.2%} > 1%")
    _check(f, rel2 <= 0.02, f"theta2 mean off by {rel2:.2%} > 2%")
    for j, name in enumerate(summary.param_names):
        _check(f, es.coverage[j] >= 0.90,
               f"{name} coverage {es.coverage[j]:.3f} < 0.90")
    _verdict(4, "nitrogen-oxide n=21 R=500 means/coverage", f)


def test_criterion_5_accel_equals_nls():
    spec = dataclasses.replace(get_preset("linear_A_n51"), replications=200)
    summary = run_study(spec, keep_replicates=True)
    accel = summary.replicates["accel"]["point"]
    nls = summary.replicates["nls"]["point"]
    ste = summary.estimators["accel"].ste
    agree = np.all(np.abs(accel - nls) < 0.1 * ste, axis=1)
    frac = float(agree.mean())
    f = []
    _check(f, frac >= 0.90,
           f"|accel - nls| < 0.1*STE in only {frac:.1%} of replicates")
    _verdict(5, "one-step vs NLS paired agreement (200 reps, n=51)", f)


# ------------------------------------------------------ derivative oracles


def test_criterion_6_sensitivities_vs_fd():
    rng = np.random.default_rng(321)
    f = []
    for name in CATALOG:
        cat = catalog_get(name)
        eta = cat.default_eta.eta
        horizon = cat.default_horizon
        ts = np.sort(rng.uniform(0.05 * horizon, horizon, 10))
        _, s, z = solve_sensitivities(cat.model, eta, horizon,
                                      tol=TIGHT).at(ts)
        q = eta.size
        s_err = np.full(q, np.inf)
        z_err = np.full(q, np.inf)
        # sweep two step sizes: stiff columns need the small step, noisy
        # near-zero columns the large one
        for hrel in (1e-3, 1e-5):
            fd_s = np.empty_like(s)
            fd_z = np.empty_like(z)
            for a in range(q):
                h = hrel * max(1e-3, abs(eta[a]))
                ep, em = eta.copy(), eta.copy()
                ep[a] += h
                em[a] -= h
                xp, sp, _ = solve_sensitivities(cat.model, ep, horizon,
                                                tol=TIGHT).at(ts)
                xm, sm, _ = solve_sensitivities(cat.model, em, horizon,
                                                tol=TIGHT).at(ts)
                fd_s[:, :, a] = (xp - xm) / (2 * h)
                fd_z[:, :, :, a] = (sp - sm) / (2 * h)
            s_den = np.maximum(np.abs(fd_s).max(axis=(0, 1)),
                               1e-6 * np.abs(fd_s).max())
            z_den = np.maximum(np.abs(fd_z).max(axis=(0, 1, 2)),
                               1e-6 * np.abs(fd_z).max())
            s_err = np.minimum(
                s_err, np.abs(s - fd_s).max(axis=(0, 1)) / s_den)
            z_err = np.minimum(
                z_err, np.abs(z - fd_z).max(axis=(0, 1, 2)) / z_den)
        _check(f, s_err.max() < 1e-4,
               f"{name}: s rel err {s_err.max():.2e} >= 1e-4")
        _check(f, z_err.max() < 1e-3,
               f"{name}: z rel err {z_err.max():.2e} >= 1e-3")
    _verdict(6, "sensitivity/variational FD agreement, all models", f)


def _rss(model, eta_vec, data):
    traj = integrate(model, eta_vec, float(data.times[-1]), TIGHT)
    return float(np.sum((data.values - traj(data.times)) ** 2))


def test_criterion_7_estimating_function_oracle():
    rng = np.random.default_rng(777)
    f = []
    cases = [("linear", ParameterVector([0.5], [-1.0])),
             ("lotka_volterra", ParameterVector([1.0, 0.5], [0.5] * 4))]
    for name, eta in cases:
        model = catalog_get(name).model
        times = np.linspace(0.0, 6.0, 13)
        data = make_dataset(name, eta, times, sigma=0.05, rng=rng)
        probe = eta.with_eta(
            eta.eta * (1.0 + 0.05 * rng.standard_normal(eta.eta.size)))
        val = estimating_function(model, probe, data, tol=TIGHT)
        h = 1e-6
        for j in range(probe.eta.size):
            ep, em = probe.eta.copy(), probe.eta.copy()
            ep[j] += h
            em[j] -= h
            grad_j = (_rss(model, ep, data) - _rss(model, em, data)) / (2 * h)
            rel = abs(val.psi[j] + 0.5 * grad_j) / max(1.0, abs(grad_j))
            _check(f, rel < 1e-4,
                   f"{name}: psi[{j}] vs -grad/2 rel err {rel:.2e}")
            pp = estimating_function(model, probe.with_eta(ep), data,
                                     tol=TIGHT).psi
            pm = estimating_function(model, probe.with_eta(em), data,
                                     tol=TIGHT).psi
            fd = (pp - pm) / (2 * h)
            drel = np.max(np.abs(val.dpsi[:, j] - fd)) / max(
                1.0, np.max(np.abs(fd)))
            _check(f, drel < 1e-3,
                   f"{name}: dpsi[:,{j}] vs FD rel err {drel:.2e}")
    _verdict(7, "psi = -grad RSS / 2 and dpsi = FD Jacobian", f)


def test_criterion_8_exact_recovery():
    truth = ParameterVector([0.5], [-1.0])
    model = catalog_get("linear").model
    times = np.linspace(0.0, 10.0, 2001)
    traj = integrate(model, truth, 10.0, TIGHT)
    data = Dataset(times, traj(times))
    config = AccelConfig(include_interpolant=True, tol=TIGHT,
                         eval_grid_size=1001)
    f = []
    prelim = preliminary_estimate(model, data, 0.0, config)
    _check(f, np.max(np.abs(prelim.eta - truth.eta)) < 1e-4,
           f"SME err {np.max(np.abs(prelim.eta - truth.eta)):.2e} >= 1e-4")
    fixed = one_step(model, truth, data, TIGHT)
    _check(f, np.max(np.abs(fixed.eta - truth.eta)) < 1e-9,
           "one-step not a fixed point at the root")
    report = fit(model, data, config)
    _check(f, report.rss < 1e-10, f"accel refit rss {report.rss:.2e}")
    nls = nls_fit(model, data, NlsConfig(tol=TIGHT))
    _check(f, np.max(np.abs(nls.eta_est.eta - truth.eta)) < 1e-8,
           f"NLS err {np.max(np.abs(nls.eta_est.eta - truth.eta)):.2e}")
    _check(f, nls.rss < 1e-10, f"NLS rss {nls.rss:.2e}")
    _verdict(8, "noiseless exact recovery (SME/one-step/NLS)", f)


def test_criterion_9_real_data_gate():
    path = os.environ.get("ACCELODE_NITROGEN_CSV")
    if not path:
        print("[criterion  9] SKIP: set ACCELODE_NITROGEN_CSV to a "
              "transcribed data file (see scripts/check_nitrogen_real.py)",
              file=sys.__stdout__, flush=True)
        pytest.skip("real data not supplied")
    from accelode.cli import read_data_file
    data = read_data_file(path)
    config = AccelConfig(known_xi=(0.0,), include_interpolant=True)
    report = fit(catalog_get("nitrogen_oxide").model, data, config)
    theta1 = report.eta_est.theta[0]
    f = []
    _check(f, 4.5e-6 <= theta1 <= 4.7e-6,
           f"theta1 {theta1:.4e} outside [4.5e-6, 4.7e-6]")
    _verdict(9, "nitrogen-oxide real data", f)


def test_criterion_10_alpha_pinene():
    summary = run_study(get_preset("alpha_pinene_a002"))
    cov1 = summary.estimators["accel"].coverage[0]
    f = []
    _check(f, 0.70 <= cov1 <= 0.85,
           f"theta1 coverage {cov1:.3f} outside [0.70, 0.85]")
    _verdict(10, "alpha-pinene a=0.02 R=500 theta1 coverage", f)
