"""Embedded Dormand-Prince 5(4) pair with dense output.

Two interchangeable drivers share the same tableau and step-control
logic: :func:`integrate_py` takes an arbitrary Python callable
``rhs(t, y, params)``, while :func:`make_integrator_nb` specializes the
same loop for an @njit right-hand side.  Both return the accepted grid,
the states at the grid nodes, and per-step quartic interpolation
coefficients for continuous output.

Step size control is the standard PI (beta = 0.04) controller of the
DOPRI5 code; the interpolant is the free 4th-order one of the pair.
"""

import numpy as np

from ._backend import NUMBA_ENABLED, njit

# Butcher tableau (Dormand & Prince 1980).
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])

A = np.zeros((7, 7))
A[1, 0] = 1 / 5
A[2, :2] = (3 / 40, 9 / 40)
A[3, :3] = (44 / 45, -56 / 15, 32 / 9)
A[4, :4] = (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729)
A[5, :5] = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
A[6, :6] = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)

B = A[6].copy()  # 5th order weights (FSAL)

# 5th minus embedded 4th order weights: local error estimate.
E = np.array([
    71 / 57600, 0.0, -71 / 16695, 71 / 1920,
    -17253 / 339200, 22 / 525, -1 / 40,
])

# Coefficients of the quartic interpolant: y(t0 + q*h) =
# y0 + h * (K^T P) @ (q, q^2, q^3, q^4).
P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423,
     69997945 / 29380423],
])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
# PI controller exponents (order 5, beta = 0.04).
_PI_ALPHA = 0.7 / 5
_PI_BETA = 0.4 / 5

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_NONFINITE = 2


def integrate_py(rhs, t0, t1, y0, params, rtol, atol, max_steps=100_000):
    """Integrate ``y' = rhs(t, y, params)`` from t0 to t1 (t1 > t0).

    Returns ``(status, ts, ys, qh, nfev)`` where ``ts`` is the accepted
    grid (including both endpoints), ``ys`` the states at the nodes and
    ``qh[i]`` the (dim, 4) interpolation coefficient block for the step
    ``[ts[i], ts[i+1]]``.
    """
    y = np.asarray(y0, dtype=float).copy()
    dim = y.size
    t = float(t0)
    span = t1 - t0

    ts = [t]
    ys = [y.copy()]
    qh = []

    k = np.empty((7, dim))
    f0 = np.asarray(rhs(t, y, params), dtype=float)
    nfev = 1
    h = _initial_step(f0, y, span, rtol, atol)
    err_prev = 1e-4
    status = STATUS_OK

    for _ in range(max_steps):
        if t >= t1:
            break
        hmin = 16.0 * np.finfo(float).eps * max(abs(t), abs(t1))
        if h < hmin:
            status = STATUS_UNDERFLOW
            break
        if t + h > t1:
            h = t1 - t

        k[0] = f0
        for s in range(1, 7):
            dy = h * (A[s, :s] @ k[:s])
            k[s] = rhs(t + C[s] * h, y + dy, params)
        nfev += 6
        y_new = y + h * (B @ k)
        if not np.all(np.isfinite(y_new)):
            status = STATUS_NONFINITE
            break

        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = np.sqrt(np.mean(((h * (E @ k)) / scale) ** 2))

        if err <= 1.0:
            qh.append(h * (k.T @ P))
            t = t + h
            f0 = k[6]  # FSAL
            y = y_new
            ts.append(t)
            ys.append(y.copy())
            if err == 0.0:
                factor = MAX_FACTOR
            else:
                factor = min(
                    MAX_FACTOR,
                    SAFETY * err ** (-_PI_ALPHA) * err_prev ** _PI_BETA,
                )
            err_prev = max(err, 1e-4)
            h *= max(MIN_FACTOR, factor)
        else:
            h *= max(MIN_FACTOR, SAFETY * err ** (-0.2))
    else:
        status = STATUS_UNDERFLOW

    return status, np.array(ts), np.array(ys), np.array(qh), nfev


def _initial_step(f0, y0, span, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6 * span
    else:
        h = 0.01 * d0 / d1
    return min(h, 0.1 * span)


_NB_CACHE = {}


def make_integrator_nb(rhs_nb):
    """Compile the DOPRI5 driver for an @njit ``rhs(t, y, params)``.

    The returned function has the same contract as :func:`integrate_py`.
    Compiled drivers are cached per right-hand side.
    """
    if not NUMBA_ENABLED:
        raise RuntimeError("numba backend is disabled")
    cached = _NB_CACHE.get(rhs_nb)
    if cached is not None:
        return cached

    A_, B_, C_, E_, P_ = A, B, C, E, P
    rhs = rhs_nb

    @njit(cache=False)
    def _drive(t0, t1, y0, params, rtol, atol, max_steps):
        y = y0.copy()
        dim = y.size
        t = t0
        span = t1 - t0

        ts = np.empty(max_steps + 1)
        ys = np.empty((max_steps + 1, dim))
        qh = np.empty((max_steps, dim, 4))
        ts[0] = t
        ys[0] = y
        n_acc = 0

        k = np.empty((7, dim))
        f0 = rhs(t, y, params)
        nfev = 1

        scale0 = atol + rtol * np.abs(y)
        d0 = np.sqrt(np.mean((y / scale0) ** 2))
        d1 = np.sqrt(np.mean((f0 / scale0) ** 2))
        if d0 < 1e-5 or d1 < 1e-5:
            h = 1e-6 * span
        else:
            h = 0.01 * d0 / d1
        if h > 0.1 * span:
            h = 0.1 * span

        err_prev = 1e-4
        status = STATUS_OK
        steps = 0
        while t < t1:
            steps += 1
            if steps > max_steps or n_acc >= max_steps:
                status = STATUS_UNDERFLOW
                break
            hmin = 16.0 * 2.220446049250313e-16 * max(abs(t), abs(t1))
            if h < hmin:
                status = STATUS_UNDERFLOW
                break
            if t + h > t1:
                h = t1 - t

            k[0] = f0
            for s in range(1, 7):
                dy = np.zeros(dim)
                for j in range(s):
                    dy += A_[s, j] * k[j]
                k[s] = rhs(t + C_[s] * h, y + h * dy, params)
            nfev += 6

            y_new = np.zeros(dim)
            for j in range(7):
                y_new += B_[j] * k[j]
            y_new = y + h * y_new
            ok = True
            for i in range(dim):
                if not np.isfinite(y_new[i]):
                    ok = False
            if not ok:
                status = STATUS_NONFINITE
                break

            errv = np.zeros(dim)
            for j in range(7):
                errv += E_[j] * k[j]
            acc = 0.0
            for i in range(dim):
                sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
                acc += (h * errv[i] / sc) ** 2
            err = np.sqrt(acc / dim)

            if err <= 1.0:
                for i in range(dim):
                    for j in range(4):
                        v = 0.0
                        for s in range(7):
                            v += k[s, i] * P_[s, j]
                        qh[n_acc, i, j] = h * v
                t = t + h
                for i in range(dim):
                    f0[i] = k[6, i]
                y = y_new
                n_acc += 1
                ts[n_acc] = t
                ys[n_acc] = y
                if err == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = SAFETY * err ** (-_PI_ALPHA) * err_prev ** _PI_BETA
                    if factor > MAX_FACTOR:
                        factor = MAX_FACTOR
                if factor < MIN_FACTOR:
                    factor = MIN_FACTOR
                err_prev = max(err, 1e-4)
                h *= factor
            else:
                fac = SAFETY * err ** (-0.2)
                if fac < MIN_FACTOR:
                    fac = MIN_FACTOR
                h *= fac

        return status, ts[: n_acc + 1], ys[: n_acc + 1], qh[:n_acc], nfev

    def driver(t0, t1, y0, params, rtol, atol, max_steps=100_000):
        return _drive(
            float(t0), float(t1), np.asarray(y0, dtype=float),
            np.asarray(params, dtype=float), rtol, atol, max_steps,
        )

    _NB_CACHE[rhs_nb] = driver
    return driver


def dense_eval(ts, ys, qh, t_query):
    """Evaluate the piecewise-quartic interpolant at ``t_query``.

    ``t_query`` may be a scalar or 1d array inside ``[ts[0], ts[-1]]``
    (values are clipped to the ends).  Returns shape (m, dim).
    """
    tq = np.atleast_1d(np.asarray(t_query, dtype=float))
    tq = np.clip(tq, ts[0], ts[-1])
    idx = np.searchsorted(ts, tq, side="right") - 1
    idx = np.clip(idx, 0, len(ts) - 2)
    h = ts[idx + 1] - ts[idx]
    q = (tq - ts[idx]) / h
    powers = np.vstack([q, q**2, q**3, q**4]).T  # (m, 4)
    out = ys[idx] + np.einsum("mij,mj->mi", qh[idx], powers)
    # grid nodes must be hit exactly
    exact = tq == ts[idx]
    if np.any(exact):
        out[exact] = ys[idx[exact]]
    at_end = tq == ts[-1]
    if np.any(at_end):
        out[at_end] = ys[-1]
    return out
