"""Numba backend selection.

The hot numeric kernels (the adaptive integrator driver and the local
polynomial smoother) exist in two variants: an @njit-compiled one and a
pure-numpy one.  Setting the environment variable ``ACCELODE_NO_NUMBA=1``
(or numba being unavailable) selects the numpy path everywhere.  The two
paths are required to agree to tight tolerances; see
``tests/test_backends.py`` and ``benchmarks/bench_backends.py``.
"""

import os

_DISABLED = os.environ.get("ACCELODE_NO_NUMBA", "").strip() not in ("", "0")

if not _DISABLED:
    try:
        import numba
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False

if not NUMBA_ENABLED:

    def njit(*args, **kwargs):
        """No-op stand-in so modules can decorate unconditionally."""
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap
