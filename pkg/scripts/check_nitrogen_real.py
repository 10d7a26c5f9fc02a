#!/usr/bin/env python3
"""Check the nitrogen-oxide fit against the classical gas-reaction data.

The measurements are not shipped with this repository; transcribe them
yourself from Bodenstein and Lindner's Table 39 (also reprinted as
Table I of Bellman, Jacquez, Kalaba and Schwimmer, Math. Biosci. 1,
1967): 14 concentration readings on [0, 39] with x(0) = 0 excluded.
Note one known typo in both printings: the reading 48.8 at t = 19 is
inconsistent with its neighbours and should be transcribed as 38.8.

Save the data as CSV in the package's data format::

    t,x1
    1,4.9
    2,9.4
    ...

and run::

    python3 scripts/check_nitrogen_real.py path/to/nitrogen.csv

The script fits the gas model with the initial value known to be zero
and asserts that the estimated first rate constant lands in
[4.5e-6, 4.7e-6], the range consistent with published analyses of this
data set.  Exit status 0 means the check passed.
"""

import sys

from accelode.accel import AccelConfig, fit
from accelode.cli import read_data_file
from accelode.models import catalog_get


def main(argv):
    if len(argv) != 2:
        print(__doc__)
        return 2
    data = read_data_file(argv[1])
    config = AccelConfig(known_xi=(0.0,), include_interpolant=True)
    report = fit(catalog_get("nitrogen_oxide").model, data, config)
    theta1, theta2 = report.eta_est.theta
    print(f"theta_1 = {theta1:.4e}")
    print(f"theta_2 = {theta2:.4e}")
    if report.ci is not None:
        for name, (lo, hi) in zip(("theta_1", "theta_2"), report.ci):
            print(f"{name} CI: [{lo:.4e}, {hi:.4e}]")
    if not 4.5e-6 <= theta1 <= 4.7e-6:
        print(f"FAIL: theta_1 {theta1:.4e} outside [4.5e-6, 4.7e-6]")
        return 1
    print("PASS: theta_1 within [4.5e-6, 4.7e-6]")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
