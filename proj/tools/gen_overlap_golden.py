#!/usr/bin/env python3
"""Regenerate tests/data/overlap_golden.csv.

Independent of the C++ library: zeros come from brentq on scipy's
spherical_jn, and each integral is a plain midpoint sum on 10^6 points.
"""
import csv
import sys

import numpy as np
from scipy.optimize import brentq
from scipy.special import spherical_jn

POINTS = 1_000_000

CASES = [
    # l, n_row, n_col, beta
    (0, 1, 1, 0.0),
    (0, 1, 2, 0.0),
    (1, 1, 2, -2.0),
    (1, 1, 1, -2.0),
    (1, 2, 3, 5.0),
    (2, 1, 1, -4.0),
    (0, 3, 5, 20.0),
    (1, 1, 4, -10.0),
    (3, 2, 2, 1.5),
    (2, 3, 1, -6.0),
    (0, 2, 2, 50.0),
    (4, 1, 3, 3.0),
]


def zeros(l, count):
    found = []
    x = np.linspace(1e-3, (count + l + 3) * np.pi, 400_000)
    f = spherical_jn(l, x)
    for i in range(len(x) - 1):
        if f[i] == 0.0 or f[i] * f[i + 1] < 0:
            found.append(brentq(lambda s: spherical_jn(l, s), x[i], x[i + 1], xtol=1e-15, rtol=1e-15))
            if len(found) == count:
                break
    return found


def main(path):
    h = 1.0 / POINTS
    s = (np.arange(POINTS) + 0.5) * h
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["l", "n_row", "n_col", "beta", "re", "im"])
        for l, n1, n2, beta in CASES:
            z = zeros(l, max(n1, n2))
            f = s**2 * np.exp(-1j * beta * s**2) * spherical_jn(l, z[n1 - 1] * s) * spherical_jn(l, z[n2 - 1] * s)
            val = np.sum(f) * h
            w.writerow([l, n1, n2, "%.17g" % beta, "%.17g" % val.real, "%.17g" % val.imag])


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data/overlap_golden.csv")
