"""Second-order finite differences on (u, v) grids.

Fields are arrays indexed ``[i, j]`` with ``i`` along u (axis 0) and ``j``
along v (axis 1); vector fields carry a trailing axis of length 3.
Interior nodes use centered stencils, the two boundary nodes use one-sided
second-order stencils.
"""

import numpy as np


def d1(a, h, axis):
    a = np.asarray(a, dtype=float)
    if a.shape[axis] < 3:
        raise ValueError("need at least 3 nodes along the differentiated axis")
    return np.gradient(a, h, axis=axis, edge_order=2)


def d2(a, h, axis):
    a = np.asarray(a, dtype=float)
    n = a.shape[axis]
    if n < 3:
        raise ValueError("need at least 3 nodes along the differentiated axis")
    a = np.moveaxis(a, axis, 0)
    out = np.empty_like(a)
    out[1:-1] = (a[2:] - 2.0 * a[1:-1] + a[:-2]) / h**2
    if n >= 4:
        out[0] = (2.0 * a[0] - 5.0 * a[1] + 4.0 * a[2] - a[3]) / h**2
        out[-1] = (2.0 * a[-1] - 5.0 * a[-2] + 4.0 * a[-3] - a[-4]) / h**2
    else:
        out[0] = out[1]
        out[-1] = out[1]
    return np.moveaxis(out, 0, axis)


def du(a, h):
    return d1(a, h, 0)


def dv(a, h):
    return d1(a, h, 1)


def duu(a, h):
    return d2(a, h, 0)


def dvv(a, h):
    return d2(a, h, 1)


def duv(a, h_u, h_v):
    return d1(d1(a, h_u, 0), h_v, 1)


def interior(a, k=1):
    """Drop ``k`` boundary rings from a 2D (or 2D-vector) field."""
    if k == 0:
        return a
    return a[k:-k, k:-k]


def fitted_order(hs, errors):
    """Least-squares slope of log(error) against log(h)."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    slope, _ = np.polyfit(np.log(hs), np.log(errors), 1)
    return float(slope)
