"""Four-point Lagrange interpolation on uniform grids.

Characteristic tracing integrates ODEs through sampled coefficient fields,
so off-node evaluation has to be C1; cubic Lagrange stencils give that and
reproduce node values exactly. The evaluation path is kept allocation-lean
because tracing calls it once per integrator stage.
"""

from __future__ import annotations

import numpy as np


def lagrange4(values, h, x, nu=0):
    """Evaluate the cubic interpolant of ``values`` (nodes i*h) at ``x``.

    Node values are reproduced exactly for nu = 0; nu = 1 and 2 give the
    interpolant's derivatives. Evaluation outside [0, N*h] extrapolates
    with the boundary stencil; callers that need a different tail
    behaviour must clip first.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 4:
        raise ValueError("cubic interpolation needs at least 4 nodes")
    scalar = np.ndim(x) == 0
    xx = np.atleast_1d(np.asarray(x, dtype=float)) / h
    base = np.clip(xx.astype(np.int64) - 1, 0, v.size - 4)
    s = xx - base
    s1 = s - 1.0
    s2 = s - 2.0
    s3 = s - 3.0
    if nu == 0:
        w0 = -s1 * s2 * s3 / 6.0
        w1 = s * s2 * s3 / 2.0
        w2 = -s * s1 * s3 / 2.0
        w3 = s * s1 * s2 / 6.0
    elif nu == 1:
        ss = s * s
        w0 = -(3.0 * ss - 12.0 * s + 11.0) / (6.0 * h)
        w1 = (3.0 * ss - 10.0 * s + 6.0) / (2.0 * h)
        w2 = -(3.0 * ss - 8.0 * s + 3.0) / (2.0 * h)
        w3 = (3.0 * ss - 6.0 * s + 2.0) / (6.0 * h)
    elif nu == 2:
        hh = h * h
        w0 = -s2 / hh
        w1 = (3.0 * s - 5.0) / hh
        w2 = (4.0 - 3.0 * s) / hh
        w3 = s1 / hh
    else:
        raise ValueError(f"unsupported derivative order {nu}")
    out = (w0 * v[base] + w1 * v[base + 1] + w2 * v[base + 2] + w3 * v[base + 3])
    return float(out[0]) if scalar else out
