"""Central finite-difference stencils.

Weights are the standard Fornberg coefficients for first derivatives on
symmetric stencils; ``order`` is the truncation order in the step.
"""

import numpy as np

# offsets k = 1..m, antisymmetric weights w_k for f(x + k h) - f(x - k h)
_FIRST = {
    2: (0.5,),
    4: (2.0 / 3.0, -1.0 / 12.0),
    6: (3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0),
    8: (4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0),
}


def first_offsets(order):
    """Integer offsets k used by a first-derivative stencil of ``order``."""
    try:
        m = len(_FIRST[order])
    except KeyError:
        raise ValueError(f"unsupported stencil order {order}") from None
    return [k for j in range(1, m + 1) for k in (j, -j)]


def first_derivative(samples, h, order):
    """Combine samples ordered as ``first_offsets(order)``.

    ``samples`` is a sequence of arrays, f(x + k h) for each offset k.
    """
    w = _FIRST[order]
    total = 0.0
    for j, wj in enumerate(w):
        total = total + wj * (samples[2 * j] - samples[2 * j + 1])
    return total / h


def central_diff(fn, x, h, order=2):
    """Derivative of a vectorised ``fn`` at ``x`` (broadcasting over x)."""
    return first_derivative([fn(x + k * h) for k in first_offsets(order)], h, order)


def lattice_first(values, h, axis):
    """Fourth-order first derivative along ``axis`` of a uniform lattice.

    The two outermost layers on each side are NaN.
    """
    f = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    out = np.full_like(f, np.nan)
    out[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    return np.moveaxis(out, 0, axis)


def lattice_second(values, h, axis):
    """Fourth-order second derivative along ``axis``; outer two layers NaN."""
    f = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    out = np.full_like(f, np.nan)
    out[2:-2] = (
        -f[:-4] + 16.0 * f[1:-3] - 30.0 * f[2:-2] + 16.0 * f[3:-1] - f[4:]
    ) / (12.0 * h * h)
    return np.moveaxis(out, 0, axis)
