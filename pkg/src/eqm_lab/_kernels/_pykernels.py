"""NumPy implementations of the hot kernels.

Conventions shared with the compiled module:

* A spin configuration over ``n`` directions is a flat index ``c`` in
  ``[0, 2**n)``. Direction ``j`` lives on bit ``n - 1 - j``; a clear bit is
  spin ``+1`` and a set bit is spin ``-1``. With this layout
  ``amps.reshape((2,) * n + (4,))`` puts direction ``j`` on axis ``j``.
* Quaternion components are stored in the last axis as ``(w, x, y, z)``.
"""
import numpy as np


def elementary_amplitudes(vectors, axis=-1, sign=1):
    """Sum of signed unit quaternions for every configuration.

    ``vectors`` is an ``(n, 3)`` array of unit directions. If ``axis >= 0``
    only configurations with spin ``sign`` on that direction keep their
    amplitude; the others are set to zero.
    """
    vectors = np.ascontiguousarray(vectors, dtype=np.float64)
    n = vectors.shape[0]
    out = np.zeros((2,) * n + (4,), dtype=np.float64)
    for j in range(n):
        shape = [1] * n + [3]
        shape[j] = 2
        pair = np.stack([vectors[j], -vectors[j]]).reshape(shape)
        out[..., 1:] += pair
    out = out.reshape(1 << n, 4)
    if axis >= 0:
        bit = (np.arange(1 << n) >> (n - 1 - axis)) & 1
        keep = 0 if sign > 0 else 1
        out[bit != keep] = 0.0
    return out


def project_amplitudes(amps, n, subset):
    """Quaternion marginal over the directions not in ``subset``.

    Output index ``t`` uses bit ``k - 1 - r`` for ``subset[r]`` so the
    result follows the same layout as a state on the subset alone.
    Summation is compensated: each pairwise add carries its exact rounding
    error (TwoSum), so cancelling terms cancel to within an ulp of the result.
    """
    subset = [int(s) for s in subset]
    cube = np.asarray(amps, dtype=np.float64).reshape((2,) * n + (4,))
    err = np.zeros_like(cube)
    for j in sorted((j for j in range(n) if j not in subset), reverse=True):
        a = np.take(cube, 0, axis=j)
        b = np.take(cube, 1, axis=j)
        total = a + b
        bb = total - a
        rounding = (a - (total - bb)) + (b - bb)
        err = np.take(err, 0, axis=j) + np.take(err, 1, axis=j) + rounding
        cube = total
    cube = cube + err
    kept = sorted(subset)
    order = [kept.index(s) for s in subset] + [len(subset)]
    cube = np.transpose(cube, order)
    return np.ascontiguousarray(cube.reshape(1 << len(subset), 4))


def sample_inverse_cdf(cum_a, cum_xr, cum_xi, cos_phi, sin_phi, u):
    """Inverse-CDF draw for each run from a phase-shifted two-term intensity.

    The CDF for run ``r`` at grid index ``m`` is
    ``cum_a[m] + 2 * (cos_phi[r] * cum_xr[m] + sin_phi[r] * cum_xi[m])``.
    Returns the smallest ``m`` whose CDF exceeds ``u[r]`` times the total.
    Binary search over the grid, vectorized across runs.
    """
    cum_a = np.asarray(cum_a, dtype=np.float64)
    cum_xr = np.asarray(cum_xr, dtype=np.float64)
    cum_xi = np.asarray(cum_xi, dtype=np.float64)
    c = np.asarray(cos_phi, dtype=np.float64)
    s = np.asarray(sin_phi, dtype=np.float64)
    m = cum_a.shape[0]
    last = m - 1
    total = cum_a[last] + 2.0 * (c * cum_xr[last] + s * cum_xi[last])
    target = np.asarray(u, dtype=np.float64) * total
    lo = np.zeros(c.shape[0], dtype=np.int64)
    hi = np.full(c.shape[0], last, dtype=np.int64)
    while True:
        active = lo < hi
        if not active.any():
            break
        mid = (lo + hi) >> 1
        val = cum_a[mid] + 2.0 * (c * cum_xr[mid] + s * cum_xi[mid])
        above = val > target
        hi = np.where(active & above, mid, hi)
        lo = np.where(active & ~above, mid + 1, lo)
    return lo
