"""Hot inner loops, each in a numba and a numpy flavour.

The numba versions are compiled lazily on first call. ``damping_sum`` and
``wigner_laguerre`` dispatch to whichever backend :mod:`._accel` selected;
the ``*_nb`` / ``*_np`` names stay importable so both can be benchmarked and
cross-checked in one process.
"""

import numpy as np

from ._accel import HAVE_NUMBA, njit


def damping_sum_np(rho, coeffs):
    """out[n, m] = sum_k c[k, n] c[k, m] rho[n + k, m + k]."""
    dim = rho.shape[0]
    out = np.zeros_like(rho)
    for k in range(coeffs.shape[0]):
        d = dim - k
        if d <= 0:
            break
        c = coeffs[k, :d]
        out[:d, :d] += np.outer(c, c) * rho[k:, k:]
    return out


@njit(cache=True)
def damping_sum_nb(rho, coeffs):
    dim = rho.shape[0]
    kmax = coeffs.shape[0]
    out = np.zeros_like(rho)
    for k in range(kmax):
        d = dim - k
        if d <= 0:
            break
        for n in range(d):
            cn = coeffs[k, n]
            if cn == 0.0:
                continue
            for m in range(d):
                out[n, m] += cn * coeffs[k, m] * rho[n + k, m + k]
    return out


def wigner_laguerre_np(rho, betas):
    """(2/pi) tr[rho D(b) P D(b)^dag] for each complex b in ``betas`` (1-D)."""
    dim = rho.shape[0]
    b = np.asarray(betas, dtype=np.complex128)
    r2 = (b * b.conjugate()).real
    x = 4.0 * r2
    damp = np.exp(-2.0 * r2)
    two_b = 2.0 * b
    acc = np.zeros(b.shape, dtype=np.float64)
    # pf_k holds exp(-2|b|^2) (2b)^k / sqrt(k!), i.e. the n = 0 prefactor
    pf_k = damp.astype(np.complex128)
    for k in range(dim):
        if k > 0:
            pf_k = pf_k * two_b / np.sqrt(k)
        pf = pf_k
        lag_prev = np.zeros_like(x)
        lag = np.ones_like(x)
        sign = 1.0
        for n in range(dim - k):
            if n == 1:
                lag_prev, lag = lag, 1.0 + k - x
            elif n > 1:
                lag_prev, lag = lag, ((2 * n - 1 + k - x) * lag - (n - 1 + k) * lag_prev) / n
            if n > 0:
                pf = pf * np.sqrt(n / (n + k))
            term = sign * pf * lag
            # rho[n, n + k] pairs with <n + k| Pi |n>
            val = rho[n, n + k] * term
            acc += val.real if k == 0 else 2.0 * val.real
            sign = -sign
    return acc * (2.0 / np.pi)


@njit(cache=True)
def wigner_laguerre_nb(rho, betas):
    dim = rho.shape[0]
    npts = betas.shape[0]
    out = np.empty(npts, dtype=np.float64)
    for p in range(npts):
        b = betas[p]
        r2 = b.real * b.real + b.imag * b.imag
        x = 4.0 * r2
        two_b = 2.0 * b
        pf_k = complex(np.exp(-2.0 * r2), 0.0)
        acc = 0.0
        for k in range(dim):
            if k > 0:
                pf_k = pf_k * two_b / np.sqrt(k)
            pf = pf_k
            lag_prev = 0.0
            lag = 1.0
            sign = 1.0
            for n in range(dim - k):
                if n == 1:
                    lag_prev = lag
                    lag = 1.0 + k - x
                elif n > 1:
                    nxt = ((2 * n - 1 + k - x) * lag - (n - 1 + k) * lag_prev) / n
                    lag_prev = lag
                    lag = nxt
                if n > 0:
                    pf = pf * np.sqrt(n / (n + k))
                val = rho[n, n + k] * (sign * pf * lag)
                if k == 0:
                    acc += val.real
                else:
                    acc += 2.0 * val.real
                sign = -sign
        out[p] = acc * (2.0 / np.pi)
    return out


if HAVE_NUMBA:
    damping_sum = damping_sum_nb
    wigner_laguerre = wigner_laguerre_nb
else:
    damping_sum = damping_sum_np
    wigner_laguerre = wigner_laguerre_np
