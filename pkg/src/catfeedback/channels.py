"""Superoperators acting on the cavity field alone.

Photon loss at zero temperature is applied through its Kraus decomposition
with operators A_k that remove exactly k photons:

    A_k(t) = sum_n sqrt(C(n+k, k) eta^n (1 - eta)^k) |n><n+k|,  eta = exp(-gamma t)

Because A_k only lowers the photon number, restricting it to a truncated
basis is exact; the only approximation is cutting the sum over k.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

from . import _kernels
from .errors import TruncationError
from .fock import FieldState, _matrix


@dataclass(frozen=True, eq=False)
class KrausSet:
    """Damping Kraus operators for one exposure ``gamma_t``.

    ``coeffs[k, n]`` is the amplitude of ``|n><n+k|`` in A_k; the dense
    matrices are available through :attr:`operators`.
    """

    gamma_t: float
    coeffs: np.ndarray

    @property
    def k_max(self):
        return self.coeffs.shape[0] - 1

    @property
    def dim(self):
        return self.coeffs.shape[1]

    @property
    def operators(self):
        ops = []
        for k in range(self.k_max + 1):
            a = np.zeros((self.dim, self.dim), dtype=np.complex128)
            n = np.arange(self.dim - k)
            a[n, n + k] = self.coeffs[k, : self.dim - k]
            ops.append(a)
        return ops

    def completeness(self):
        """Diagonal of sum_k A_k^dag A_k, one entry per Fock level."""
        diag = np.zeros(self.dim)
        for k in range(self.k_max + 1):
            d = self.dim - k
            diag[k:] += self.coeffs[k, :d] ** 2
        return diag


def _jump_cutoff(n_max, loss, trunc):
    if loss == 0.0:
        return 0
    for k in range(trunc.k_max + 1):
        if k >= n_max or binom.sf(k, n_max, loss) < trunc.tail_tol:
            return k
    raise TruncationError(
        f"damping exposure needs more than k_max = {trunc.k_max} jumps to reach "
        f"tail_tol = {trunc.tail_tol:.3g} at n_max = {n_max}"
    )


@lru_cache(maxsize=4096)
def _kraus_cached(gamma_t, trunc):
    dim = trunc.dim
    loss = -np.expm1(-gamma_t)
    k_cut = _jump_cutoff(trunc.n_max, loss, trunc)
    coeffs = np.zeros((k_cut + 1, dim))
    if loss == 0.0:
        coeffs[0, :] = 1.0
    else:
        log_keep = -gamma_t
        log_loss = np.log(loss)
        for k in range(k_cut + 1):
            n = np.arange(dim - k)
            logc = (
                gammaln(n + k + 1) - gammaln(n + 1) - gammaln(k + 1)
                + n * log_keep + k * log_loss
            )
            coeffs[k, : dim - k] = np.exp(0.5 * logc)
    coeffs.flags.writeable = False
    return KrausSet(gamma_t=gamma_t, coeffs=coeffs)


def damping_kraus(gamma, t, trunc):
    if gamma < 0 or t < 0:
        raise ValueError("gamma and t must be non-negative")
    return _kraus_cached(float(gamma) * float(t), trunc)


def apply_channel(rho, ks):
    m = _matrix(rho)
    if m.shape[0] != ks.dim:
        raise ValueError(f"dimension mismatch: state {m.shape[0]} vs Kraus set {ks.dim}")
    out = _kernels.damping_sum(np.ascontiguousarray(m), ks.coeffs)
    return FieldState(out)


def damp(rho, gamma, t, trunc):
    """Shorthand for ``apply_channel(rho, damping_kraus(gamma, t, trunc))``."""
    return apply_channel(rho, damping_kraus(gamma, t, trunc))


def _parity_masks(dim):
    odd = (np.arange(dim) % 2).astype(bool)
    return odd, ~odd


def parity_projections(rho):
    """Split into (odd block, even block); both keep their sub-unit traces."""
    m = _matrix(rho)
    odd, even = _parity_masks(m.shape[0])
    rho_e = np.where(np.outer(odd, odd), m, 0.0)
    rho_g = np.where(np.outer(even, even), m, 0.0)
    return FieldState(rho_e, hermitize=False), FieldState(rho_g, hermitize=False)


def parity_interference(rho):
    """Cross-parity operators (rho_plus, rho_minus) = 1/4 [P r P - r +- P r -+ r P].

    They are not Hermitian; rho_minus is the adjoint of rho_plus.
    """
    m = _matrix(rho)
    p = (-1.0) ** np.arange(m.shape[0])
    prp = p[:, None] * m * p[None, :]
    pr = p[:, None] * m
    rp = m * p[None, :]
    return 0.25 * (prp - m + pr - rp), 0.25 * (prp - m - pr + rp)


def photon_injection(rho, tail_tol=1e-12):
    """Add one photon coherently to every Fock component: |n> -> |n+1>."""
    m = _matrix(rho)
    top = m[-1, -1].real
    if top >= tail_tol:
        raise TruncationError(
            f"photon injection would push population {top:.3g} past n_max = {m.shape[0] - 1}"
        )
    out = np.zeros_like(m)
    out[1:, 1:] = m[:-1, :-1]
    return FieldState(out, hermitize=False)


def cprime_survival(gamma_prime, q, tau_fb, t_cr_pr, t_cr_fb):
    """Probability that the memory photon in C' survives until the feedback atom reads it."""
    if min(gamma_prime, q, tau_fb, t_cr_pr, t_cr_fb) < 0:
        raise ValueError("all arguments must be non-negative")
    return float(np.exp(-gamma_prime * (q * tau_fb + t_cr_pr + t_cr_fb)))


def phase_diffusion_generator(rho, gamma):
    """-(gamma/2) [sqrt(n), [sqrt(n), rho]] as a plain matrix."""
    m = _matrix(rho)
    s = np.sqrt(np.arange(m.shape[0], dtype=np.float64))
    return -0.5 * gamma * (s[:, None] - s[None, :]) ** 2 * m

