"""Phase-space and photon-statistics diagnostics of cavity states.

Wigner convention: W(beta) = (2/pi) tr[rho D(beta) P D(-beta)] with
beta = x + i p, so W(0, 0) = (2/pi) <P> and the integral over dx dp is tr rho.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

from . import _kernels
from .errors import TruncationError
from .fock import _matrix, coherent_amplitudes, fidelity, mean_photon, parity_expectation

DEFAULT_EXTENT = 4.0
DEFAULT_POINTS = 81
# extra Fock levels used when displacement operators are built by expm
DISPLACEMENT_PADDING = 40


@dataclass(frozen=True)
class WignerGrid:
    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray  # shape (len(p_axis), len(x_axis))

    def __post_init__(self):
        if self.values.shape != (len(self.p_axis), len(self.x_axis)):
            raise ValueError("values must have shape (len(p_axis), len(x_axis))")

    def integral(self):
        dx = self.x_axis[1] - self.x_axis[0]
        dp = self.p_axis[1] - self.p_axis[0]
        return float(self.values.sum() * dx * dp)

    def at(self, x, p):
        ix = int(np.argmin(np.abs(self.x_axis - x)))
        ip = int(np.argmin(np.abs(self.p_axis - p)))
        return float(self.values[ip, ix])


def default_axes(extent=DEFAULT_EXTENT, points=DEFAULT_POINTS):
    axis = np.linspace(-extent, extent, points)
    return axis, axis.copy()


@lru_cache(maxsize=8)
def _displaced_parities(xs, ps, dim):
    big = dim + DISPLACEMENT_PADDING
    a = np.diag(np.sqrt(np.arange(1, big, dtype=np.float64)), k=1)
    parity = (-1.0) ** np.arange(big)
    ops = []
    for p in ps:
        for x in xs:
            b = complex(x, p)
            d = expm(b * a.T - np.conj(b) * a)
            ops.append(((d * parity) @ d.conj().T)[:dim, :dim])
    return np.array(ops)


def wigner(rho, x_axis=None, p_axis=None, *, method="laguerre"):
    """Wigner function of ``rho`` on the rectangular grid x_axis x p_axis.

    ``method="laguerre"`` sums the closed-form Fock-pair contributions in a
    compiled kernel; ``method="displacement"`` builds D(beta) by matrix
    exponential in a padded basis (slower, cached per grid).
    """
    m = np.ascontiguousarray(_matrix(rho), dtype=np.complex128)
    if x_axis is None or p_axis is None:
        dx, dp = default_axes()
        x_axis = dx if x_axis is None else x_axis
        p_axis = dp if p_axis is None else p_axis
    xs = np.asarray(x_axis, dtype=np.float64)
    ps = np.asarray(p_axis, dtype=np.float64)
    n_max = m.shape[0] - 1
    r2 = np.max(xs ** 2) + np.max(ps ** 2)
    if r2 > n_max * (1 + 1e-12):
        raise TruncationError(f"grid reaches |beta|^2 = {r2:.4g} > n_max = {n_max}")

    if method == "laguerre":
        betas = (xs[None, :] + 1j * ps[:, None]).ravel()
        vals = _kernels.wigner_laguerre(m, betas).reshape(len(ps), len(xs))
    elif method == "displacement":
        ops = _displaced_parities(tuple(xs), tuple(ps), m.shape[0])
        vals = np.einsum("nm,kmn->k", m, ops)
        if np.max(np.abs(vals.imag)) > 1e-10:
            raise ArithmeticError("Wigner values acquired an imaginary part")
        vals = (2.0 / np.pi) * vals.real.reshape(len(ps), len(xs))
    else:
        raise ValueError(f"unknown method {method!r}")
    return WignerGrid(xs, ps, vals)


def wigner_origin(rho):
    return 2.0 / np.pi * parity_expectation(rho)


def _ket_state(psi):
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


class CoherenceMetrics(NamedTuple):
    wigner_origin: float
    parity_expect: float
    mean_photon: float
    mixture_fidelity: float
    cat_fidelity: float


def coherence_metrics(rho, alpha_ref, sign=-1):
    """Cat-state witnesses of ``rho`` against references built on ``alpha_ref``.

    ``mixture_fidelity`` compares with (|a><a| + |-a><-a|)/2 and
    ``cat_fidelity`` with the normalized cat |a> + sign |-a>, a = alpha_ref.
    Pass the attenuated amplitude when comparing with freely decayed states.
    """
    m = _matrix(rho)
    dim = m.shape[0]
    plus = coherent_amplitudes(alpha_ref, dim)
    minus = coherent_amplitudes(-alpha_ref, dim)
    mix = 0.5 * (_ket_state(plus) + _ket_state(minus))
    cat = plus + sign * minus
    cat_fid = fidelity(m, _ket_state(cat)) if np.linalg.norm(cat) > 1e-150 else float("nan")
    par = parity_expectation(m)
    return CoherenceMetrics(
        wigner_origin=2.0 / np.pi * par,
        parity_expect=par,
        mean_photon=mean_photon(m),
        mixture_fidelity=fidelity(m, mix),
        cat_fidelity=cat_fid,
    )


def offdiag_norm(rho):
    m = _matrix(rho)
    return float(np.linalg.norm(m - np.diag(np.diag(m))))


def support_01_mass(rho):
    d = np.diag(_matrix(rho)).real
    return float(d[:2].sum())


class StationaryReport(NamedTuple):
    offdiag_norm: float
    support_01_mass: float


def stationary_check(history):
    """Distance of the last state in ``history`` from a {|0>, |1>} diagonal mixture."""
    if len(history) == 0:
        raise ValueError("history must not be empty")
    last = history[-1]
    return StationaryReport(offdiag_norm(last), support_01_mass(last))
