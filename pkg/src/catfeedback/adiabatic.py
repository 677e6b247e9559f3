"""Adiabatic rapid passage |e, n> -> |g, n+1> in a single excitation manifold.

Units: hbar = 1, so energies are angular frequencies (rad/s) and phases are
in radians. The detuning is swept linearly, delta(t) = delta0 * t / t_s for
|t| <= t_s. Basis order for 2-vectors is (|e, n>, |g, n+1>).
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from ._accel import njit
from .errors import ToleranceError


@dataclass(frozen=True)
class SweepParams:
    omega: float
    delta0: float
    t_s: float
    n: int = 0

    def __post_init__(self):
        if not self.delta0 > 0 or not self.t_s > 0:
            raise ValueError("delta0 and t_s must be positive")
        if self.n < 0:
            raise ValueError("n must be non-negative")

    @property
    def coupling(self):
        """Manifold coupling Omega * sqrt(n + 1)."""
        return self.omega * math.sqrt(self.n + 1)


def detuning(sp, t):
    return sp.delta0 * t / sp.t_s


def _check_time(sp, t):
    if abs(t) > sp.t_s * (1 + 1e-12):
        raise ValueError(f"|t| = {abs(t):.6g} exceeds t_s = {sp.t_s:.6g}")


def adiabatic_eigenvalues(sp, t):
    _check_time(sp, t)
    d = detuning(sp, t)
    root = math.sqrt(d * d / 4.0 + sp.coupling ** 2)
    centre = d * (sp.n + 0.5)
    return centre + root, centre - root


def adiabatic_eigenstate_plus(sp, t):
    _check_time(sp, t)
    d = detuning(sp, t)
    c = sp.coupling
    root = math.sqrt(d * d / 4.0 + c * c)
    if c == 0.0:
        if d == 0.0:
            raise ValueError("eigenstates are degenerate at zero coupling and detuning")
        return np.array([1.0, 0.0]) if d < 0 else np.array([0.0, 1.0])
    # root - d/2, written without cancellation for d > 0
    upper = root - d / 2.0 if d <= 0 else c * c / (root + d / 2.0)
    v = np.array([upper, c])
    return v / np.linalg.norm(v)


def dynamical_phase(sp):
    """Closed-form phase acquired on the upper adiabatic branch over the full sweep.

    Returns Phi_n = -(delta0 t_s / 2) [s + 2x log((s + 1)/(s - 1))] with
    x = Omega^2 (n+1) / delta0^2 and s = sqrt(1 + 4x), which equals
    -integral of E_plus over [-t_s, t_s].
    """
    x = (sp.coupling / sp.delta0) ** 2
    s = math.sqrt(1.0 + 4.0 * x)
    if x == 0.0:
        log_term = 0.0
    else:
        # (s+1)/(s-1) = (s+1)^2 / (4x); avoids forming s - 1
        log_term = 2.0 * x * (2.0 * math.log1p(s) - math.log(4.0 * x))
    return -0.5 * sp.delta0 * sp.t_s * (s + log_term)


def dynamical_phase_quadrature(sp):
    """-integral of E_plus(t) dt by adaptive quadrature (independent check).

    The term delta(t) (n + 1/2) is odd in t and integrates to zero, so only
    the square-root part is handed to the integrator.
    """
    c2 = sp.coupling ** 2

    def root(t):
        d = detuning(sp, t)
        return math.sqrt(d * d / 4.0 + c2)

    val, _ = quad(root, 0.0, sp.t_s, epsabs=0.0, epsrel=1e-12, limit=500)
    return -2.0 * val


def phase_spread(omega, delta0, t_s, n_values):
    """max_n |Phi_n - Phi_0| over the given photon numbers."""
    phases = [dynamical_phase(SweepParams(omega, delta0, t_s, n)) for n in n_values]
    return max(abs(p - phases[0]) for p in phases)


@njit(cache=True)
def _magnus4(psi0, n, omega, delta0, t_s, steps):
    # Fourth-order Magnus steps with the common diagonal delta (n + 1/2)
    # removed; that part integrates to zero over a symmetric sweep.
    c = omega * math.sqrt(n + 1.0)
    h = 2.0 * t_s / steps
    g1 = 0.5 - math.sqrt(3.0) / 6.0
    g2 = 0.5 + math.sqrt(3.0) / 6.0
    a = psi0[0]
    b = psi0[1]
    for j in range(steps):
        t = -t_s + j * h
        d1 = delta0 * (t + g1 * h) / t_s
        d2 = delta0 * (t + g2 * h) / t_s
        # A_i = -i H_i with H_i = [[-d_i/2, c], [c, d_i/2]]
        # Omega = h/2 (A1 + A2) + sqrt(3)/12 h^2 [A2, A1]
        dm = 0.5 * (d1 + d2)
        # [A2, A1] = -[H2, H1] = c (d2 - d1) [[0, 1], [-1, 0]]
        k = math.sqrt(3.0) / 12.0 * h * h * c * (d2 - d1)
        m00 = 1j * h * dm / 2.0
        m01 = -1j * h * c + k
        m10 = -1j * h * c - k
        # traceless: exp(M) = cosh(mu) I + sinh(mu)/mu M, mu^2 = m00^2 + m01 m10
        mu2 = m00 * m00 + m01 * m10
        mu = cmath.sqrt(mu2)
        if abs(mu) < 1e-300:
            ch = 1.0 + 0j
            sh = 1.0 + 0j
        else:
            ch = cmath.cosh(mu)
            sh = cmath.sinh(mu) / mu
        na = ch * a + sh * (m00 * a + m01 * b)
        nb = ch * b + sh * (m10 * a - m00 * b)
        a = na
        b = nb
    out = np.empty(2, dtype=np.complex128)
    out[0] = a
    out[1] = b
    return out


def sweep_integrate(sp, initial, steps=2000, *, tol=1e-9, max_doublings=12):
    """Propagate ``initial`` from -t_s to t_s under the two-level sweep Hamiltonian.

    Steps are doubled until two successive results agree to ``tol`` and the
    norm has drifted by less than ``tol``.
    """
    psi0 = np.asarray(initial, dtype=np.complex128)
    norm0 = np.linalg.norm(psi0)
    prev = _magnus4(psi0, sp.n, sp.omega, sp.delta0, sp.t_s, steps)
    for _ in range(max_doublings):
        steps *= 2
        cur = _magnus4(psi0, sp.n, sp.omega, sp.delta0, sp.t_s, steps)
        if np.max(np.abs(cur - prev)) < tol and abs(np.linalg.norm(cur) - norm0) < tol:
            return cur
        prev = cur
    raise ToleranceError(f"sweep integration did not converge to {tol:g} with {steps} steps")


def transfer_probability(sp, steps=2000):
    """Population of |g, n+1> after a full sweep starting in |e, n>."""
    psi = sweep_integrate(sp, np.array([1.0, 0.0]), steps)
    return float(abs(psi[1]) ** 2)
