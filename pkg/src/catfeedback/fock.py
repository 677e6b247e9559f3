"""Truncated Fock-space states and elementary single-mode operators."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import poisson

from .errors import TruncationError


@dataclass(frozen=True)
class TruncationConfig:
    """Size of the retained Fock basis and of the Kraus jump sums.

    ``k_max`` caps the number of photon jumps kept in a damping Kraus sum;
    ``None`` means "up to ``n_max``". ``tail_tol`` is the probability mass
    we are willing to drop anywhere a sum is cut.
    """

    n_max: int = 32
    k_max: int | None = None
    tail_tol: float = 1e-12

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if self.k_max is None:
            object.__setattr__(self, "k_max", self.n_max)
        if not 0 <= self.k_max <= self.n_max:
            raise ValueError(f"k_max must lie in [0, n_max], got {self.k_max}")
        if not self.tail_tol > 0:
            raise ValueError("tail_tol must be positive")

    @property
    def dim(self):
        return self.n_max + 1


class FieldState:
    """Density matrix of one cavity mode in a truncated Fock basis.

    The wrapped array is read-only; every operation returns a new state.
    Blocks such as parity projections are also carried as ``FieldState``
    even though their trace is below one.
    """

    __slots__ = ("_m",)

    def __init__(self, matrix, *, hermitize=True, normalize=False):
        m = np.array(matrix, dtype=np.complex128, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        if hermitize:
            m = 0.5 * (m + m.conj().T)
        if normalize:
            tr = np.trace(m).real
            if tr <= 0:
                raise ValueError("cannot normalize a state with non-positive trace")
            m /= tr
        m.flags.writeable = False
        self._m = m

    @classmethod
    def from_ket(cls, psi):
        psi = np.asarray(psi, dtype=np.complex128)
        return cls(np.outer(psi, psi.conj()), normalize=True)

    @classmethod
    def fock(cls, n, trunc):
        psi = np.zeros(trunc.dim, dtype=np.complex128)
        psi[n] = 1.0
        return cls.from_ket(psi)

    @property
    def matrix(self):
        return self._m

    @property
    def dim(self):
        return self._m.shape[0]

    def trace(self):
        return float(np.trace(self._m).real)

    def normalized(self):
        return FieldState(self._m, hermitize=False, normalize=True)

    def populations(self):
        return np.diag(self._m).real.copy()

    def expect(self, op):
        return complex(np.trace(self._m @ op))

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self._m)[0])

    def __add__(self, other):
        return FieldState(self._m + _matrix(other), hermitize=False)

    def __sub__(self, other):
        return FieldState(self._m - _matrix(other), hermitize=False)

    def __mul__(self, scalar):
        return FieldState(self._m * scalar, hermitize=False)

    __rmul__ = __mul__

    def __repr__(self):
        return f"FieldState(dim={self.dim}, trace={self.trace():.12g})"


def _matrix(x):
    return x.matrix if isinstance(x, FieldState) else np.asarray(x)


def _check_amplitude(alpha, trunc):
    a2 = abs(alpha) ** 2
    if a2 > trunc.n_max / 4:
        raise TruncationError(
            f"|alpha|^2 = {a2:.4g} exceeds n_max/4 = {trunc.n_max / 4:.4g}"
        )
    tail = poisson.sf(trunc.n_max, a2)
    if tail > trunc.tail_tol:
        raise TruncationError(
            f"coherent state |alpha|^2 = {a2:.4g} drops Poisson mass {tail:.3g} "
            f"above n_max = {trunc.n_max} (tail_tol = {trunc.tail_tol:.3g})"
        )


def coherent_amplitudes(alpha, dim):
    """Unnormalized Fock amplitudes exp(-|a|^2/2) a^n / sqrt(n!) for n < dim."""
    amps = np.empty(dim, dtype=np.complex128)
    amps[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, dim):
        amps[n] = amps[n - 1] * alpha / np.sqrt(n)
    return amps


def coherent_state(alpha, trunc):
    _check_amplitude(alpha, trunc)
    return FieldState.from_ket(coherent_amplitudes(alpha, trunc.dim))


def cat_state(alpha, sign, trunc):
    """Normalized ``|alpha> + sign |-alpha>``; sign -1 is the odd cat."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    _check_amplitude(alpha, trunc)
    psi = coherent_amplitudes(alpha, trunc.dim) + sign * coherent_amplitudes(-alpha, trunc.dim)
    # exact parity support, not just up to rounding
    psi[(np.arange(trunc.dim) % 2) == (0 if sign < 0 else 1)] = 0.0
    if np.linalg.norm(psi) < 1e-150:
        raise ValueError("odd cat is undefined at alpha = 0")
    return FieldState.from_ket(psi)


@lru_cache(maxsize=None)
def _ladder(dim):
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=np.float64)), k=1).astype(np.complex128)
    a.flags.writeable = False
    return a


def ladder_operators(trunc):
    """Return (a, a_dagger, a_dagger a) as dense matrices."""
    a = _ladder(trunc.dim)
    num = np.diag(np.arange(trunc.dim, dtype=np.float64)).astype(np.complex128)
    return a.copy(), a.conj().T.copy(), num


def parity_operator(trunc):
    return np.diag((-1.0) ** np.arange(trunc.dim)).astype(np.complex128)


def parity_expectation(rho):
    m = _matrix(rho)
    signs = (-1.0) ** np.arange(m.shape[0])
    return float(np.dot(signs, np.diag(m).real))


def mean_photon(rho):
    m = _matrix(rho)
    return float(np.dot(np.arange(m.shape[0]), np.diag(m).real))


def _psd_sqrt(m):
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def _pure_vector(m, tol=1e-12):
    """Unit vector psi if m = |psi><psi| (purity within ``tol``), else None."""
    tr = np.trace(m).real
    if tr <= 0 or abs(np.vdot(m, m).real / tr ** 2 - 1.0) > tol:
        return None
    w, v = np.linalg.eigh(m)
    return v[:, -1]


def fidelity(rho, sigma):
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    When either argument is pure this reduces to <psi|other|psi>, which is
    evaluated directly to avoid the square root of near-zero eigenvalues.
    """
    a, b = _matrix(rho), _matrix(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    for pure, other in ((a, b), (b, a)):
        psi = _pure_vector(pure)
        if psi is not None:
            return float(min(1.0, max(0.0, np.vdot(psi, other @ psi).real)))
    s = _psd_sqrt(a)
    inner = s @ b @ s
    w = np.clip(np.linalg.eigvalsh(0.5 * (inner + inner.conj().T)), 0.0, None)
    return float(min(1.0, np.sum(np.sqrt(w)) ** 2))


def trace_distance(rho, sigma):
    a, b = _matrix(rho), _matrix(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))
