"""Independent checks of the field-only cycle map.

``joint_cycle_oracle`` replays one feedback cycle step by step on the joint
space atom (levels e, g, i) x cavity C x memory cavity C' (levels 0, 1, 2),
using explicit pulses, the dispersive coupling and the resonant C' exchange,
and returns the reduced C state. ``analytic_coherent_dyad_decay`` gives the
closed-form image of |a><b| under photon loss.

Joint density matrices are stored as rank-6 arrays indexed
``[atom, n, c', atom', m, c'']``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .channels import damping_kraus, damp
from .errors import TruncationError
from .fock import FieldState, TruncationConfig, coherent_amplitudes, _matrix

E, G, I = 0, 1, 2
ATOM_DIM = 3
CPRIME_DIM = 3
MAX_ORACLE_NMAX = 15
LEVEL2_TOL = 1e-10

_CPRIME_TRUNC = TruncationConfig(n_max=CPRIME_DIM - 1, tail_tol=1e-300)


def dispersive_unitary(phi, trunc):
    """exp(+i phi n) on the |e> block, exp(-i phi n) on |g>, identity on |i>.

    Returned as a dense (3 dim) x (3 dim) matrix with index ``atom * dim + n``.
    """
    n = np.arange(trunc.dim)
    phases = np.ones((ATOM_DIM, trunc.dim), dtype=np.complex128)
    phases[E] = np.exp(1j * phi * n)
    phases[G] = np.exp(-1j * phi * n)
    return np.diag(phases.ravel())


def classical_pulse(kind):
    """Atom-space unitary (basis e, g, i) of a resonant classical pulse on e <-> g."""
    r = 1.0 / math.sqrt(2.0)
    if kind in ("pi_half_R1", "pi_half_R2"):
        # columns are images: |e> -> (|e> + |g>)/sqrt2, |g> -> (-|e> + |g>)/sqrt2
        u = np.array([[r, -r, 0], [r, r, 0], [0, 0, 1]], dtype=np.complex128)
    elif kind == "pi_R2":
        u = np.array([[0, 1, 0], [-1, 0, 0], [0, 0, 1]], dtype=np.complex128)
    else:
        raise ValueError(f"unknown pulse {kind!r}")
    return u


def _cprime_hamiltonian():
    b = np.diag(np.sqrt(np.arange(1, CPRIME_DIM, dtype=np.float64)), k=1)
    sig = np.zeros((ATOM_DIM, ATOM_DIM))
    sig[G, I] = 1.0  # |g><i|
    h = np.kron(sig, b)
    return h + h.T


def _level_phase(role):
    # The resonant pi pulse gives |g,0> -> -i|i,1> and |i,1> -> -i|g,0>.
    # Redefining the phase of the probe's |i> (or the feedback atom's |g>)
    # makes the transfer used by that atom real.
    d = np.ones(ATOM_DIM, dtype=np.complex128)
    if role == "probe":
        d[I] = -1j
    elif role == "feedback":
        d[G] = -1j
    else:
        raise ValueError(f"unknown role {role!r}")
    return np.kron(np.diag(d), np.eye(CPRIME_DIM))


def cprime_exchange(role, fraction=1.0):
    """Resonant exchange between atom levels g, i and C' (index ``atom * 3 + c'``).

    ``fraction = 1`` is the full pi pulse; smaller values give a partial
    pulse in the same phase convention (used for interleaved damping).
    """
    t = fraction * math.pi / 2.0  # in units of 1/Omega'
    u = expm(-1j * t * _cprime_hamiltonian())
    d = _level_phase(role)
    return d.conj().T @ u @ d


def _apply_field_kraus(rho, ops):
    out = np.zeros_like(rho)
    for a in ops:
        out += np.einsum("nN,aNcAMC,mM->ancAmC", a, rho, a.conj(), optimize=True)
    return out


def _apply_cprime_kraus(rho, ops):
    out = np.zeros_like(rho)
    for a in ops:
        out += np.einsum("cC,anCAmD,dD->ancAmd", a, rho, a.conj(), optimize=True)
    return out


def _apply_atom(rho, u):
    return np.einsum("aA,AncBmd,bB->ancbmd", u, rho, u.conj(), optimize=True)


def _apply_atom_field_diag(rho, phases):
    return rho * phases[:, :, None, None, None, None] * phases.conj()[None, None, None, :, :, None]


def _apply_atom_cprime(rho, v):
    v4 = v.reshape(ATOM_DIM, CPRIME_DIM, ATOM_DIM, CPRIME_DIM)
    return np.einsum("acAC,AnCBmD,bdBD->ancbmd", v4, rho, v4.conj(), optimize=True)


def _field_damp(rho, gamma, t, trunc):
    return _apply_field_kraus(rho, damping_kraus(gamma, t, trunc).operators)


def _cprime_damp(rho, gamma_t):
    return _apply_cprime_kraus(rho, damping_kraus(gamma_t, 1.0, _CPRIME_TRUNC).operators)


def _level2_population(rho):
    return float(np.einsum("ancanc->c", rho).real[2])


def _check_level2(rho, where):
    pop = _level2_population(rho)
    if pop > LEVEL2_TOL:
        raise TruncationError(f"C' level 2 populated ({pop:.3g}) after {where}")


def _trace_atom(rho):
    return np.einsum("ancamd->ncmd", rho)


def _with_atom(reduced, level):
    d, c = reduced.shape[0], reduced.shape[1]
    rho = np.zeros((ATOM_DIM, d, c, ATOM_DIM, d, c), dtype=np.complex128)
    rho[level, :, :, level, :, :] = reduced
    return rho


def _exchange(rho, role, params, crossing, mode):
    """C' exchange for one atom crossing, with C' loss per ``mode``."""
    if mode == "postponed":
        return _apply_atom_cprime(rho, cprime_exchange(role))
    # interleaved: Trotter steps of pulse and C' loss over the interaction time,
    # then loss for the rest of the crossing
    steps = 64
    t_int = math.pi / (2.0 * params.omega_prime)
    v = cprime_exchange(role, 1.0 / steps)
    for _ in range(steps):
        rho = _apply_atom_cprime(rho, v)
        rho = _cprime_damp(rho, params.gamma_prime * t_int / steps)
    return _cprime_damp(rho, params.gamma_prime * max(0.0, crossing - t_int))


@dataclass
class OracleDiagnostics:
    trace_before_renorm: float
    cprime_excited: float
    level2_max: float


def joint_cycle_oracle(rho, q, l, params, trunc_small, *, flight_split=0.5,
                       cprime_mode="postponed", diagnostics=False):
    """Reduced C state after one successful feedback cycle, simulated on the joint space.

    ``cprime_mode="postponed"`` lumps all C' loss into one channel before the
    feedback atom arrives; ``"interleaved"`` applies it during the crossings
    too. ``flight_split`` is the fraction of ``t0`` spent between C and C'.
    """
    if trunc_small.n_max > MAX_ORACLE_NMAX:
        raise ValueError(f"oracle limited to n_max <= {MAX_ORACLE_NMAX}")
    if cprime_mode not in ("postponed", "interleaved"):
        raise ValueError(f"unknown cprime_mode {cprime_mode!r}")
    field = _matrix(damp(rho, params.gamma, l * params.tau_pr, trunc_small))
    d = field.shape[0]
    level2 = 0.0

    cp0 = np.zeros((CPRIME_DIM, CPRIME_DIM), dtype=np.complex128)
    cp0[0, 0] = 1.0
    joint = np.einsum("nm,cd->ncmd", field, cp0)
    joint = _with_atom(joint, E)

    # probe: R1 pi/2, dispersive pi/2 phase in C, R2 pi/2
    joint = _apply_atom(joint, classical_pulse("pi_half_R1"))
    phi = math.pi / 2.0
    disp = np.diag(dispersive_unitary(phi, trunc_small)).reshape(ATOM_DIM, d)
    # drop the common exp(-i phi n) rotation of the dispersive shift so that
    # only the parity-conditional part acts (cavity rotating frame)
    frame = np.exp(1j * phi * np.arange(d))
    joint = _apply_atom_field_diag(joint, disp * frame[None, :])
    joint = _apply_atom(joint, classical_pulse("pi_half_R2"))

    # probe flight C -> C' and the probe crossing of C'
    joint = _field_damp(joint, params.gamma, flight_split * params.t0, trunc_small)
    joint = _exchange(joint, "probe", params, params.t_cr_pr, cprime_mode)
    level2 = max(level2, _level2_population(joint))
    _check_level2(joint, "probe exchange")

    # probe leaves unobserved; feedback atom waits q tau_fb, then enters C' in |i>
    joint = _with_atom(_trace_atom(joint), I)
    joint = _field_damp(joint, params.gamma, q * params.tau_fb, trunc_small)
    if cprime_mode == "postponed":
        exposure = params.gamma_prime * (q * params.tau_fb + params.t_cr_pr + params.t_cr_fb)
    else:
        exposure = params.gamma_prime * q * params.tau_fb
    joint = _cprime_damp(joint, exposure)
    joint = _exchange(joint, "feedback", params, params.t_cr_fb, cprime_mode)
    level2 = max(level2, _level2_population(joint))
    _check_level2(joint, "feedback exchange")

    # feedback flight C' -> C with the R2 pi pulse g -> e
    joint = _field_damp(joint, params.gamma, (1.0 - flight_split) * params.t0, trunc_small)
    joint = _apply_atom(joint, classical_pulse("pi_R2"))

    # idealized adiabatic release: |e, n> -> |g, n+1>; |i> (and the unused |g>)
    # pass untouched. Kraus operators on atom x C, index atom * d + n.
    shift = np.eye(d, k=-1)
    release = np.zeros((ATOM_DIM * d, ATOM_DIM * d))
    release[G * d:(G + 1) * d, E * d:(E + 1) * d] = shift
    keep = np.zeros_like(release)
    keep[I * d:(I + 1) * d, I * d:(I + 1) * d] = np.eye(d)
    keep_g = np.zeros_like(release)
    keep_g[G * d:(G + 1) * d, G * d:(G + 1) * d] = np.eye(d)
    flat = joint.reshape(ATOM_DIM * d, CPRIME_DIM, ATOM_DIM * d, CPRIME_DIM)
    out = sum(np.einsum("xX,XcYd,yY->xcyd", k, flat, k, optimize=True)
              for k in (release, keep, keep_g))
    joint = out.reshape(ATOM_DIM, d, CPRIME_DIM, ATOM_DIM, d, CPRIME_DIM)

    reduced = _trace_atom(joint)
    cprime_pops = np.einsum("ncnd->cd", reduced).real.diagonal()
    field_out = np.einsum("ncmc->nm", reduced)
    tr = float(np.trace(field_out).real)
    state = FieldState(field_out, normalize=True)
    if diagnostics:
        return state, OracleDiagnostics(tr, float(cprime_pops[1]), level2)
    return state


def analytic_coherent_dyad_decay(alpha_i, alpha_j, gamma_t, trunc):
    """Image of |alpha_i><alpha_j| under photon loss with exposure ``gamma_t``.

    Equals exp((1 - eta) [alpha_i conj(alpha_j) - (|alpha_i|^2 + |alpha_j|^2)/2])
    |alpha_i sqrt(eta)><alpha_j sqrt(eta)| with eta = exp(-gamma_t).
    """
    eta = math.exp(-gamma_t)
    loss = -math.expm1(-gamma_t)
    scalar = np.exp(loss * (alpha_i * np.conj(alpha_j) - 0.5 * (abs(alpha_i) ** 2 + abs(alpha_j) ** 2)))
    ki = coherent_amplitudes(alpha_i * math.sqrt(eta), trunc.dim)
    kj = coherent_amplitudes(alpha_j * math.sqrt(eta), trunc.dim)
    return scalar * np.outer(ki, kj.conj())


def decayed_cat(alpha, sign, gamma_t, trunc):
    """Analytic damped cat N^2 sum_ij s_i s_j decay(|a_i><a_j|), a = (alpha, -alpha)."""
    amps = (alpha, -alpha)
    signs = (1.0, float(sign))
    norm2 = 1.0 / (2.0 * (1.0 + sign * math.exp(-2.0 * abs(alpha) ** 2)))
    m = np.zeros((trunc.dim, trunc.dim), dtype=np.complex128)
    for ai, si in zip(amps, signs):
        for aj, sj in zip(amps, signs):
            m += si * sj * analytic_coherent_dyad_decay(ai, aj, gamma_t, trunc)
    return FieldState(norm2 * m)


def coherent_mixture(beta, trunc):
    """Equal mixture of |beta> and |-beta> built from diagonal dyads."""
    m = 0.5 * (analytic_coherent_dyad_decay(beta, beta, 0.0, trunc)
               + analytic_coherent_dyad_decay(-beta, -beta, 0.0, trunc))
    return FieldState(m)


def interference_weight(alpha, gamma_t):
    """Suppression exp(-2 |alpha|^2 (1 - eta)) of the cat's cross dyads."""
    return math.exp(-2.0 * abs(alpha) ** 2 * -math.expm1(-gamma_t))
