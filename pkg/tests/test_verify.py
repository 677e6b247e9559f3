import math

import numpy as np
import pytest

from catfeedback import (FeedbackParams, FieldState, TruncationConfig, analytic_coherent_dyad_decay,
                         apply_channel, cat_state, coherent_state, cycle_map_fb, damping_kraus,
                         decayed_cat, interference_weight, joint_cycle_oracle, trace_distance)
from catfeedback.verify import (ATOM_DIM, CPRIME_DIM, E, G, I, classical_pulse, cprime_exchange,
                                dispersive_unitary)
from catfeedback.fock import coherent_amplitudes

SMALL = TruncationConfig(12, tail_tol=1e-10)
# exp(-2 * 3.3 * (1 - exp(-1 / 6.6))), 30 digits
WEIGHT_T_DEC = 0.395372105557394322181


def _ket(atom, c):
    v = np.zeros(ATOM_DIM * CPRIME_DIM)
    v[atom * CPRIME_DIM + c] = 1
    return v


def test_dispersive_unitary():
    assert np.allclose(dispersive_unitary(0.0, SMALL), np.eye(3 * SMALL.dim))
    u = np.diag(dispersive_unitary(math.pi, SMALL)).reshape(3, SMALL.dim)
    parity = (-1.0) ** np.arange(SMALL.dim)
    assert np.allclose(u[E], parity) and np.allclose(u[G], parity)
    assert np.allclose(u[I], 1)


def test_dispersive_entangles_parity():
    # (|e> + |g>)/sqrt2 x |psi>, phi = pi/2, common rotation removed:
    # |e> part picks up nothing, |g> part picks up the parity
    d = SMALL.dim
    phi = math.pi / 2
    u = np.diag(dispersive_unitary(phi, SMALL)).reshape(3, d) * np.exp(1j * phi * np.arange(d))
    assert np.allclose(u[G], 1)
    assert np.allclose(u[E], (-1.0) ** np.arange(d))
    assert np.allclose(u[E] * u[G].conj(), (-1.0) ** np.arange(d))


def test_classical_pulses():
    for kind in ("pi_half_R1", "pi_half_R2", "pi_R2"):
        u = classical_pulse(kind)
        assert np.allclose(u.conj().T @ u, np.eye(3), atol=1e-15)
    u = classical_pulse("pi_half_R1")
    twice = u @ u @ np.array([1, 0, 0])
    assert abs(twice[G]) ** 2 == pytest.approx(1.0)
    assert np.allclose(classical_pulse("pi_R2") @ np.eye(3)[I], np.eye(3)[I])
    with pytest.raises(ValueError):
        classical_pulse("pi_R3")


@pytest.mark.parametrize("role", ["probe", "feedback"])
def test_cprime_exchange(role):
    u = cprime_exchange(role)
    assert np.allclose(u.conj().T @ u, np.eye(9))
    assert np.allclose(u @ _ket(E, 0), _ket(E, 0))
    # the role's phase convention makes its own transfer real and positive
    if role == "probe":
        assert np.allclose(u @ _ket(G, 0), _ket(I, 1))
    else:
        assert np.allclose(u @ _ket(I, 1), _ket(G, 0))


def test_dyad_decay_limits():
    trunc = TruncationConfig(20)
    d = analytic_coherent_dyad_decay(1.0, 1.0, 0.4, trunc)
    k = coherent_amplitudes(math.exp(-0.2), trunc.dim)
    assert np.allclose(d, np.outer(k, k))
    d = analytic_coherent_dyad_decay(1.0, -1.0, 60.0, trunc)
    assert d[0, 0] == pytest.approx(math.exp(-2), rel=1e-12)
    assert abs(d).sum() - abs(d[0, 0]) < 1e-12


@pytest.mark.parametrize("gt", [0.05, 1 / 6.6, 0.5])
def test_kraus_matches_dyad_oracle(odd_cat, trunc32, gt):
    out = apply_channel(odd_cat, damping_kraus(gt, 1.0, trunc32))
    assert trace_distance(out, decayed_cat(math.sqrt(3.3), -1, gt, trunc32)) < 1e-8


def test_interference_weight_at_t_dec():
    assert interference_weight(math.sqrt(3.3), 1 / 6.6) == pytest.approx(WEIGHT_T_DEC, rel=1e-14)
    assert abs(WEIGHT_T_DEC - math.exp(-1)) < 0.03


def test_oracle_lossless_identities():
    p = FeedbackParams(gamma=0.0, gamma_prime=0.0)
    rho = cat_state(1.0, -1, SMALL)
    assert trace_distance(joint_cycle_oracle(rho, 1, 1, p, SMALL), rho) < 1e-13
    vac = FieldState.fock(0, SMALL)
    assert np.allclose(joint_cycle_oracle(vac, 0, 0, p, SMALL).matrix,
                       FieldState.fock(1, SMALL).matrix, atol=1e-13)


@pytest.mark.parametrize("state", ["cat", "fock1", "coherent"])
def test_oracle_matches_field_map(params, state):
    rho = {"cat": cat_state(1.0, -1, SMALL), "fock1": FieldState.fock(1, SMALL),
           "coherent": coherent_state(0.8, SMALL)}[state]
    for l, q in [(0, 0), (1, 3), (3, 1)]:
        oracle, diag = joint_cycle_oracle(rho, q, l, params, SMALL, diagnostics=True)
        assert trace_distance(oracle, cycle_map_fb(rho, q, l, params, SMALL)) < 1e-10
        assert diag.level2_max == 0.0


def test_interleaved_loss_close_to_postponed(params):
    rho = cat_state(1.0, -1, SMALL)
    a = joint_cycle_oracle(rho, 1, 1, params, SMALL, cprime_mode="interleaved")
    b = cycle_map_fb(rho, 1, 1, params, SMALL)
    assert 0 < trace_distance(a, b) < 1e-4


def test_oracle_size_guard(params):
    with pytest.raises(ValueError):
        joint_cycle_oracle(FieldState.fock(0, TruncationConfig(20)), 0, 0, params, TruncationConfig(20))
