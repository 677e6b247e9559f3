import dataclasses
import math

import numpy as np
import pytest

from catfeedback import (FeedbackParams, parity_projections, FieldState, TruncationConfig, averaged_cycle_map,
                         cat_state, check_timing_constraints, coherent_state, cycle_map,
                         cycle_map_diss, cycle_map_fb, damp, evolve, mean_attempt_time,
                         mean_cycle_time, protection_bound, run_trajectories, trace_distance,
                         waiting_pmf)
from catfeedback.feedback import (_cycle_unnormalized, cycle_to_decoherence_ratio,
                                  derived_probe_velocity, sample_cycle, make_rng, waiting_terms)

# 30-digit evaluations of the mean-time formulas at the default parameters
MEAN_ATTEMPT_S = 6.51548454853771305805e-4
MEAN_CYCLE_S = 8.04380808461446056549e-4
THRESHOLD_S = 5.30891333584554397322e-3
PROBE_V = 246.857142857142857143

SMALL = TruncationConfig(16, tail_tol=1e-10)


def test_param_defaults_and_validation(params):
    assert params.omega == pytest.approx(2 * math.pi * 24e3)
    assert params.p1 == pytest.approx(1 / math.e)
    with pytest.raises(ValueError):
        FeedbackParams(p1=0.0)
    with pytest.raises(ValueError):
        FeedbackParams(p_r=1.5)
    with pytest.raises(ValueError):
        FeedbackParams(t0=-1.0)


def test_waiting_pmf():
    assert waiting_pmf(1.0, 0) == 1.0 and waiting_pmf(1.0, 3) == 0.0
    assert waiting_pmf(1 / math.e, 0) == pytest.approx(0.36787944117144233, rel=1e-15)
    mean = sum(l * waiting_pmf(1 / math.e, l) for l in range(400))
    assert mean == pytest.approx(math.e - 1, rel=1e-12)
    assert waiting_terms(1 / math.e, 1e-6) == 31


def test_fb_fixed_point_without_loss():
    p = FeedbackParams(gamma=0.0, gamma_prime=0.0)
    rho = cat_state(1.0, -1, SMALL)
    assert trace_distance(cycle_map_fb(rho, 2, 1, p, SMALL), rho) < 1e-13


def test_fb_single_photon_and_vacuum(params):
    p = dataclasses.replace(params, gamma_prime=0.0)
    eta = math.exp(-p.gamma * p.t0)
    out = cycle_map_fb(FieldState.fock(1, SMALL), 0, 0, p, SMALL)
    expected = np.zeros((17, 17))
    expected[1, 1], expected[0, 0] = eta, 1 - eta
    assert np.allclose(out.matrix, expected, atol=1e-14)
    out = cycle_map_fb(FieldState.fock(0, SMALL), 0, 0, p, SMALL)
    assert np.allclose(out.matrix, FieldState.fock(1, SMALL).matrix, atol=1e-14)


def test_diss_examples(params):
    vac = FieldState.fock(0, SMALL)
    assert np.allclose(cycle_map_diss(vac, 2, 3, params, SMALL).matrix, vac.matrix)
    eta = math.exp(-params.gamma * params.t0)
    out = cycle_map_diss(FieldState.fock(1, SMALL), 0, 0, params, SMALL)
    assert out.matrix[1, 1] == pytest.approx(eta, abs=1e-14)


def test_diss_equals_fb_without_injection(params):
    # s = 0: the feedback branch is plain damping of the parity-dephased state
    p = dataclasses.replace(params, gamma_prime=1e12)
    rho = coherent_state(1.0, SMALL)
    e, g = parity_projections(rho)
    a = cycle_map_fb(rho, 1, 2, p, SMALL)
    b = cycle_map_diss(FieldState(e.matrix + g.matrix), 1, 2, p, SMALL)
    assert trace_distance(a, b) < 1e-10
    even = cat_state(1.0, +1, SMALL)
    assert trace_distance(cycle_map_fb(even, 1, 2, p, SMALL),
                          cycle_map_diss(even, 1, 2, p, SMALL)) < 1e-10


def test_cycle_map_mixture(params):
    rho = cat_state(1.0, -1, SMALL)
    assert trace_distance(cycle_map(rho, 1, 1, dataclasses.replace(params, p_r=1.0), SMALL),
                          cycle_map_fb(rho, 1, 1, params, SMALL)) < 1e-14
    assert trace_distance(cycle_map(rho, 1, 1, dataclasses.replace(params, p_r=1e-9), SMALL),
                          cycle_map_diss(rho, 1, 1, params, SMALL)) < 1e-14
    fb = cycle_map_fb(rho, 0, 0, params, SMALL).matrix
    diss = cycle_map_diss(rho, 0, 0, params, SMALL).matrix
    mixed = _cycle_unnormalized(rho, 0, 0, params, SMALL)
    # both branches preserve trace here, so the unnormalized mixture is the plain one
    assert np.allclose(mixed, 0.81 * fb + 0.19 * diss, atol=1e-12)


def test_averaged_degenerate_and_bruteforce(params):
    rho = cat_state(1.0, -1, SMALL)
    p = dataclasses.replace(params, p1=1.0)
    assert trace_distance(averaged_cycle_map(rho, p, SMALL), cycle_map(rho, 0, 0, p, SMALL)) < 1e-14
    # plain double sum over (l, q) with the same truncated, renormalized weights
    n = waiting_terms(params.p1, 1e-3)
    w = np.array([waiting_pmf(params.p1, j) for j in range(n)])
    w /= w.sum()
    brute = sum(w[l] * w[q] * _cycle_unnormalized(rho, q, l, params, SMALL)
                for l in range(n) for q in range(n))
    brute = FieldState(brute, normalize=True)
    assert trace_distance(averaged_cycle_map(rho, params, SMALL, tail_eps=1e-3), brute) < 1e-13


def test_timing_formulas(params):
    assert mean_attempt_time(params) == pytest.approx(MEAN_ATTEMPT_S, rel=1e-13)
    assert mean_cycle_time(params) == pytest.approx(MEAN_CYCLE_S, rel=1e-13)
    assert mean_cycle_time(dataclasses.replace(params, p1=1.0, p_r=1.0)) == params.t0
    doubled = dataclasses.replace(params, tau_pr=30e-6, tau_fb=30e-6)
    extra = (math.e - 1) * 30e-6 / 0.81
    assert mean_cycle_time(doubled) - mean_cycle_time(params) == pytest.approx(extra, rel=1e-12)


def test_protection_bound(params):
    pb = protection_bound(params, 3.3)
    assert pb.satisfied
    assert pb.t_rel_threshold == pytest.approx(THRESHOLD_S, rel=1e-13)
    assert cycle_to_decoherence_ratio(params, 3.3) == pytest.approx(0.5309, abs=1e-4)
    assert protection_bound(dataclasses.replace(params, gamma=1e6), 0.0).satisfied
    assert not protection_bound(dataclasses.replace(params, gamma=1000.0), 3.3).satisfied


def test_timing_constraints(params):
    cons = {c.name: c for c in check_timing_constraints(params)}
    assert all(c.satisfied for c in cons.values())
    assert derived_probe_velocity(params) == pytest.approx(PROBE_V, rel=1e-13)
    assert cons["probe_crossing_exceeds_pi_pulse"].bound == pytest.approx(1.0416666666666667e-05)
    assert cons["feedback_crossing_exceeds_inverse_rabi"].bound == pytest.approx(6.631455962162306e-06)
    bad = check_timing_constraints(dataclasses.replace(params, v_pr=300.0))
    assert not bad[0].satisfied


def test_sample_cycle_statistics(params):
    rng = make_rng(1)
    recs = [sample_cycle(rng, params) for _ in range(20000)]
    mean_l = np.mean([r.l for r in recs])
    ok = np.mean([r.prep_success for r in recs])
    assert abs(mean_l - (math.e - 1)) < 0.06
    assert abs(ok - 0.81) < 0.015
    assert all(r.elapsed == params.t0 + r.l * params.tau_pr + r.q * params.tau_fb for r in recs[:50])


def test_evolve_zero_cycles_and_errors(params, odd_cat, trunc32):
    ev = evolve(odd_cat, 0, "averaged", params, trunc32)
    assert len(ev.states) == 1 and ev.states[0] is odd_cat
    with pytest.raises(ValueError):
        evolve(odd_cat, 1, "monte_carlo", params, trunc32)
    with pytest.raises(ValueError):
        evolve(odd_cat, 1, "sometimes", params, trunc32)


def test_monte_carlo_deterministic_limit(params):
    p = dataclasses.replace(params, p1=1.0, p_r=1.0)
    rho = cat_state(1.0, -1, SMALL)
    a = evolve(rho, 3, "averaged", p, SMALL)
    b = evolve(rho, 3, "monte_carlo", p, SMALL, seed=5)
    for x, y in zip(a.states, b.states):
        assert trace_distance(x, y) < 1e-13


def test_trajectories_reproducible_and_worker_independent(params):
    rho = cat_state(1.0, -1, SMALL)
    a = run_trajectories(rho, 2, params, SMALL, 12, seed=3, n_batches=4)
    b = run_trajectories(rho, 2, params, SMALL, 12, seed=3, n_batches=4, workers=2)
    assert np.array_equal(a.mean_states[-1].matrix, b.mean_states[-1].matrix)
    assert a.records == b.records
    assert np.isfinite(a.standard_error())


def test_evolution_bookkeeping(params, odd_cat, trunc32):
    ev = evolve(odd_cat, 3, "averaged", params, trunc32)
    assert np.allclose(ev.elapsed_attempt, MEAN_ATTEMPT_S * np.arange(4), rtol=1e-12)
    assert np.allclose(ev.elapsed_cycles, MEAN_CYCLE_S * np.arange(4), rtol=1e-12)
    assert ev.leakage[-1] < 1e-10
    for s in ev.states:
        assert abs(s.trace() - 1) < 1e-9
        assert s.min_eigenvalue() > -1e-9
