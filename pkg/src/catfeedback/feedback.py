"""Stroboscopic autofeedback cycle maps and their stochastic / averaged dynamics.

One cycle, given the probe waiting count ``l`` and the feedback waiting
count ``q``:

1. the field decays freely for ``l * tau_pr`` while the probe atom is counted;
2. the probe atom entangles the field parity with C' (odd part -> C' empty,
   even part -> one photon stored in C');
3. the field decays for ``t0 + q * tau_fb`` until the feedback atom reaches C;
4. if C' still holds its photon (probability ``s``) the feedback atom injects
   one photon into the even part.

With probability ``1 - p_r**2`` an atom preparation fails and the cycle is
pure damping for its whole duration.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .channels import apply_channel, damping_kraus, parity_projections, photon_injection, cprime_survival
from .fock import FieldState, TruncationConfig, _matrix

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FeedbackParams:
    """Protocol constants in SI units (rates in 1/s, angular frequencies in rad/s)."""

    gamma: float = 100.0
    gamma_prime: float = 100.0
    t0: float = 600e-6
    tau_pr: float = 15e-6
    tau_fb: float = 15e-6
    t_cr_pr: float = 30e-6
    t_cr_fb: float = 15e-6
    p1: float = 1.0 / math.e
    p_r: float = 0.9
    omega: float = TWO_PI * 24e3
    omega_prime: float = TWO_PI * 24e3
    delta: float = TWO_PI * 70e3
    l_cavity: float = 0.0075
    v_pr: float = 250.0
    v_fb: float = 500.0

    def __post_init__(self):
        if not 0 < self.p1 <= 1:
            raise ValueError(f"p1 must lie in (0, 1], got {self.p1}")
        if not 0 < self.p_r <= 1:
            raise ValueError(f"p_r must lie in (0, 1], got {self.p_r}")
        for name in ("gamma", "gamma_prime", "t0", "tau_pr", "tau_fb", "t_cr_pr",
                     "t_cr_fb", "omega", "omega_prime", "delta", "l_cavity", "v_pr", "v_fb"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class CycleRecord:
    l: int
    q: int
    prep_success: bool
    elapsed: float


def waiting_pmf(p1, l):
    if not 0 < p1 <= 1:
        raise ValueError(f"p1 must lie in (0, 1], got {p1}")
    if l < 0:
        raise ValueError("l must be non-negative")
    if p1 == 1.0:
        return 1.0 if l == 0 else 0.0
    return p1 * (1.0 - p1) ** l


def waiting_terms(p1, tail_eps):
    """Number of waiting counts kept per axis so the dropped tail is below ``tail_eps``."""
    if not tail_eps > 0:
        raise ValueError("tail_eps must be positive")
    if p1 == 1.0:
        return 1
    return max(1, math.ceil(math.log(tail_eps) / math.log(1.0 - p1)))


def _feedback_branch(rho_i, q, params, trunc):
    """Feedback branch applied to the state already damped over the probe wait."""
    rho_e, rho_g = parity_projections(rho_i)
    s = cprime_survival(params.gamma_prime, q, params.tau_fb, params.t_cr_pr, params.t_cr_fb)
    ks = damping_kraus(params.gamma, params.t0 + q * params.tau_fb, trunc)
    kept = apply_channel(rho_e.matrix + (1.0 - s) * rho_g.matrix, ks).matrix
    injected = photon_injection(apply_channel(rho_g, ks), tail_tol=trunc.tail_tol).matrix
    return kept + s * injected


def _dissipative_branch(rho_i, q, params, trunc):
    ks = damping_kraus(params.gamma, params.t0 + q * params.tau_fb, trunc)
    return apply_channel(rho_i, ks).matrix


def _renormalized(m):
    return FieldState(m, normalize=True)


def cycle_map_fb(rho, q, l, params, trunc):
    rho_i = apply_channel(rho, damping_kraus(params.gamma, l * params.tau_pr, trunc))
    return _renormalized(_feedback_branch(rho_i, q, params, trunc))


def cycle_map_diss(rho, q, l, params, trunc):
    t = params.t0 + l * params.tau_pr + q * params.tau_fb
    return _renormalized(apply_channel(rho, damping_kraus(params.gamma, t, trunc)).matrix)


def _cycle_unnormalized(rho, q, l, params, trunc):
    rho_i = apply_channel(rho, damping_kraus(params.gamma, l * params.tau_pr, trunc))
    w = params.p_r ** 2
    out = w * _feedback_branch(rho_i, q, params, trunc)
    if w < 1.0:
        out = out + (1.0 - w) * _dissipative_branch(rho_i, q, params, trunc)
    return out


def cycle_map(rho, q, l, params, trunc):
    """Cycle map averaged over atom-preparation success (weight ``p_r**2``)."""
    return _renormalized(_cycle_unnormalized(rho, q, l, params, trunc))


def _averaged_unnormalized(rho, params, trunc, tail_eps):
    n_terms = waiting_terms(params.p1, tail_eps)
    weights = np.array([waiting_pmf(params.p1, j) for j in range(n_terms)])
    weights /= weights.sum()

    # the probe-wait damping only depends on l, and the rest of the cycle is
    # linear in its output, so the l-average can be taken first
    m = _matrix(rho)
    rho_i = np.zeros_like(m)
    for l, w in enumerate(weights):
        rho_i += w * apply_channel(m, damping_kraus(params.gamma, l * params.tau_pr, trunc)).matrix

    pr2 = params.p_r ** 2
    out = np.zeros_like(m)
    for q, w in enumerate(weights):
        term = pr2 * _feedback_branch(rho_i, q, params, trunc)
        if pr2 < 1.0:
            term += (1.0 - pr2) * _dissipative_branch(rho_i, q, params, trunc)
        out += w * term
    return out


def averaged_cycle_map(rho, params, trunc, tail_eps=1e-6):
    """Cycle map averaged over both geometric waiting counts."""
    return _renormalized(_averaged_unnormalized(rho, params, trunc, tail_eps))


def mean_attempt_time(params):
    """Mean physical duration of one application of the cycle map."""
    mean_wait = (1.0 - params.p1) / params.p1
    return params.t0 + mean_wait * (params.tau_pr + params.tau_fb)


def mean_cycle_time(params):
    """Mean time between two successful photon transfers (attempts weighted by 1/p_r^2)."""
    return mean_attempt_time(params) / params.p_r ** 2


class ProtectionBound(NamedTuple):
    satisfied: bool
    t_rel_threshold: float


def protection_bound(params, alpha_sq):
    if alpha_sq < 0:
        raise ValueError("alpha_sq must be non-negative")
    threshold = 2.0 * mean_cycle_time(params) * alpha_sq
    t_rel = math.inf if params.gamma == 0 else 1.0 / params.gamma
    return ProtectionBound(t_rel > threshold, threshold)


def cycle_to_decoherence_ratio(params, alpha_sq):
    """t_cyc / t_dec with t_dec = 1 / (2 gamma |alpha|^2)."""
    return mean_cycle_time(params) * 2.0 * params.gamma * alpha_sq


class Constraint(NamedTuple):
    name: str
    satisfied: bool
    margin: float
    value: float
    bound: float


# relative mismatch accepted between the chosen probe velocity and the one
# fixed by the pi/2 dispersive phase
PROBE_VELOCITY_RTOL = 0.02


def derived_probe_velocity(params):
    """Velocity that makes the dispersive phase Omega^2 L / (delta v) equal pi/2."""
    return 2.0 * params.omega ** 2 * params.l_cavity / (math.pi * params.delta)


def check_timing_constraints(params):
    v = derived_probe_velocity(params)
    rel = abs(params.v_pr - v) / v
    pi_pulse = math.pi / (2.0 * params.omega_prime)
    inv_omega = 1.0 / params.omega
    return [
        Constraint("probe_velocity_pi_half_phase", rel <= PROBE_VELOCITY_RTOL,
                   PROBE_VELOCITY_RTOL - rel, v, params.v_pr),
        Constraint("probe_crossing_exceeds_pi_pulse", params.t_cr_pr > pi_pulse,
                   params.t_cr_pr - pi_pulse, params.t_cr_pr, pi_pulse),
        Constraint("feedback_crossing_exceeds_pi_pulse", params.t_cr_fb > pi_pulse,
                   params.t_cr_fb - pi_pulse, params.t_cr_fb, pi_pulse),
        Constraint("feedback_crossing_exceeds_inverse_rabi", params.t_cr_fb > inv_omega,
                   params.t_cr_fb - inv_omega, params.t_cr_fb, inv_omega),
    ]


@dataclass
class Evolution:
    """Per-cycle states of one evolution, index 0 being the initial state.

    ``elapsed_attempt`` sums the physical duration of every cycle (sampled
    for a trajectory, mean for the averaged map); ``elapsed_cycles`` counts
    ``mean_cycle_time`` per cycle. ``leakage`` is the cumulative trace lost
    to truncation before each renormalization.
    """

    states: list
    elapsed_attempt: np.ndarray
    elapsed_cycles: np.ndarray
    leakage: np.ndarray
    records: list | None = None


def make_rng(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def sample_cycle(rng, params):
    l = int(rng.geometric(params.p1)) - 1
    q = int(rng.geometric(params.p1)) - 1
    ok = bool(rng.random() < params.p_r ** 2)
    elapsed = params.t0 + l * params.tau_pr + q * params.tau_fb
    return CycleRecord(l, q, ok, elapsed)


def _trajectory_step(rho, rec, params, trunc):
    if rec.prep_success:
        rho_i = apply_channel(rho, damping_kraus(params.gamma, rec.l * params.tau_pr, trunc))
        return _feedback_branch(rho_i, rec.q, params, trunc)
    t = params.t0 + rec.l * params.tau_pr + rec.q * params.tau_fb
    return apply_channel(rho, damping_kraus(params.gamma, t, trunc)).matrix


def evolve(rho0, n_cycles, mode, params, trunc, *, seed=None, rng=None, tail_eps=1e-6):
    """Iterate the averaged map, or run one seeded Monte Carlo trajectory.

    ``mode`` is ``"averaged"`` or ``"monte_carlo"``; the latter needs ``seed``
    (or an explicit ``rng``).
    """
    if n_cycles < 0:
        raise ValueError("n_cycles must be non-negative")
    if mode == "monte_carlo":
        if rng is None:
            if seed is None:
                raise ValueError("monte_carlo mode needs a seed")
            rng = make_rng(seed)
    elif mode != "averaged":
        raise ValueError(f"unknown mode {mode!r}")

    rho = rho0 if isinstance(rho0, FieldState) else FieldState(rho0)
    states = [rho]
    attempt = [0.0]
    leak = [0.0]
    records = [] if mode == "monte_carlo" else None
    t_mean = mean_attempt_time(params)
    for _ in range(n_cycles):
        if mode == "averaged":
            m = _averaged_unnormalized(rho, params, trunc, tail_eps)
            attempt.append(attempt[-1] + t_mean)
        else:
            rec = sample_cycle(rng, params)
            records.append(rec)
            m = _trajectory_step(rho, rec, params, trunc)
            attempt.append(attempt[-1] + rec.elapsed)
        leak.append(leak[-1] + (1.0 - np.trace(m).real))
        rho = _renormalized(m)
        states.append(rho)
    cycles = mean_cycle_time(params) * np.arange(n_cycles + 1)
    return Evolution(states, np.array(attempt), cycles, np.array(leak), records)


@dataclass
class TrajectoryEnsemble:
    """Monte Carlo average over independent trajectories.

    ``batch_means`` holds the final-cycle mean of each contiguous batch of
    trajectories; its spread gives the standard error of ``mean_states[-1]``.
    """

    mean_states: list
    batch_means: np.ndarray
    records: list = field(repr=False)
    n_trajectories: int = 0

    def standard_error(self):
        """Trace-norm standard error of the final mean state (batch-means estimate)."""
        from .fock import trace_distance

        b = self.batch_means.shape[0]
        if b < 2:
            return math.nan
        final = self.mean_states[-1].matrix
        dev = [trace_distance(bm, final) for bm in self.batch_means]
        return math.sqrt(np.mean(np.square(dev)) / (b - 1))


def _run_batch(args):
    rho0, n_cycles, params, trunc, seqs = args
    dim = rho0.shape[0]
    sums = np.zeros((n_cycles + 1, dim, dim), dtype=np.complex128)
    records = []
    for ss in seqs:
        rng = np.random.Generator(np.random.Philox(ss))
        ev = evolve(FieldState(rho0), n_cycles, "monte_carlo", params, trunc, rng=rng)
        for i, s in enumerate(ev.states):
            sums[i] += s.matrix
        records.append(ev.records)
    return sums, records


def run_trajectories(rho0, n_cycles, params, trunc, n_trajectories, seed, *,
                     n_batches=20, workers=1):
    """Average ``n_trajectories`` seeded trajectories.

    Trajectory ``i`` always draws from the ``i``-th child of the master seed,
    and batches are reduced in index order, so the result does not depend on
    ``workers``.
    """
    if n_trajectories < 1:
        raise ValueError("n_trajectories must be positive")
    n_batches = max(1, min(n_batches, n_trajectories))
    children = np.random.SeedSequence(seed).spawn(n_trajectories)
    bounds = [i * n_trajectories // n_batches for i in range(n_batches + 1)]
    m0 = np.ascontiguousarray(_matrix(rho0))
    jobs = [(m0, n_cycles, params, trunc, children[bounds[b]:bounds[b + 1]])
            for b in range(n_batches)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_batch, jobs))
    else:
        results = [_run_batch(j) for j in jobs]

    total = np.zeros_like(results[0][0])
    batch_means = []
    records = []
    for b, (sums, recs) in enumerate(results):
        total += sums
        batch_means.append(sums[-1] / (bounds[b + 1] - bounds[b]))
        records.extend(recs)
    mean_states = [FieldState(total[i] / n_trajectories) for i in range(n_cycles + 1)]
    return TrajectoryEnsemble(mean_states, np.array(batch_means), records, n_trajectories)
