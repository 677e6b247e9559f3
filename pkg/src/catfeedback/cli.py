"""Command line front end: ``catfeedback <command> --config run.toml``.

Exit codes: 0 ok, 1 configuration error, 2 numerical guard tripped,
3 a check suite failed its tolerance.
"""

import argparse
import csv
import json
import math
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, _accel
from . import config as cfgmod
from .adiabatic import (SweepParams, dynamical_phase, dynamical_phase_quadrature, phase_spread,
                        transfer_probability)
from .analysis import coherence_metrics, offdiag_norm, support_01_mass, wigner, default_axes
from .channels import damp
from .errors import CatFeedbackError
from .feedback import (check_timing_constraints, cycle_map_fb, cycle_to_decoherence_ratio, evolve,
                       mean_attempt_time, mean_cycle_time, protection_bound, run_trajectories)
from .fock import FieldState, TruncationConfig, cat_state, fidelity, parity_expectation, trace_distance
from .verify import decayed_cat, interference_weight, joint_cycle_oracle

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3

METRIC_COLUMNS = [
    "snapshot", "cycle", "elapsed_attempt_s", "elapsed_cycles_s", "trace", "wigner_origin",
    "parity_expect", "mean_photon", "mixture_fidelity", "cat_fidelity", "offdiag_norm",
    "support_01_mass", "leakage",
]


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _write_rho(path, rho):
    m = rho.matrix if isinstance(rho, FieldState) else rho
    d = m.shape[0]
    rows = ((n, k, m[n, k].real, m[n, k].imag) for n in range(d) for k in range(d))
    _write_csv(path, ["n", "m", "re", "im"], rows)


def _write_wigner(path, rho, cfg):
    xs, ps = default_axes(cfg["wigner.extent"], cfg["wigner.points"])
    grid = wigner(rho, xs, ps)
    rows = ((x, p, grid.values[j, i]) for j, p in enumerate(ps) for i, x in enumerate(xs))
    _write_csv(path, ["x", "p", "w"], rows)


def _versions():
    import scipy

    out = {"catfeedback": __version__, "python": platform.python_version(),
           "numpy": np.__version__, "scipy": scipy.__version__}
    if _accel.HAVE_NUMBA:
        import numba

        out["numba"] = numba.__version__
    return out


def _write_manifest(out, command, cfg):
    manifest = {"command": command, "config": cfg, "seed": cfg["run.seed"],
                "backend": _accel.backend(), "versions": _versions()}
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _initial_state(cfg, trunc):
    return cat_state(cfgmod.alpha(cfg), cfg["state.cat_sign"], trunc)


def _print_table(rows, quiet):
    if quiet:
        return
    for name, ok, value, bound, margin in rows:
        flag = "PASS" if ok else "FAIL"
        print(f"{flag:4}  {name:44} value={value:.6g}  bound={bound:.6g}  margin={margin:.3g}")


def cmd_run(cfg, out, quiet):
    params = cfgmod.feedback_params(cfg)
    trunc = cfgmod.truncation(cfg)
    rho0 = _initial_state(cfg, trunc)
    n = cfg["run.n_cycles"]
    alpha = cfgmod.alpha(cfg)
    sign = cfg["state.cat_sign"]

    if cfg["run.mode"] == "averaged":
        ev = evolve(rho0, n, "averaged", params, trunc, tail_eps=cfg["run.averaged_tail_eps"])
        states, attempt, leak = ev.states, ev.elapsed_attempt, ev.leakage
        traj_rows = None
    elif cfg["run.n_trajectories"] == 1:
        ev = evolve(rho0, n, "monte_carlo", params, trunc, seed=cfg["run.seed"])
        states, attempt, leak = ev.states, ev.elapsed_attempt, ev.leakage
        traj_rows = [(0, i + 1, r.l, r.q, r.prep_success, r.elapsed) for i, r in enumerate(ev.records)]
    else:
        ens = run_trajectories(rho0, n, params, trunc, cfg["run.n_trajectories"], cfg["run.seed"],
                               workers=cfg["run.workers"])
        states = ens.mean_states
        per_traj = np.array([[0.0] + [r.elapsed for r in recs] for recs in ens.records])
        attempt = np.cumsum(per_traj, axis=1).mean(axis=0)
        # per-trajectory renormalization hides truncation loss from the mean
        leak = np.full(n + 1, math.nan)
        traj_rows = [(k, i + 1, r.l, r.q, r.prep_success, r.elapsed)
                     for k, recs in enumerate(ens.records) for i, r in enumerate(recs)]
        if not quiet:
            print(f"ensemble standard error (trace norm) = {ens.standard_error():.3g}")
    cycles_time = mean_cycle_time(params) * np.arange(n + 1)

    snap_dir = out / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    stride = cfg["run.snapshot_stride"]
    picked = sorted(set(range(0, n + 1, stride)) | {n})
    rows = []
    for k, c in enumerate(picked):
        rho = states[c]
        met = coherence_metrics(rho, alpha, sign)
        rows.append((k, c, attempt[c], cycles_time[c], rho.trace(), met.wigner_origin,
                     met.parity_expect, met.mean_photon, met.mixture_fidelity, met.cat_fidelity,
                     offdiag_norm(rho), support_01_mass(rho), leak[c]))
        _write_rho(snap_dir / f"rho_cycle{c:04d}.csv", rho)
        if cfg["wigner.enabled"]:
            _write_wigner(snap_dir / f"wigner_cycle{c:04d}.csv", rho, cfg)
    _write_csv(out / "metrics.csv", METRIC_COLUMNS, rows)
    if traj_rows is not None:
        _write_csv(out / "trajectories.csv",
                   ["trajectory", "cycle", "l", "q", "prep_success", "elapsed_s"], traj_rows)
    if not quiet:
        last = rows[-1]
        print(f"{len(rows)} snapshots written to {out}; final W(0,0) = {last[5]:.6f}")
    return EXIT_OK


def cmd_nofeedback(cfg, out, quiet):
    params = cfgmod.feedback_params(cfg)
    trunc = cfgmod.truncation(cfg)
    alpha = cfgmod.alpha(cfg)
    sign = cfg["state.cat_sign"]
    rho0 = _initial_state(cfg, trunc)
    gamma = params.gamma
    times = [("t_rel", float(f) / gamma) for f in cfg["nofeedback.times_over_t_rel"]]
    if cfg["nofeedback.include_t_dec"]:
        times.append(("t_dec", 1.0 / (2.0 * gamma * abs(alpha) ** 2)))

    snap_dir = out / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    vacuum = FieldState.fock(0, trunc)
    rows = []
    for k, (label, t) in enumerate(times):
        gt = gamma * t
        rho = damp(rho0, gamma, t, trunc)
        beta = alpha * math.exp(-gt / 2.0)
        met = coherence_metrics(rho, beta, sign)
        oracle = decayed_cat(alpha, sign, gt, trunc)
        norm2 = 1.0 / (2.0 * (1.0 + sign * math.exp(-2.0 * abs(alpha) ** 2)))
        measured = sign * (parity_expectation(rho) / (2.0 * norm2) - math.exp(-2.0 * abs(beta) ** 2))
        rows.append((k, label, t, rho.trace(), met.wigner_origin, met.mixture_fidelity,
                     met.cat_fidelity, fidelity(rho, vacuum), measured, interference_weight(alpha, gt),
                     trace_distance(rho, oracle)))
        _write_rho(snap_dir / f"rho_nofb{k:02d}.csv", rho)
        if cfg["wigner.enabled"]:
            _write_wigner(snap_dir / f"wigner_nofb{k:02d}.csv", rho, cfg)
    _write_csv(out / "nofeedback.csv",
               ["snapshot", "label", "time_s", "trace", "wigner_origin", "mixture_fidelity",
                "cat_fidelity", "vacuum_fidelity", "interference_measured", "interference_analytic",
                "oracle_trace_distance"], rows)
    if not quiet:
        for r in rows:
            print(f"t = {r[2] * 1e3:8.4f} ms  W(0,0) = {r[4]: .5f}  mixture F = {r[5]:.5f}  "
                  f"vacuum F = {r[7]:.5f}  interference {r[8]:.6g} (analytic {r[9]:.6g})")
    return EXIT_OK


def cmd_adiabatic_check(cfg, out, quiet):
    omega = 2.0 * math.pi * cfg["coupling.omega_over_2pi_hz"]
    delta0 = cfg["adiabatic.delta0_over_omega"] * omega
    t_s = cfg["adiabatic.omega_t_s"] / omega
    rows = []
    for n in cfg["adiabatic.n_values"]:
        p = transfer_probability(SweepParams(omega, delta0, t_s, int(n)))
        rows.append((f"transfer_n{n}", p > cfg["adiabatic.min_transfer"], p,
                     cfg["adiabatic.min_transfer"], p - cfg["adiabatic.min_transfer"]))
    worst = 0.0
    for fo in (0.5, 1.0, 2.0):
        for fd in (0.5, 1.0, 2.0):
            for ft in (0.5, 1.0, 2.0):
                sp = SweepParams(omega * fo, delta0 * fd, t_s * ft)
                closed, quad = dynamical_phase(sp), dynamical_phase_quadrature(sp)
                worst = max(worst, abs(closed - quad) / abs(quad))
    rtol = cfg["adiabatic.phase_rtol"]
    rows.append(("phase_closed_form_vs_quadrature_rel", worst < rtol, worst, rtol, rtol - worst))
    spread = phase_spread(omega, delta0, t_s, range(cfg["adiabatic.phase_n_max"] + 1))
    bound = cfg["adiabatic.max_phase_spread_rad"]
    rows.append(("phase_spread_rad", spread < bound, spread, bound, bound - spread))
    return _finish_checks(out / "adiabatic_check.csv", rows, quiet)


def cmd_oracle_check(cfg, out, quiet):
    params = cfgmod.feedback_params(cfg)
    try:
        small = TruncationConfig(cfg["oracle.n_max"], tail_tol=cfg["oracle.tail_tol"])
    except ValueError as exc:
        raise cfgmod.ConfigError(str(exc)) from exc
    rho = cat_state(cfg["oracle.alpha"], -1, small)
    tol = cfg["oracle.tolerance"]
    rows = []
    for l in cfg["oracle.l_values"]:
        for q in cfg["oracle.q_values"]:
            d = trace_distance(joint_cycle_oracle(rho, q, l, params, small),
                               cycle_map_fb(rho, q, l, params, small))
            rows.append((f"oracle_l{l}_q{q}", d < tol, d, tol, tol - d))
    if not quiet:
        print(f"max trace distance = {max(r[2] for r in rows):.3g}")
    return _finish_checks(out / "oracle_check.csv", rows, quiet)


def cmd_timing(cfg, out, quiet):
    params = cfgmod.feedback_params(cfg)
    alpha_sq = abs(cfgmod.alpha(cfg)) ** 2
    t_rel = 1.0 / params.gamma if params.gamma > 0 else math.inf
    pb = protection_bound(params, alpha_sq)
    rows = [("t_rel_exceeds_protection_threshold_s", pb.satisfied, t_rel, pb.t_rel_threshold,
             t_rel - pb.t_rel_threshold)]
    for c in check_timing_constraints(params):
        rows.append((c.name, c.satisfied, c.value, c.bound, c.margin))
    if not quiet:
        print(f"mean attempt time   = {mean_attempt_time(params) * 1e6:.3f} us")
        print(f"mean cycle time     = {mean_cycle_time(params) * 1e6:.3f} us")
        print(f"t_cyc / t_dec       = {cycle_to_decoherence_ratio(params, alpha_sq):.4f}")
    _write_csv(out / "timing_summary.csv", ["quantity", "value"], [
        ("mean_attempt_time_s", mean_attempt_time(params)),
        ("mean_cycle_time_s", mean_cycle_time(params)),
        ("protection_threshold_s", pb.t_rel_threshold),
        ("cycle_to_decoherence_ratio", cycle_to_decoherence_ratio(params, alpha_sq)),
    ])
    return _finish_checks(out / "timing_check.csv", rows, quiet)


def _finish_checks(path, rows, quiet):
    _write_csv(path, ["check", "passed", "value", "bound", "margin"], rows)
    _print_table(rows, quiet)
    return EXIT_OK if all(r[1] for r in rows) else EXIT_CHECK


COMMANDS = {
    "run": cmd_run,
    "nofeedback": cmd_nofeedback,
    "adiabatic-check": cmd_adiabatic_check,
    "oracle-check": cmd_oracle_check,
    "timing": cmd_timing,
}


def build_parser():
    p = argparse.ArgumentParser(prog="catfeedback",
                                description="Cat-state autofeedback simulations")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path, help="dotted-key TOML config")
        sp.add_argument("--out", type=Path, default=None, help="output directory (overrides output.dir)")
        sp.add_argument("--seed", type=int, default=None, help="overrides run.seed")
        sp.add_argument("--quiet", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {}
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if args.out is not None:
        overrides["output.dir"] = str(args.out)
    try:
        cfg = cfgmod.load(args.config, overrides)
        out = Path(cfg["output.dir"])
        out.mkdir(parents=True, exist_ok=True)
        _write_manifest(out, args.command, cfg)
        return COMMANDS[args.command](cfg, out, args.quiet)
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CatFeedbackError, ArithmeticError) as exc:
        print(f"numerical guard: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # invalid physical parameters surface here from the constructors
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
