"""Run configuration: flat ``section.key = value`` files with units in key names.

The format is the dotted-key subset of TOML, e.g.::

    physics.gamma_per_s = 100.0
    timing.t0_us = 600
    run.mode = "monte_carlo"
    run.seed = 7

Every key has a default (see ``SCHEMA``); unknown keys are rejected so that
typos do not silently fall back to defaults.
"""

import math
import sys

from .feedback import FeedbackParams
from .fock import TruncationConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


SQRT_3_3 = math.sqrt(3.3)

# key -> (default, type); None default means "optional, no value"
SCHEMA = {
    "physics.gamma_per_s": (100.0, float),
    "physics.gamma_prime_per_s": (100.0, float),
    "timing.t0_us": (600.0, float),
    "timing.tau_pr_us": (15.0, float),
    "timing.tau_fb_us": (15.0, float),
    "timing.t_cr_pr_us": (30.0, float),
    "timing.t_cr_fb_us": (15.0, float),
    "atoms.p1": (1.0 / math.e, float),
    "atoms.p_r": (0.9, float),
    "coupling.omega_over_2pi_hz": (24e3, float),
    "coupling.omega_prime_over_2pi_hz": (24e3, float),
    "coupling.delta_over_2pi_hz": (70e3, float),
    "geometry.l_cavity_m": (0.0075, float),
    "geometry.v_pr_m_per_s": (250.0, float),
    "geometry.v_fb_m_per_s": (500.0, float),
    "truncation.n_max": (32, int),
    "truncation.k_max": (None, int),
    "truncation.tail_tol": (1e-12, float),
    "state.alpha_re": (SQRT_3_3, float),
    "state.alpha_im": (0.0, float),
    "state.cat_sign": (-1, int),
    "run.mode": ("averaged", str),
    "run.n_cycles": (13, int),
    "run.n_trajectories": (1, int),
    "run.seed": (None, int),
    "run.snapshot_stride": (1, int),
    "run.averaged_tail_eps": (1e-6, float),
    "run.workers": (1, int),
    "output.dir": ("out", str),
    "wigner.enabled": (True, bool),
    "wigner.extent": (4.0, float),
    "wigner.points": (81, int),
    "nofeedback.times_over_t_rel": ([0.0, 1.0, 2.0], list),
    "nofeedback.include_t_dec": (True, bool),
    "adiabatic.delta0_over_omega": (20.0 * math.sqrt(6.0), float),
    "adiabatic.omega_t_s": (200.0, float),
    "adiabatic.n_values": ([0, 1, 2, 3, 4, 5], list),
    "adiabatic.phase_n_max": (8, int),
    "adiabatic.min_transfer": (0.99, float),
    "adiabatic.max_phase_spread_rad": (0.1, float),
    "adiabatic.phase_rtol": (1e-8, float),
    "oracle.n_max": (12, int),
    "oracle.tail_tol": (1e-10, float),
    "oracle.alpha": (1.0, float),
    "oracle.l_values": ([0, 1, 3], list),
    "oracle.q_values": ([0, 1, 3], list),
    "oracle.tolerance": (1e-8, float),
}


def _flatten(tree, prefix=""):
    flat = {}
    for k, v in tree.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, key + "."))
        else:
            flat[key] = v
    return flat


def _coerce(key, value, kind):
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind in (str, bool, list) and isinstance(value, kind):
        return value
    raise ConfigError(f"{key}: expected {kind.__name__}, got {value!r}")


def resolve(raw):
    """Merge user values over defaults, validating names and types."""
    flat = _flatten(raw)
    unknown = sorted(set(flat) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = {}
    for key, (default, kind) in SCHEMA.items():
        cfg[key] = _coerce(key, flat[key], kind) if key in flat else default
    if cfg["run.mode"] not in ("averaged", "monte_carlo"):
        raise ConfigError(f"run.mode must be 'averaged' or 'monte_carlo', got {cfg['run.mode']!r}")
    if cfg["run.n_cycles"] < 0:
        raise ConfigError("run.n_cycles must be >= 0")
    if cfg["run.snapshot_stride"] < 1:
        raise ConfigError("run.snapshot_stride must be >= 1")
    if cfg["state.cat_sign"] not in (1, -1):
        raise ConfigError("state.cat_sign must be +1 or -1")
    return cfg


def load(path, overrides=None):
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    cfg = resolve(raw)
    for key, value in (overrides or {}).items():
        cfg[key] = value
    if cfg["run.mode"] == "monte_carlo" and cfg["run.seed"] is None:
        raise ConfigError("run.seed is required when run.mode = 'monte_carlo'")
    return cfg


def feedback_params(cfg):
    two_pi = 2.0 * math.pi
    try:
        return FeedbackParams(
            gamma=cfg["physics.gamma_per_s"],
            gamma_prime=cfg["physics.gamma_prime_per_s"],
            t0=cfg["timing.t0_us"] * 1e-6,
            tau_pr=cfg["timing.tau_pr_us"] * 1e-6,
            tau_fb=cfg["timing.tau_fb_us"] * 1e-6,
            t_cr_pr=cfg["timing.t_cr_pr_us"] * 1e-6,
            t_cr_fb=cfg["timing.t_cr_fb_us"] * 1e-6,
            p1=cfg["atoms.p1"],
            p_r=cfg["atoms.p_r"],
            omega=two_pi * cfg["coupling.omega_over_2pi_hz"],
            omega_prime=two_pi * cfg["coupling.omega_prime_over_2pi_hz"],
            delta=two_pi * cfg["coupling.delta_over_2pi_hz"],
            l_cavity=cfg["geometry.l_cavity_m"],
            v_pr=cfg["geometry.v_pr_m_per_s"],
            v_fb=cfg["geometry.v_fb_m_per_s"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def truncation(cfg):
    try:
        return TruncationConfig(cfg["truncation.n_max"], cfg["truncation.k_max"],
                                cfg["truncation.tail_tol"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def alpha(cfg):
    return complex(cfg["state.alpha_re"], cfg["state.alpha_im"])
