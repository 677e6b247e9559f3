"""Compare the numba and numpy flavours of the hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 20]

The first numba call (compilation or cache load) is timed separately.
"""

import argparse
import time

import numpy as np

from catfeedback import _accel, _kernels
from catfeedback.channels import damping_kraus
from catfeedback.fock import TruncationConfig, cat_state


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=20)
    p.add_argument("--n-max", type=int, default=32)
    p.add_argument("--points", type=int, default=81)
    args = p.parse_args()

    trunc = TruncationConfig(args.n_max)
    rho = cat_state(np.sqrt(3.3), -1, trunc).matrix.copy()
    coeffs = damping_kraus(100.0, 600e-6, trunc).coeffs
    axis = np.linspace(-4, 4, args.points)
    betas = (axis[None, :] + 1j * axis[:, None]).ravel()

    cases = [
        ("damping_sum", _kernels.damping_sum_np, _kernels.damping_sum_nb, (rho, coeffs)),
        ("wigner_laguerre", _kernels.wigner_laguerre_np, _kernels.wigner_laguerre_nb, (rho, betas)),
    ]
    print(f"backend selected: {_accel.backend()}  (n_max={args.n_max}, grid={args.points}^2)")
    for name, f_np, f_nb, fargs in cases:
        t0 = time.perf_counter()
        ref = f_nb(*fargs)
        first = time.perf_counter() - t0
        diff = float(np.max(np.abs(ref - f_np(*fargs))))
        t_np = best_of(f_np, fargs, args.repeat)
        t_nb = best_of(f_nb, fargs, args.repeat)
        print(f"{name:16} numpy {t_np * 1e3:9.3f} ms   numba {t_nb * 1e3:9.3f} ms   "
              f"speedup {t_np / t_nb:6.1f}x   first call {first * 1e3:8.1f} ms   max|diff| {diff:.1e}")


if __name__ == "__main__":
    main()
