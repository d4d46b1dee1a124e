"""Compare the compiled and numpy solver kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--nx 128 512 2048]

Prints the mean wall time of one right-hand-side evaluation per backend
and the maximum difference between the two results.
"""

import argparse
import time

import numpy as np

from causalfluid import _kernels_py
from causalfluid.coefficients import DissipationCoeffs
from causalfluid.solver1d import Perturbation, RunConfig, initial_state
from causalfluid.thermo import GasParams, eos_from_n_theta

try:
    from causalfluid import _kernels
except ImportError:
    _kernels = None


def timeit(fn, repeat):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--nx", type=int, nargs="+", default=[128, 512, 2048])
    args = ap.parse_args(argv)

    params = GasParams()
    bg = eos_from_n_theta(params, 1.0, 1.0)
    coeffs = DissipationCoeffs(eta=1.0, zeta=0.2, chi=1.0, mu=0.1)
    print(f"{'nx':>6} {'numpy [ms]':>12} {'cython [ms]':>12} {'speedup':>8} {'max diff':>10}")
    for nx in args.nx:
        cfg = RunConfig(params, coeffs, bg, Perturbation(1e-2, "mode", weights=(1, 1, 0.5, 0, 1)), nx=nx)
        st = initial_state(cfg)
        w, v, dx, prm = st.psi, st.psi_t, cfg.grid.dx, cfg.prm
        t_py = timeit(lambda: _kernels_py.rhs(w, v, dx, prm, 1e-3), args.repeat)
        if _kernels is None:
            print(f"{nx:>6} {1e3 * t_py:>12.3f} {'n/a':>12} {'-':>8} {'-':>10}")
            continue
        t_c = timeit(lambda: _kernels.rhs(w, v, dx, prm, 1e-3), args.repeat)
        diff = np.max(np.abs(_kernels_py.rhs(w, v, dx, prm, 1e-3) - _kernels.rhs(w, v, dx, prm, 1e-3)))
        print(f"{nx:>6} {1e3 * t_py:>12.3f} {1e3 * t_c:>12.3f} {t_py / t_c:>8.1f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
