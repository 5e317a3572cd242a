"""Compare the numba and numpy grid kernels on the default yz grid.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--step METERS]

Both variants are called directly, so the NFISAC_DISABLE_NUMBA flag does not
matter here. The first numba call (compilation or cache load) is reported
separately.
"""

import argparse
import time

import numpy as np

from nfisac import _kernels
from nfisac.capon import SpatialGrid
from nfisac.config import GridSpec, load_shipped
from nfisac.scenario import Scenario


def _best(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--step", type=float, default=0.01)
    args = ap.parse_args()

    sc = Scenario(load_shipped())
    grid = SpatialGrid.from_spec(GridSpec(step=args.step))
    pts = grid.points()
    tx = sc.tx
    lam, b = sc.params.wavelength, sc.params.boresight_exponent
    rng = np.random.default_rng(0)
    N = tx.n_elements
    g = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    herm = g @ g.conj().T / N
    beams = (rng.standard_normal((2, N)) + 1j * rng.standard_normal((2, N))) * 0.1
    h = _kernels.nearfield_gains_numpy(tx.elements, tx.normal, pts, lam, b, 1.0)

    cases = {
        "nearfield_gains": (tx.elements, tx.normal, pts, lam, b, 1.0),
        "capon_ratio": (h, h, herm, herm, herm),
        "sinr_grid": (h, beams, herm, 1e-11, 0),
    }
    print(f"grid {grid.shape[0]}x{grid.shape[1]} = {len(pts)} points, N = {N}, "
          f"numba available: {_kernels.HAVE_NUMBA}")
    print(f"{'kernel':<16} {'numpy [ms]':>11} {'numba [ms]':>11} {'first call [ms]':>16} {'speedup':>8} {'max rel diff':>13}")
    for name, cargs in cases.items():
        np_fn = getattr(_kernels, f"{name}_numpy")
        t_np, ref = _best(np_fn, cargs, args.repeat)
        nb_fn = getattr(_kernels, f"{name}_numba", None)
        if nb_fn is None:
            print(f"{name:<16} {1e3 * t_np:>11.2f} {'-':>11}")
            continue
        t0 = time.perf_counter()
        nb_fn(*cargs)
        first = time.perf_counter() - t0
        t_nb, out = _best(nb_fn, cargs, args.repeat)
        diff = np.max(np.abs(out - ref)) / max(np.max(np.abs(ref)), 1e-300)
        print(f"{name:<16} {1e3 * t_np:>11.2f} {1e3 * t_nb:>11.2f} {1e3 * first:>16.1f} "
              f"{t_np / t_nb:>8.2f} {diff:>13.2e}")


if __name__ == "__main__":
    main()
