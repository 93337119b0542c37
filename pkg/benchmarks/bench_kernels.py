"""Compare the compiled and numpy Gaussian-sampling kernels.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import math
import timeit

import numpy as np

from qrf import _ext, gausscalc, gridsim
from qrf.canon import map_R

CASES = {
    "1-D, 4096 pts, 2 terms": (gausscalc.GaussState([
        gausscalc.GaussianTerm.diagonal(0.7, [-2.0], [0.1]),
        gausscalc.GaussianTerm.diagonal(0.7j, [2.0], [0.1])]), None, 4096),
    "2-D, 512^2, 2 terms": (gausscalc.decay_state(4.0, 1.0, 1, 1, 0.1, 0.1), map_R(1, 1), 512),
    "2-D, 2048^2, 2 terms": (gausscalc.decay_state(4.0, 1.0, 1, 1, 0.1, 0.1), map_R(1, 1), 2048),
    "3-D, 128^3, 2 terms": (gausscalc.GaussState([
        gausscalc.GaussianTerm.diagonal(0.7, [0, 1, 1], [0.3, 0.3, 0.3]),
        gausscalc.GaussianTerm.diagonal(0.7, [0, -1, -1], [0.3, 0.3, 0.3])]), None, 128),
}


def _args(state, n):
    grids = gridsim.auto_grids(state, n)
    return ([g.points for g in grids],
            [t.coeff * math.exp(t.log_norm()) for t in state.terms],
            [t.center for t in state.terms],
            [t.precision for t in state.terms],
            [t.wavevec for t in state.terms])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    print(f"compiled backend available: {_ext.BACKEND == 'cython'}")
    print(f"{'case':28s} {'numpy [ms]':>12s} {'compiled [ms]':>14s} {'speedup':>8s}")
    for label, (state, pm, n) in CASES.items():
        if pm is not None:
            state = gausscalc.apply_point_map(state, pm)
        kargs = _args(state, n)
        slow = min(timeit.repeat(lambda: _ext.python_sample_terms(*kargs),
                                 number=1, repeat=args.repeat))
        if _ext.BACKEND == "cython":
            fast = min(timeit.repeat(lambda: _ext.sample_terms(*kargs),
                                     number=1, repeat=args.repeat))
            diff = np.abs(_ext.sample_terms(*kargs) - _ext.python_sample_terms(*kargs)).max()
            print(f"{label:28s} {1e3 * slow:12.2f} {1e3 * fast:14.2f} {slow / fast:8.2f}"
                  f"   max|diff|={diff:.1e}")
        else:
            print(f"{label:28s} {1e3 * slow:12.2f} {'n/a':>14s}")


if __name__ == "__main__":
    main()
