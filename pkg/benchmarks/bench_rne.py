"""Compare the numba loop kernels with the vectorized numpy kernels.

    python benchmarks/bench_rne.py [--samples 100] [--swarm 20] [--repeat 5]

Times one swarm evaluation of the estimation cost (the hot path of every PSO
iteration) and a single inverse-dynamics sweep. Without numba the loop
kernels run as plain Python, so only a reduced size is timed for them.
"""
import argparse
import timeit

import numpy as np

from psoid import _rne, robots
from psoid._accel import BACKEND, HAS_NUMBA


def _setup(n_samples, swarm, seed=0):
    model = robots.cylindrical_robot()
    arrs = model.arrays()
    rng = np.random.default_rng(seed)
    Q = rng.uniform(-1, 1, (n_samples, 3))
    QD = rng.uniform(-1, 1, (n_samples, 3))
    QDD = rng.uniform(-1, 1, (n_samples, 3))
    truth = robots.cylindrical_true_params().flatten()
    TAU = _rne.rne_numpy(*arrs, truth, Q, QD, QDD)
    P = truth + rng.normal(scale=0.1, size=(swarm, truth.size))
    return arrs, P, Q, QD, QDD, TAU


def _best(fn, repeat):
    fn()  # warm-up (triggers compilation)
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--swarm", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    arrs, P, Q, QD, QDD, TAU = _setup(args.samples, args.swarm)
    print(f"active backend: {BACKEND}; samples={args.samples}, swarm={args.swarm}")

    loops_scale = 1 if HAS_NUMBA else max(1, args.swarm // 2)
    Pl = P[: max(1, args.swarm // loops_scale)]
    t_np = _best(lambda: _rne.cost_numpy(*arrs, P, Q, QD, QDD, TAU), args.repeat)
    t_lp = _best(lambda: _rne.cost_loops(*arrs, Pl, Q, QD, QDD, TAU), args.repeat) * loops_scale
    c_np = _rne.cost_numpy(*arrs, P, Q, QD, QDD, TAU)
    c_lp = _rne.cost_loops(*arrs, P[:1], Q, QD, QDD, TAU)
    assert np.allclose(c_np[:1], c_lp, rtol=1e-12)

    r_np = _best(lambda: _rne.rne_numpy(*arrs, P[0], Q, QD, QDD), args.repeat)
    r_lp = _best(lambda: _rne.rne_loops(*arrs, P[0], Q, QD, QDD), args.repeat)

    label = "numba loops" if HAS_NUMBA else "python loops"
    print(f"{'kernel':<24}{'numpy (ms)':>12}{label + ' (ms)':>20}{'speedup':>10}")
    print(f"{'swarm cost evaluation':<24}{1e3 * t_np:>12.3f}{1e3 * t_lp:>20.3f}{t_np / t_lp:>10.1f}")
    print(f"{'inverse dynamics sweep':<24}{1e3 * r_np:>12.3f}{1e3 * r_lp:>20.3f}{r_np / r_lp:>10.1f}")
    if not HAS_NUMBA:
        print("(loop timing extrapolated from a reduced swarm)")


if __name__ == "__main__":
    main()
