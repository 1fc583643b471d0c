"""Compare the numba kernels with their pure-numpy / pure-Python fallbacks.

    python3 benchmarks/bench_kernels.py [--trials N] [--repeat R]

Both paths receive identical inputs; the script checks that they agree before
timing them.
"""
import argparse
import time

import numpy as np

from loraplan import sim, specfun
from loraplan._accel import HAVE_NUMBA, USE_NUMBA
from loraplan.model import ExternalNetwork, NetworkGeometry, RadioParams, SpatialConfig, ThresholdSet


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def bench_sim(trials, repeat):
    geo = NetworkGeometry.equal_width(4000.0)
    cfg = sim.TrialConfig(geo, SpatialConfig.uniform(4000, geo, 1e-3),
                          ExternalNetwork.from_count(1000, 1e-3, 4000.0),
                          RadioParams(), ThresholdSet(), [1500.0], trials=trials)
    dep = sim.sample_deployment(cfg, np.random.default_rng(1), trials)

    def run(kernel):
        return sim.trial_outcome(1500.0, 3, dep, np.random.default_rng(2), cfg, kernel)

    a, b = run(sim.trial_outcomes_numpy), run(sim.trial_outcomes_numba)
    assert (a == b).all()
    t_np = best_of(lambda: run(sim.trial_outcomes_numpy), repeat)
    t_nb = best_of(lambda: run(sim.trial_outcomes_numba), repeat)
    print(f"sim outcomes   {trials:>9d} trials  numpy {t_np * 1e3:8.2f} ms  numba {t_nb * 1e3:8.2f} ms  "
          f"speedup {t_np / t_nb:5.2f}x")


def bench_series(n, repeat):
    rng = np.random.default_rng(3)
    eta = rng.uniform(2, 4, n)
    r0 = rng.uniform(1, 100, n)
    a = r0 * 2 ** (1 / eta) * rng.uniform(1, 50, n)
    b = a * rng.uniform(1, 20, n)
    jit = specfun._tail_diff
    py = specfun._tail_diff_py
    for k in range(min(n, 50)):
        np.testing.assert_allclose(jit(eta[k], r0[k], a[k], b[k])[0],
                                   py(eta[k], r0[k], a[k], b[k])[0], rtol=1e-14)

    def run(fn):
        for k in range(n):
            fn(eta[k], r0[k], a[k], b[k])

    t_py = best_of(lambda: run(py), repeat)
    t_nb = best_of(lambda: run(jit), repeat)
    print(f"tail series    {n:>9d} calls   python {t_py * 1e3:7.2f} ms  numba {t_nb * 1e3:8.2f} ms  "
          f"speedup {t_py / t_nb:5.2f}x")


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--trials", type=int, default=200_000)
    p.add_argument("--calls", type=int, default=20_000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    bench_sim(args.trials, args.repeat)
    if USE_NUMBA:
        bench_series(args.calls, args.repeat)
    else:
        print("tail series    skipped (LORAPLAN_NO_NUMBA is set)")


if __name__ == "__main__":
    main()
