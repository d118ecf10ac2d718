"""Throughput of the compiled walk kernel against the vectorised numpy fallback.

    python benchmarks/bench_kernels.py [--steps N] [--batch B]

Both paths advance the same walks from the same streams, so the script also
checks that their final states agree.
"""
import argparse
import time

from rwlab._accel import USE_NUMBA
from rwlab.kernels import _advance_batch_numba, _advance_batch_numpy, run_batch
from rwlab.rng import Rng
from rwlab.weights import WeightFunction


def bench(weights, steps, batch, advance):
    rngs = [Rng(0, i) for i in range(batch)]
    t0 = time.perf_counter()
    runs = run_batch(weights, steps, rngs, advance=advance)
    dt = time.perf_counter() - t0
    return runs, steps * batch / dt


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--batch", type=int, default=64)
    args = ap.parse_args()

    paths = {"numpy": _advance_batch_numpy}
    if USE_NUMBA:
        paths["numba"] = _advance_batch_numba
        # compile outside the timed region
        run_batch(WeightFunction.power(0.5), 1000, [Rng(0, 0)], advance=_advance_batch_numba)
    else:
        print("RWL_NUMBA disables the compiled kernel; timing numpy only")

    print(f"{'alpha':>6} {'path':>6} {'Msteps/s':>10}")
    for alpha in (0.0, 0.3, 1.0, 2.0):
        w = WeightFunction.power(alpha)
        finals = {}
        for name, fn in paths.items():
            runs, rate = bench(w, args.steps, args.batch, fn)
            finals[name] = [(r["position"], r["lo"], r["hi"]) for r in runs]
            print(f"{alpha:>6} {name:>6} {rate / 1e6:>10.2f}")
        if len(finals) == 2 and finals["numpy"] != finals["numba"]:
            raise SystemExit(f"paths disagree at alpha={alpha}")


if __name__ == "__main__":
    main()
