"""Time the compiled and numpy kernel backends side by side.

    python3 benchmarks/bench_kernels.py [--envs 64] [--repeat 200]

Also times one full environment step and one training iteration under
whichever backend is active (set THROWCATCH_PURE_PYTHON=1 to compare).
"""

import argparse
import timeit

import numpy as np

from throwcatch import _kernels


def physics_inputs(n, rng):
    return dict(
        obj_pos=rng.uniform(-1, 1, (n, 2)), obj_vel=rng.uniform(-3, 3, (n, 2)),
        obj_angle=rng.uniform(-3, 3, n), obj_angvel=rng.uniform(-10, 10, n),
        palm_pos=rng.uniform(-1, 1, (n, 2, 2)), palm_vel=rng.uniform(-2, 2, (n, 2, 2)),
        grip=rng.random((n, 2)), accel=rng.uniform(-30, 30, (n, 2, 2)), grip_target=rng.random((n, 2)),
        radius=rng.uniform(0.03, 0.1, n), mass=rng.uniform(0.05, 0.5, n),
    )


def bench_backend(mod, n, repeat, rng):
    x = physics_inputs(n, rng)
    action = rng.uniform(-30, 30, (n, 6))
    out = np.zeros((n, 5))
    r, v, d = rng.standard_normal(n * 120), rng.standard_normal(n * 120 + 1), (rng.random(n * 120) < 0.01) * 1.0

    def phys():
        mod.physics_step(x["obj_pos"], x["obj_vel"], x["obj_angle"], x["obj_angvel"], x["palm_pos"],
                         x["palm_vel"], x["grip"], x["accel"], x["grip_target"], x["radius"], x["mass"],
                         1 / 60, 9.81, 4.0, 0.06, 50.0, 5.0, 1 / 3)

    def reward():
        mod.catch_components(x["obj_pos"], x["palm_pos"], x["grip"], action, x["radius"], -0.5, 1.2, 0.06, out)

    def gae():
        mod.gae(r, v, d, 0.99, 0.95)

    return {name: min(timeit.repeat(fn, number=repeat, repeat=3)) / repeat
            for name, fn in (("physics_step", phys), ("catch_components", reward), (f"gae[{n * 120}]", gae))}


def bench_pipeline(n):
    from throwcatch.config import config_from_dict
    from throwcatch.harl.train import Trainer

    trainer = Trainer.fresh(config_from_dict({"envs_per_batch": n, "iterations": 2}))
    start = timeit.default_timer()
    trainer.step()
    return timeit.default_timer() - start


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--envs", type=int, default=64)
    parser.add_argument("--repeat", type=int, default=200)
    parser.add_argument("--skip-pipeline", action="store_true")
    args = parser.parse_args(argv)

    results = {name: bench_backend(mod, args.envs, args.repeat, np.random.default_rng(0))
               for name, mod in _kernels.backends().items()}
    names = list(results)
    print(f"{'kernel':<20}" + "".join(f"{n + ' (us)':>16}" for n in names) + ("   speedup" if len(names) > 1 else ""))
    for kernel in results["python"]:
        row = [results[n][kernel] * 1e6 for n in names]
        line = f"{kernel:<20}" + "".join(f"{t:16.2f}" for t in row)
        if "cython" in results:
            line += f"{results['python'][kernel] / results['cython'][kernel]:9.1f}x"
        print(line)
    if not args.skip_pipeline:
        print(f"\none training iteration, {args.envs} envs, backend={_kernels.BACKEND}: {bench_pipeline(args.envs):.2f}s")


if __name__ == "__main__":
    main()
