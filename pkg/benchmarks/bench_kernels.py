"""Compare the numba and numpy kernel backends.

Times each kernel at several landmark counts, then one full observer step,
for both backends side by side. JIT compilation is excluded (warm-up call
before timing).

    python3 benchmarks/bench_kernels.py [--sizes 10 100 1000] [--repeat 7]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from vslam_observer._kernels import KERNEL_NAMES, get_backend


def make_inputs(n, rng):
    theta = rng.normal(size=(n, 4))
    theta /= np.linalg.norm(theta, axis=1, keepdims=True)
    q, _ = np.linalg.qr(rng.normal(size=(n, 3, 3)))
    rot = q * np.sign(np.linalg.det(q))[:, None, None]
    L = rng.normal(size=(n, 3, 3))
    sigma = L @ np.swapaxes(L, 1, 2) + np.eye(3)
    y = rng.normal(size=(n, 3))
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    M = np.eye(4)
    M[:3, 3] = rng.normal(size=3)
    w = rng.normal(size=(n, 3))
    s = rng.normal(size=n)
    scale = rng.uniform(0.5, 2.0, n)
    vec = rng.normal(size=3)
    return {
        "so3_exp_batch": (w,),
        "normalize_rows": (theta,),
        "transform_reps": (M, theta),
        "upsilon_reps": (M, M, rot, scale, theta),
        "lift_w": (vec, vec, theta),
        "landmark_innovation": (y, y[::-1].copy(), sigma, scale, 1.0),
        "riccati_step": (sigma, vec, y, 2.0, 0.5, 0.02),
        "pose_system": (theta, w, s),
        "sot_step": (rot, scale, w, s, 0.02),
        "lift_step": (np.eye(3), vec, theta),
    }


def time_call(fn, args, repeat):
    fn(*args)  # warm-up / JIT
    number = 50
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


STEP_SCRIPT = """
import time, numpy as np
from vslam_observer import _kernels, GainConfig, ObserverState
from vslam_observer.simulator import ScenarioConfig, initial_truth, build_reference, synthesize_measurements, propagate_truth
from vslam_observer.observer import observer_step
_kernels.warmup()
rng = np.random.default_rng(0)
n = {n}
cfg = ScenarioConfig()
pts = cfg.initial_position + rng.uniform(2, 8, (n, 3)) * rng.choice([-1, 1], (n, 3))
cfg = ScenarioConfig(points=pts, bearings=np.zeros((0, 3)))
xi = initial_truth(cfg)
obs = ObserverState.initial(build_reference(xi, rng.uniform(-0.1, 0.1, (n, 3))), GainConfig())
U, y = cfg.twist, synthesize_measurements(xi)
obs = observer_step(obs, U, y, cfg.dt)
steps = max(20, 4000 // n)
best = float("inf")
for _ in range({repeat}):
    t0 = time.perf_counter()
    for _ in range(steps):
        obs = observer_step(obs, U, y, cfg.dt)
        xi = propagate_truth(xi, U, cfg.dt)
        y = synthesize_measurements(xi)
    best = min(best, (time.perf_counter() - t0) / steps)
print(best)
"""


def time_full_step(backend, n, repeat):
    env = dict(os.environ, VSLAM_OBSERVER_BACKEND=backend)
    res = subprocess.run(
        [sys.executable, "-c", STEP_SCRIPT.format(n=n, repeat=repeat)],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return float(res.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 100, 1000])
    ap.add_argument("--repeat", type=int, default=7)
    args = ap.parse_args(argv)

    np_mod, nb_mod = get_backend("numpy"), get_backend("numba")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'n':>6}{'numpy [us]':>14}{'numba [us]':>14}{'speedup':>10}")
    for n in args.sizes:
        inputs = make_inputs(n, rng)
        for name in KERNEL_NAMES:
            t_np = time_call(getattr(np_mod, name), inputs[name], args.repeat)
            t_nb = time_call(getattr(nb_mod, name), inputs[name], args.repeat)
            print(f"{name:<22}{n:>6}{t_np * 1e6:>14.2f}{t_nb * 1e6:>14.2f}{t_np / t_nb:>10.2f}")

    print()
    print(f"{'observer step':<22}{'n':>6}{'numpy [ms]':>14}{'numba [ms]':>14}{'speedup':>10}")
    for n in args.sizes:
        t_np = time_full_step("numpy", n, args.repeat)
        t_nb = time_full_step("numba", n, args.repeat)
        print(f"{'observer_step':<22}{n:>6}{t_np * 1e3:>14.3f}{t_nb * 1e3:>14.3f}{t_np / t_nb:>10.2f}")


if __name__ == "__main__":
    main()
