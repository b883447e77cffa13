"""Time the compiled kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py --repeat 20

Sizes match one frame of the default configuration: a 128 x 255 x 4 raw
frame, a 128 x 128 range-velocity power map and a 128 x 128 heatmap.
"""
import argparse
import timeit

import numpy as np

from radarcube import kernels


def cases(num_targets, rng):
    amp = rng.uniform(0.5, 2, num_targets)
    phi0 = rng.uniform(0, 2 * np.pi, num_targets)
    f_cyc = rng.uniform(0, 0.5, num_targets)
    dphi = rng.uniform(-np.pi, np.pi, num_targets)
    s_cyc = rng.uniform(-0.5, 0.5, num_targets)
    power = rng.exponential(size=(128, 128))
    heat = rng.uniform(size=(128, 128))

    def dechirp(fn):
        out = np.zeros((128, 255, 4), complex)
        return lambda: fn(out, amp, phi0, f_cyc, dphi, s_cyc, 2, 4)

    return {
        f"dechirp_accumulate ({num_targets} targets)": (dechirp(kernels.dechirp_accumulate),
                                                        dechirp(kernels.dechirp_accumulate_py)),
        "cfar_noise_2d (128x128)": (lambda: kernels.cfar_noise_2d(power, 2, 2, 8, 8),
                                    lambda: kernels.cfar_noise_2d_py(power, 2, 2, 8, 8)),
        "local_max_mask (128x128)": (lambda: kernels.local_max_mask(heat, 0.2),
                                     lambda: kernels.local_max_mask_py(heat, 0.2)),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--targets", type=int, default=4)
    args = parser.parse_args(argv)
    print(f"backend: {kernels.BACKEND}")
    if kernels.BACKEND != "cython":
        print("compiled extension not built; both columns time the numpy code")
    print(f"{'kernel':36s} {'compiled ms':>12s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, (fast, slow) in cases(args.targets, np.random.default_rng(0)).items():
        t_fast = min(timeit.repeat(fast, number=1, repeat=args.repeat)) * 1e3
        t_slow = min(timeit.repeat(slow, number=1, repeat=args.repeat)) * 1e3
        print(f"{name:36s} {t_fast:12.3f} {t_slow:10.3f} {t_slow / t_fast:7.1f}x")


if __name__ == "__main__":
    main()
