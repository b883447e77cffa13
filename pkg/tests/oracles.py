"""Independent reference implementations used by the tests."""
import math

import numpy as np


def direct_dft(x, n=None, axis=-1):
    """O(N^2) DFT by explicit summation, zero-padding or truncating to ``n``."""
    x = np.moveaxis(np.asarray(x, dtype=np.complex128), axis, -1)
    n = x.shape[-1] if n is None else n
    if x.shape[-1] < n:
        pad = np.zeros(x.shape[:-1] + (n - x.shape[-1],), dtype=np.complex128)
        x = np.concatenate([x, pad], axis=-1)
    x = x[..., :n]
    k = np.arange(n)
    w = np.exp(-2j * math.pi * np.outer(k, k) / n)
    return np.moveaxis(x @ w.T, -1, axis)


def rel_err(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def brute_local_max(heat, threshold):
    """Plain-loop 3x3 local maximum scan."""
    rows, cols = heat.shape
    out = np.zeros(heat.shape, dtype=bool)
    for i in range(rows):
        for j in range(cols):
            v = heat[i, j]
            if v < threshold:
                continue
            nb = heat[max(0, i - 1):i + 2, max(0, j - 1):j + 2]
            out[i, j] = v >= nb.max()
    return out


def brute_cfar_noise(power, guard, train):
    """Mean of the training ring around every cell with circular wrap."""
    nr, nc = power.shape
    gr, gc = guard
    orr, oc = gr + train[0], gc + train[1]
    out = np.zeros(power.shape)
    for i in range(nr):
        for j in range(nc):
            total, count = 0.0, 0
            for di in range(-orr, orr + 1):
                for dj in range(-oc, oc + 1):
                    if abs(di) <= gr and abs(dj) <= gc:
                        continue
                    total += power[(i + di) % nr, (j + dj) % nc]
                    count += 1
            out[i, j] = total / count
    return out
