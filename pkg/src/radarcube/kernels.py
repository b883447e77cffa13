"""Hot inner loops, with a compiled backend and a numpy fallback.

The compiled extension ``radarcube._kernels`` is used when it was built at
install time. Setting ``RADARCUBE_PURE_PYTHON=1`` before import forces the
numpy versions. Both backends expose the same three functions:

``dechirp_accumulate``
    adds point-target de-chirped returns into a ``[sample, chirp, rx]`` array.
``cfar_noise_2d``
    mean of the cell-averaging CFAR training ring around every cell, with
    circular wrap on both axes.
``local_max_mask``
    3x3 local maxima at or above a threshold.
"""
from __future__ import annotations

import os

import numpy as np

try:
    if os.environ.get("RADARCUBE_PURE_PYTHON"):
        raise ImportError("pure-Python backend forced")
    from . import _kernels as _ext
except ImportError:
    _ext = None

BACKEND = "cython" if _ext is not None else "python"


def dechirp_accumulate_py(out, amp, phi0, f_cyc, dphi, s_cyc, num_tx, num_rx):
    ns, nc, _ = out.shape
    i = np.arange(ns)
    k = np.arange(nc)
    q = (k % num_tx)[:, None] * num_rx + np.arange(num_rx)[None, :]
    for j in range(len(amp)):
        c0 = amp[j] * np.exp(1j * phi0[j])
        ei = np.exp(2j * np.pi * f_cyc[j] * i)
        ekq = np.exp(1j * dphi[j] * k)[:, None] * np.exp(2j * np.pi * s_cyc[j] * q)
        out += (c0 * ei)[:, None, None] * ekq[None, :, :]
    return out


def cfar_noise_2d_py(power, guard_r, guard_c, train_r, train_c):
    power = np.asarray(power, dtype=np.float64)
    outer_r, outer_c = guard_r + train_r, guard_c + train_c
    padded = np.pad(power, ((outer_r, outer_r), (outer_c, outer_c)), mode="wrap")
    sat = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1))
    sat[1:, 1:] = padded.cumsum(0).cumsum(1)
    nr, nc = power.shape

    def box(half_r, half_c):
        r0 = outer_r - half_r
        c0 = outer_c - half_c
        r1 = r0 + 2 * half_r + 1
        c1 = c0 + 2 * half_c + 1
        return (sat[r1:r1 + nr, c1:c1 + nc] - sat[r0:r0 + nr, c1:c1 + nc]
                - sat[r1:r1 + nr, c0:c0 + nc] + sat[r0:r0 + nr, c0:c0 + nc])

    count = (2 * outer_r + 1) * (2 * outer_c + 1) - (2 * guard_r + 1) * (2 * guard_c + 1)
    return (box(outer_r, outer_c) - box(guard_r, guard_c)) / count


def local_max_mask_py(x, threshold):
    from scipy.ndimage import maximum_filter

    x = np.asarray(x, dtype=np.float64)
    peak = maximum_filter(x, size=3, mode="constant", cval=-np.inf)
    return (x >= peak) & (x >= threshold)


if _ext is not None:
    def dechirp_accumulate(out, amp, phi0, f_cyc, dphi, s_cyc, num_tx, num_rx):
        _ext.dechirp_accumulate(out.view(np.float64), np.ascontiguousarray(amp, dtype=np.float64),
                                np.ascontiguousarray(phi0, dtype=np.float64),
                                np.ascontiguousarray(f_cyc, dtype=np.float64),
                                np.ascontiguousarray(dphi, dtype=np.float64),
                                np.ascontiguousarray(s_cyc, dtype=np.float64),
                                int(num_tx), int(num_rx))
        return out

    def cfar_noise_2d(power, guard_r, guard_c, train_r, train_c):
        return np.asarray(_ext.cfar_noise_2d(np.ascontiguousarray(power, dtype=np.float64),
                                             guard_r, guard_c, train_r, train_c))

    def local_max_mask(x, threshold):
        return np.asarray(_ext.local_max_mask(np.ascontiguousarray(x, dtype=np.float64),
                                              float(threshold))).astype(bool)
else:
    dechirp_accumulate = dechirp_accumulate_py
    cfar_noise_2d = cfar_noise_2d_py
    local_max_mask = local_max_mask_py
