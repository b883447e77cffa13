# cython: language_level=3
"""Compiled twins of the numpy kernels in ``radarcube.kernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, M_PI

cnp.import_array()


def dechirp_accumulate(double[:, :, ::1] out,
                       const double[::1] amp,
                       const double[::1] phi0,
                       const double[::1] f_cyc,
                       const double[::1] dphi,
                       const double[::1] s_cyc,
                       int num_tx, int num_rx):
    """``out`` is the complex frame viewed as float64 ``[sample, chirp, 2 * rx]``."""
    cdef Py_ssize_t ns = out.shape[0], nc = out.shape[1], nrx = out.shape[2] // 2
    cdef Py_ssize_t i, k, p, j, q, m = nc * 2 * nrx
    cdef double ph, ekr, eki, c0r, c0i, ar, ai, br, bi
    cdef double[:, ::1] ei = np.empty((ns, 2))
    cdef double[::1] ekq = np.empty(m)
    cdef double* row
    cdef double* e
    if nrx != num_rx:
        raise ValueError("rx axis does not match num_rx")
    for j in range(amp.shape[0]):
        c0r = amp[j] * cos(phi0[j])
        c0i = amp[j] * sin(phi0[j])
        for i in range(ns):
            ph = 2.0 * M_PI * f_cyc[j] * i
            ei[i, 0] = c0r * cos(ph) - c0i * sin(ph)
            ei[i, 1] = c0r * sin(ph) + c0i * cos(ph)
        for k in range(nc):
            ph = dphi[j] * k
            ekr = cos(ph)
            eki = sin(ph)
            for p in range(nrx):
                q = (k % num_tx) * num_rx + p
                ph = 2.0 * M_PI * s_cyc[j] * q
                ekq[2 * (k * nrx + p)] = ekr * cos(ph) - eki * sin(ph)
                ekq[2 * (k * nrx + p) + 1] = ekr * sin(ph) + eki * cos(ph)
        e = &ekq[0]
        with nogil:
            for i in range(ns):
                ar = ei[i, 0]
                ai = ei[i, 1]
                row = &out[i, 0, 0]
                for k in range(0, m, 2):
                    br = e[k]
                    bi = e[k + 1]
                    row[k] += ar * br - ai * bi
                    row[k + 1] += ar * bi + ai * br
    return out


def cfar_noise_2d(const double[:, ::1] power, int guard_r, int guard_c, int train_r, int train_c):
    cdef Py_ssize_t nr = power.shape[0], nc = power.shape[1]
    cdef int outer_r = guard_r + train_r, outer_c = guard_c + train_c
    cdef Py_ssize_t pr = nr + 2 * outer_r, pc = nc + 2 * outer_c
    cdef double[:, ::1] sat = np.zeros((pr + 1, pc + 1))
    cdef double[:, ::1] noise = np.empty((nr, nc))
    cdef Py_ssize_t i, j, si, sj
    cdef double row
    cdef double count = (2 * outer_r + 1) * (2 * outer_c + 1) - (2 * guard_r + 1) * (2 * guard_c + 1)
    cdef double outer, inner
    with nogil:
        for i in range(pr):
            row = 0.0
            si = (i - outer_r) % nr
            if si < 0:
                si = si + nr
            for j in range(pc):
                sj = (j - outer_c) % nc
                if sj < 0:
                    sj = sj + nc
                row = row + power[si, sj]
                sat[i + 1, j + 1] = sat[i, j + 1] + row
        for i in range(nr):
            for j in range(nc):
                outer = (sat[i + 2 * outer_r + 1, j + 2 * outer_c + 1] - sat[i, j + 2 * outer_c + 1]
                         - sat[i + 2 * outer_r + 1, j] + sat[i, j])
                inner = (sat[i + outer_r + guard_r + 1, j + outer_c + guard_c + 1]
                         - sat[i + outer_r - guard_r, j + outer_c + guard_c + 1]
                         - sat[i + outer_r + guard_r + 1, j + outer_c - guard_c]
                         + sat[i + outer_r - guard_r, j + outer_c - guard_c])
                noise[i, j] = (outer - inner) / count
    return np.asarray(noise)


def local_max_mask(const double[:, ::1] x, double threshold):
    cdef Py_ssize_t nr = x.shape[0], nc = x.shape[1]
    cdef cnp.uint8_t[:, ::1] mask = np.zeros((nr, nc), dtype=np.uint8)
    cdef Py_ssize_t i, j, a, b
    cdef double v
    cdef bint keep
    with nogil:
        for i in range(nr):
            for j in range(nc):
                v = x[i, j]
                if not v >= threshold:
                    continue
                keep = True
                for a in range(i - 1, i + 2):
                    if a < 0 or a >= nr:
                        continue
                    for b in range(j - 1, j + 2):
                        if b < 0 or b >= nc:
                            continue
                        if x[a, b] > v:
                            keep = False
                if keep:
                    mask[i, j] = 1
    return np.asarray(mask)
