# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the _fallback kernels; outputs are bit-identical.

Floating-point expressions mirror the numpy evaluation order and the build
disables FP contraction, so rounding matches the fallback exactly.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


def polar_sample(cnp.uint16_t[:, ::1] energy,
                 cnp.float64_t[:, ::1] theta,
                 cnp.float64_t[:, ::1] rr,
                 double az0, double az_step, double res):
    cdef Py_ssize_t na = energy.shape[0]
    cdef Py_ssize_t nb = energy.shape[1]
    cdef Py_ssize_t h = theta.shape[0]
    cdef Py_ssize_t w = theta.shape[1]
    cdef double maxr = nb * res
    out_arr = np.zeros((h, w), dtype=np.uint16)
    cdef cnp.uint16_t[:, ::1] out = out_arr
    cdef Py_ssize_t r, c
    cdef long long a, b
    cdef double rv
    for r in range(h):
        for c in range(w):
            rv = rr[r, c]
            if rv > maxr:
                continue
            if rv == 0.0:
                out[r, c] = energy[0, 0]
                continue
            a = <long long> floor((theta[r, c] - az0) / az_step + 0.5)
            a = a % na
            if a < 0:
                a += na
            b = <long long> floor(rv / res + 0.5)
            if b > nb - 1:
                b = nb - 1
            out[r, c] = energy[a, b]
    return out_arr


def warp_nn(cnp.uint16_t[:, ::1] src,
            cnp.float64_t[:, ::1] m,
            double cc, double cr, double mpp):
    cdef Py_ssize_t h = src.shape[0]
    cdef Py_ssize_t w = src.shape[1]
    out_arr = np.zeros((h, w), dtype=np.uint16)
    cdef cnp.uint16_t[:, ::1] out = out_arr
    cdef double m00 = m[0, 0], m01 = m[0, 1], m02 = m[0, 2]
    cdef double m10 = m[1, 0], m11 = m[1, 1], m12 = m[1, 2]
    cdef Py_ssize_t r, c
    cdef double x, y, sx, sy
    cdef long long sr, sc
    for r in range(h):
        y = (cr - r) * mpp
        for c in range(w):
            x = (c - cc) * mpp
            sx = m00 * x + m01 * y + m02
            sy = m10 * x + m11 * y + m12
            sc = <long long> (cc + floor(sx / mpp + 0.5))
            sr = <long long> (cr - floor(sy / mpp + 0.5))
            if sr >= 0 and sr < h and sc >= 0 and sc < w:
                out[r, c] = src[sr, sc]
    return out_arr


def splat_priority(cnp.uint8_t[:, ::1] img,
                   cnp.int64_t[::1] rows,
                   cnp.int64_t[::1] cols,
                   cnp.uint8_t[::1] labels):
    cdef Py_ssize_t k, n = rows.shape[0]
    for k in range(n):
        if labels[k] > img[rows[k], cols[k]]:
            img[rows[k], cols[k]] = labels[k]
    return np.asarray(img)


def cfar_mask(cnp.uint16_t[::1] row, long long guard, long long train, double scale):
    cdef Py_ssize_t n = row.shape[0]
    out_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] out = out_arr
    det_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] det = det_arr
    cdef long long[::1] s = np.zeros(n + 1, dtype=np.int64)
    cdef Py_ssize_t i, j
    cdef long long lo_l, hi_l, lo_r, hi_r, tot, cnt, w, jlo, jhi, v
    for i in range(n):
        s[i + 1] = s[i] + row[i]
    for i in range(n):
        lo_l = i - guard - train
        if lo_l < 0:
            lo_l = 0
        hi_l = i - guard
        if hi_l < 0:
            hi_l = 0
        lo_r = i + guard + 1
        if lo_r > n:
            lo_r = n
        hi_r = i + guard + 1 + train
        if hi_r > n:
            hi_r = n
        tot = (s[hi_l] - s[lo_l]) + (s[hi_r] - s[lo_r])
        cnt = (hi_l - lo_l) + (hi_r - lo_r)
        if <double> (row[i] * cnt) > scale * <double> tot:
            det[i] = 1
    w = guard + train
    for i in range(n):
        if not det[i]:
            continue
        v = row[i]
        jlo = i - w
        if jlo < 0:
            jlo = 0
        jhi = i + w
        if jhi > n - 1:
            jhi = n - 1
        out[i] = 1
        for j in range(jlo, jhi + 1):
            if det[j] and row[j] > v:
                out[i] = 0
                break
    return out_arr
