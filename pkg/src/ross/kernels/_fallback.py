"""Pure-numpy implementations of the hot raster kernels.

Every function here has a compiled twin in _native.pyx; the two must
produce bit-identical outputs. To keep that true, operations are written
in the same order the C code evaluates them, rounding is always
floor(v + 0.5), and nothing reassociates floating-point arithmetic.
"""

from __future__ import annotations

import numpy as np


def polar_sample(energy, theta, rr, az0, az_step, res):
    """Nearest-bin lookup from a polar scan for precomputed pixel angles/ranges.

    energy: (n_az, n_bins) uint16. theta, rr: (H, W) float64 per-pixel angle
    and range. Pixels with rr > n_bins*res map to 0; rr == 0 maps to
    energy[0, 0].
    """
    na, nb = energy.shape
    maxr = nb * res
    a = np.floor((theta - az0) / az_step + 0.5).astype(np.int64) % na
    b = np.floor(rr / res + 0.5).astype(np.int64)
    np.minimum(b, nb - 1, out=b)
    out = energy[a, b]
    out[rr > maxr] = 0
    out[rr == 0.0] = energy[0, 0]
    return np.ascontiguousarray(out)


def warp_nn(src, m, cc, cr, mpp):
    """Nearest-neighbor planar warp of a BEV image.

    m is the 2x3 source-from-destination transform on (x, y): the output
    pixel covering (x, y) reads the source pixel covering
    (m00 x + m01 y + m02, m10 x + m11 y + m12). Out-of-footprint reads are 0.
    """
    h, w = src.shape
    c = np.arange(w, dtype=np.float64)
    r = np.arange(h, dtype=np.float64)
    x = (c - cc) * mpp
    y = (cr - r) * mpp
    xg = np.broadcast_to(x[None, :], (h, w))
    yg = np.broadcast_to(y[:, None], (h, w))
    sx = m[0, 0] * xg + m[0, 1] * yg + m[0, 2]
    sy = m[1, 0] * xg + m[1, 1] * yg + m[1, 2]
    sc = (cc + np.floor(sx / mpp + 0.5)).astype(np.int64)
    sr = (cr - np.floor(sy / mpp + 0.5)).astype(np.int64)
    ok = (sr >= 0) & (sr < h) & (sc >= 0) & (sc < w)
    out = np.zeros((h, w), dtype=src.dtype)
    out[ok] = src[sr[ok], sc[ok]]
    return out


def splat_priority(img, rows, cols, labels):
    """Max-splat labels into img at (rows, cols); ties and order don't matter."""
    np.maximum.at(img, (rows, cols), labels)
    return img


def cfar_mask(row, guard, train, scale):
    """Cell-averaging CFAR detections on one range profile, after suppression.

    A cell is detected when value * n_train > scale * sum(training cells),
    the division-free form of value > scale * mean. Edge cells use only the
    available side. Suppression then keeps a detection only if no detected
    cell within guard+train bins has a larger value.
    """
    n = row.shape[0]
    v = row.astype(np.int64)
    s = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(v, out=s[1:])
    i = np.arange(n, dtype=np.int64)
    lo_l = np.clip(i - guard - train, 0, n)
    hi_l = np.clip(i - guard, 0, n)
    lo_r = np.clip(i + guard + 1, 0, n)
    hi_r = np.clip(i + guard + 1 + train, 0, n)
    tot = (s[hi_l] - s[lo_l]) + (s[hi_r] - s[lo_r])
    cnt = (hi_l - lo_l) + (hi_r - lo_r)
    det = v * cnt > scale * tot
    w = guard + train
    masked = np.where(det, v, -1)
    winmax = masked.copy()
    for shift in range(1, w + 1):
        if shift >= n:
            break
        np.maximum(winmax[shift:], masked[:-shift], out=winmax[shift:])
        np.maximum(winmax[:-shift], masked[shift:], out=winmax[:-shift])
    keep = det & (v == winmax)
    return keep.astype(np.uint8)
