# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner-loop kernels. Semantics match ``_kernels_py`` exactly."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def bias_relu_inplace(double[:, ::1] a, const double[::1] b):
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1], i, j
    cdef double v
    if b.shape[0] != m:
        raise ValueError("bias length does not match column count")
    with nogil:
        for i in range(n):
            for j in range(m):
                v = a[i, j] + b[j]
                a[i, j] = v if v > 0.0 else 0.0
    return np.asarray(a)


cdef inline Py_ssize_t _bin(double v, Py_ssize_t bins, double lo, double scale) nogil:
    cdef Py_ssize_t k
    if scale == 0.0:
        return 0
    k = <Py_ssize_t>((v - lo) * scale)
    if k < 0:
        return 0
    if k >= bins:
        return bins - 1
    return k


def joint_histogram(const double[::1] x, const double[::1] y, Py_ssize_t bins,
                    double xmin, double xmax, double ymin, double ymax):
    cdef Py_ssize_t n = x.shape[0], i
    cdef double sx = 0.0, sy = 0.0
    if y.shape[0] != n:
        raise ValueError("x and y differ in length")
    if xmax - xmin > 0.0:
        sx = bins / (xmax - xmin)
    if ymax - ymin > 0.0:
        sy = bins / (ymax - ymin)
    counts = np.zeros((bins, bins), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] c = counts
    with nogil:
        for i in range(n):
            c[_bin(x[i], bins, xmin, sx), _bin(y[i], bins, ymin, sy)] += 1
    return counts


def lag_windows(const double[:, :] values, Py_ssize_t w, Py_ssize_t n_rows,
                channels, double[:, :] out):
    cdef Py_ssize_t[::1] ch = np.asarray(channels, dtype=np.intp)
    cdef Py_ssize_t nc = ch.shape[0], i, c, k, col
    with nogil:
        for i in range(n_rows):
            for c in range(nc):
                col = ch[c]
                for k in range(w):
                    out[i, c * w + k] = values[i + k, col]
    return np.asarray(out)


def fill_linear(double[::1] col, missing):
    cdef const cnp.uint8_t[::1] miss = np.ascontiguousarray(missing, dtype=np.uint8)
    cdef Py_ssize_t n = col.shape[0], i, j, lo = -1, hi, count = 0
    cdef double v0, v1, d
    with nogil:
        i = 0
        while i < n:
            if not miss[i]:
                lo = i
                i += 1
                continue
            hi = i
            while hi < n and miss[hi]:
                hi += 1
            for j in range(i, hi):
                if lo < 0 and hi >= n:
                    pass
                elif lo < 0:
                    col[j] = col[hi]
                elif hi >= n:
                    col[j] = col[lo]
                else:
                    v0 = col[lo]
                    v1 = col[hi]
                    d = <double>(hi - lo)
                    col[j] = v0 + (v1 - v0) * <double>(j - lo) / d
                count += 1
            i = hi
    return count
