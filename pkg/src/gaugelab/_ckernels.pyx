# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of ``_kernels_py``. Same signatures, same summation order."""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt, atan2, sin, cos, INFINITY

cnp.import_array()

SUM = 0
MAX = 1


cdef inline Py_ssize_t _wrap(Py_ssize_t i, Py_ssize_t n) noexcept nogil:
    i = i % n
    if i < 0:
        i += n
    return i


def line_windows(values, Py_ssize_t mmax, bint periodic, int mode, int nthreads=1):
    cdef const double[:, :, :, ::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t n0 = v.shape[0], n1 = v.shape[1], n2 = v.shape[2], n3 = v.shape[3]
    out_arr = np.empty((mmax + 1, n0, n1, n2, n3))
    cdef double[:, :, :, :, ::1] out = out_arr
    cdef Py_ssize_t lo, hi, i0, i1, i2, i3, m, j, flat, total = n0 * n1 * n2
    cdef double acc, x
    if periodic:
        lo = -(n3 // 2)
        hi = (n3 + 1) // 2 - 1
    else:
        lo = -(n3 - 1)
        hi = n3 - 1
    for flat in prange(total, nogil=True, num_threads=nthreads, schedule="static"):
        i0 = flat // (n1 * n2)
        i1 = (flat // n2) % n1
        i2 = flat % n2
        for i3 in range(n3):
            acc = v[i0, i1, i2, i3]
            out[0, i0, i1, i2, i3] = acc
            for m in range(1, mmax + 1):
                if m <= hi:
                    j = i3 + m
                    if periodic:
                        j = _wrap(j, n3)
                    if j < n3:
                        x = v[i0, i1, i2, j]
                        if mode == 0:
                            acc = acc + x
                        elif x > acc:
                            acc = x
                if -m >= lo:
                    j = i3 - m
                    if periodic:
                        j = _wrap(j, n3)
                    if j >= 0:
                        x = v[i0, i1, i2, j]
                        if mode == 0:
                            acc = acc + x
                        elif x > acc:
                            acc = x
                out[m, i0, i1, i2, i3] = acc
    return out_arr


def ball_reduce(windows, triples, halfwidths, bint periodic, int mode, int nthreads=1):
    cdef const double[:, :, :, :, ::1] w = np.ascontiguousarray(windows, dtype=np.float64)
    cdef const long long[:, ::1] t = np.ascontiguousarray(triples, dtype=np.int64).reshape(-1, 3)
    cdef const long long[::1] hw = np.ascontiguousarray(halfwidths, dtype=np.int64)
    cdef Py_ssize_t n0 = w.shape[1], n1 = w.shape[2], n2 = w.shape[3], n3 = w.shape[4]
    cdef Py_ssize_t nt = t.shape[0]
    out_arr = np.empty((n0, n1, n2, n3))
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t flat, total = n0 * n1 * n2, i0, i1, i2, i3, k, j0, j1, j2
    cdef double acc, x
    cdef double init = 0.0 if mode == 0 else -INFINITY
    for flat in prange(total, nogil=True, num_threads=nthreads, schedule="static"):
        i0 = flat // (n1 * n2)
        i1 = (flat // n2) % n1
        i2 = flat % n2
        for i3 in range(n3):
            out[i0, i1, i2, i3] = init
        # triple-major, contiguous along axis 3; per-site order is still triple order
        for k in range(nt):
            j0 = i0 + t[k, 0]
            j1 = i1 + t[k, 1]
            j2 = i2 + t[k, 2]
            if periodic:
                j0 = _wrap(j0, n0)
                j1 = _wrap(j1, n1)
                j2 = _wrap(j2, n2)
            elif j0 < 0 or j0 >= n0 or j1 < 0 or j1 >= n1 or j2 < 0 or j2 >= n2:
                continue
            if mode == 0:
                for i3 in range(n3):
                    out[i0, i1, i2, i3] = out[i0, i1, i2, i3] + w[hw[k], j0, j1, j2, i3]
            else:
                for i3 in range(n3):
                    x = w[hw[k], j0, j1, j2, i3]
                    if x > out[i0, i1, i2, i3]:
                        out[i0, i1, i2, i3] = x
    return out_arr


cdef inline void _qmul(double aw, double ax, double ay, double az,
                       double bw, double bx, double by, double bz,
                       double* o) noexcept nogil:
    o[0] = aw * bw - ax * bx - ay * by - az * bz
    o[1] = aw * bx + ax * bw + ay * bz - az * by
    o[2] = aw * by - ax * bz + ay * bw + az * bx
    o[3] = aw * bz + ax * by - ay * bx + az * bw


cdef double _update_site(const double[:, :, :, :, :, ::1] u, double[:, :, :, :, ::1] g,
                         Py_ssize_t* i, Py_ssize_t* dims, double omega, double h2) noexcept nogil:
    cdef Py_ssize_t f[4]
    cdef Py_ssize_t b[4]
    cdef double W[4]
    cdef double t[4]
    cdef double go[4]
    cdef double gn[4]
    cdef double r[4]
    cdef Py_ssize_t mu, k
    cdef double norm, vn, phi, sc, before, after
    for k in range(4):
        W[k] = 0.0
    for mu in range(4):
        for k in range(4):
            f[k] = i[k]
            b[k] = i[k]
        f[mu] = _wrap(i[mu] + 1, dims[mu])
        b[mu] = _wrap(i[mu] - 1, dims[mu])
        # g(x+mu) U_mu(x)^-1
        _qmul(g[f[0], f[1], f[2], f[3], 0], g[f[0], f[1], f[2], f[3], 1],
              g[f[0], f[1], f[2], f[3], 2], g[f[0], f[1], f[2], f[3], 3],
              u[i[0], i[1], i[2], i[3], mu, 0], -u[i[0], i[1], i[2], i[3], mu, 1],
              -u[i[0], i[1], i[2], i[3], mu, 2], -u[i[0], i[1], i[2], i[3], mu, 3], t)
        for k in range(4):
            W[k] = W[k] + t[k]
        # g(x-mu) U_mu(x-mu)
        _qmul(g[b[0], b[1], b[2], b[3], 0], g[b[0], b[1], b[2], b[3], 1],
              g[b[0], b[1], b[2], b[3], 2], g[b[0], b[1], b[2], b[3], 3],
              u[b[0], b[1], b[2], b[3], mu, 0], u[b[0], b[1], b[2], b[3], mu, 1],
              u[b[0], b[1], b[2], b[3], mu, 2], u[b[0], b[1], b[2], b[3], mu, 3], t)
        for k in range(4):
            W[k] = W[k] + t[k]
    for k in range(4):
        go[k] = g[i[0], i[1], i[2], i[3], k]
    norm = sqrt(W[0] * W[0] + W[1] * W[1] + W[2] * W[2] + W[3] * W[3])
    if norm > 0.0:
        _qmul(W[0] / norm, W[1] / norm, W[2] / norm, W[3] / norm,
              go[0], -go[1], -go[2], -go[3], r)
        vn = sqrt(r[1] * r[1] + r[2] * r[2] + r[3] * r[3])
        phi = atan2(vn, r[0])
        if vn > 0.0:
            sc = sin(omega * phi) / vn
        else:
            sc = 0.0
        _qmul(cos(omega * phi), r[1] * sc, r[2] * sc, r[3] * sc,
              go[0], go[1], go[2], go[3], gn)
        sc = sqrt(gn[0] * gn[0] + gn[1] * gn[1] + gn[2] * gn[2] + gn[3] * gn[3])
        for k in range(4):
            gn[k] = gn[k] / sc
    else:
        for k in range(4):
            gn[k] = go[k]
    before = go[0] * W[0] + go[1] * W[1] + go[2] * W[2] + go[3] * W[3]
    after = gn[0] * W[0] + gn[1] * W[1] + gn[2] * W[2] + gn[3] * W[3]
    for k in range(4):
        g[i[0], i[1], i[2], i[3], k] = gn[k]
    return -2.0 * h2 * (after - before)


cdef double _sweep_one(const double[:, :, :, :, :, ::1] u, double[:, :, :, :, ::1] g,
                       Py_ssize_t flat, Py_ssize_t* dims, int parity,
                       double omega, double h2) noexcept nogil:
    cdef Py_ssize_t i[4]
    i[0] = flat // (dims[1] * dims[2] * dims[3])
    i[1] = (flat // (dims[2] * dims[3])) % dims[1]
    i[2] = (flat // dims[3]) % dims[2]
    i[3] = flat % dims[3]
    if (i[0] + i[1] + i[2] + i[3]) % 2 != parity:
        return -INFINITY
    return _update_site(u, g, i, dims, omega, h2)


def relax_sweep(links, frame, int parity, double omega, double h2, int nthreads=1):
    cdef const double[:, :, :, :, :, ::1] u = links
    cdef double[:, :, :, :, ::1] g = frame
    cdef Py_ssize_t dims[4]
    dims[0] = g.shape[0]; dims[1] = g.shape[1]; dims[2] = g.shape[2]; dims[3] = g.shape[3]
    cdef Py_ssize_t flat, total = dims[0] * dims[1] * dims[2] * dims[3]
    delta_arr = np.full(total, -INFINITY)
    cdef double[::1] delta = delta_arr
    for flat in prange(total, nogil=True, num_threads=nthreads, schedule="static"):
        delta[flat] = _sweep_one(u, g, flat, dims, parity, omega, h2)
    if total == 0:
        return 0.0
    return float(np.max(delta_arr))
