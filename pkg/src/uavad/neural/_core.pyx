# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled LSTM layer kernels.

Same contract as the NumPy fallback in ``_ref``; see that module for the
shape conventions.  Matrix products go through BLAS dgemm, the per-gate
arithmetic runs in fused C loops, and both backends hoist the
input-to-gate products the same way so results agree to rounding error.
"""

import numpy as np

from libc.math cimport exp, tanh
from scipy.linalg.cython_blas cimport dgemm

BACKEND_NAME = "compiled"


cdef inline double _sigmoid(double z) noexcept nogil:
    cdef double e
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


cdef inline void _mm(bint ta, bint tb, int m, int n, int k, double alpha,
                     double* a, int a_rowlen, double* b, int b_rowlen,
                     double beta, double* c, int c_rowlen) noexcept nogil:
    """Row-major C(m,n) = alpha*op(A)(m,k)@op(B)(k,n) + beta*C.

    ``*_rowlen`` is the stored row length (may exceed the logical column
    count for strided timestep slices).  Implemented as the transposed
    product in column-major BLAS.
    """
    cdef char transa = b'T' if tb else b'N'
    cdef char transb = b'T' if ta else b'N'
    cdef int mm_ = n, nn_ = m, kk_ = k
    cdef int lda = b_rowlen, ldb = a_rowlen, ldc = c_rowlen
    dgemm(&transa, &transb, &mm_, &nn_, &kk_, &alpha, b, &lda, a, &ldb,
          &beta, c, &ldc)


def lstm_forward(double[:, :, ::1] x, double[:, ::1] wx, double[:, ::1] wh,
                 double[::1] b):
    cdef int bsz = x.shape[0], t_len = x.shape[1], inp = x.shape[2]
    cdef int hid = wh.shape[0], g4 = 4 * hid
    cdef int t, bi, j

    gates_arr = np.empty((bsz, t_len, g4))
    cells_arr = np.empty((bsz, t_len, hid))
    tanh_c_arr = np.empty((bsz, t_len, hid))
    h_out_arr = np.empty((bsz, t_len, hid))
    xw_arr = np.empty((bsz, t_len, g4))
    z_arr = np.empty((bsz, g4))
    h_prev_arr = np.zeros((bsz, hid))
    c_prev_arr = np.zeros((bsz, hid))

    cdef double[:, :, ::1] gates = gates_arr
    cdef double[:, :, ::1] cells = cells_arr
    cdef double[:, :, ::1] tanh_c = tanh_c_arr
    cdef double[:, :, ::1] h_out = h_out_arr
    cdef double[:, :, ::1] xw = xw_arr
    cdef double[:, ::1] z = z_arr
    cdef double[:, ::1] h_prev = h_prev_arr
    cdef double[:, ::1] c_prev = c_prev_arr
    cdef double gi, gf, gg, go, c, tc

    with nogil:
        _mm(False, False, bsz * t_len, g4, inp, 1.0,
            &x[0, 0, 0], inp, &wx[0, 0], g4, 0.0, &xw[0, 0, 0], g4)
        for t in range(t_len):
            for bi in range(bsz):
                for j in range(g4):
                    z[bi, j] = xw[bi, t, j] + b[j]
            _mm(False, False, bsz, g4, hid, 1.0,
                &h_prev[0, 0], hid, &wh[0, 0], g4, 1.0, &z[0, 0], g4)
            for bi in range(bsz):
                for j in range(hid):
                    gi = _sigmoid(z[bi, j])
                    gf = _sigmoid(z[bi, hid + j])
                    gg = tanh(z[bi, 2 * hid + j])
                    go = _sigmoid(z[bi, 3 * hid + j])
                    c = gf * c_prev[bi, j] + gi * gg
                    tc = tanh(c)
                    gates[bi, t, j] = gi
                    gates[bi, t, hid + j] = gf
                    gates[bi, t, 2 * hid + j] = gg
                    gates[bi, t, 3 * hid + j] = go
                    cells[bi, t, j] = c
                    tanh_c[bi, t, j] = tc
                    h_out[bi, t, j] = go * tc
                    h_prev[bi, j] = h_out[bi, t, j]
                    c_prev[bi, j] = c
    return h_out_arr, gates_arr, cells_arr, tanh_c_arr


def lstm_backward(double[:, :, ::1] x, double[:, ::1] wx, double[:, ::1] wh,
                  double[:, :, ::1] gates, double[:, :, ::1] cells,
                  double[:, :, ::1] tanh_c, double[:, :, ::1] h_out,
                  double[:, :, ::1] d_h):
    cdef int bsz = x.shape[0], t_len = x.shape[1], inp = x.shape[2]
    cdef int hid = wh.shape[0], g4 = 4 * hid
    cdef int t, bi, j

    dwx_arr = np.empty((inp, g4))
    dwh_arr = np.zeros((hid, g4))
    db_arr = np.zeros(g4)
    dx_arr = np.empty((bsz, t_len, inp))
    dz_all_arr = np.empty((bsz, t_len, g4))
    dz_arr = np.empty((bsz, g4))
    dh_next_arr = np.zeros((bsz, hid))
    dc_next_arr = np.zeros((bsz, hid))

    cdef double[:, ::1] dwx = dwx_arr
    cdef double[:, ::1] dwh = dwh_arr
    cdef double[::1] db = db_arr
    cdef double[:, :, ::1] dx = dx_arr
    cdef double[:, :, ::1] dz_all = dz_all_arr
    cdef double[:, ::1] dz = dz_arr
    cdef double[:, ::1] dh_next = dh_next_arr
    cdef double[:, ::1] dc_next = dc_next_arr
    cdef double gi, gf, gg, go, tc, dh, dc, cp

    with nogil:
        for t in range(t_len - 1, -1, -1):
            for bi in range(bsz):
                for j in range(hid):
                    gi = gates[bi, t, j]
                    gf = gates[bi, t, hid + j]
                    gg = gates[bi, t, 2 * hid + j]
                    go = gates[bi, t, 3 * hid + j]
                    tc = tanh_c[bi, t, j]
                    dh = d_h[bi, t, j] + dh_next[bi, j]
                    dc = dc_next[bi, j] + dh * go * (1.0 - tc * tc)
                    cp = cells[bi, t - 1, j] if t > 0 else 0.0
                    dz[bi, j] = (dc * gg) * gi * (1.0 - gi)
                    dz[bi, hid + j] = (dc * cp) * gf * (1.0 - gf)
                    dz[bi, 2 * hid + j] = (dc * gi) * (1.0 - gg * gg)
                    dz[bi, 3 * hid + j] = (dh * tc) * go * (1.0 - go)
                    dc_next[bi, j] = dc * gf
            for bi in range(bsz):
                for j in range(g4):
                    dz_all[bi, t, j] = dz[bi, j]
                    db[j] += dz[bi, j]
            if t > 0:
                # h_out[:, t-1, :] rows are t_len*hid apart in memory
                _mm(True, False, hid, g4, bsz, 1.0,
                    &h_out[0, t - 1, 0], t_len * hid, &dz[0, 0], g4,
                    1.0, &dwh[0, 0], g4)
            _mm(False, True, bsz, hid, g4, 1.0,
                &dz[0, 0], g4, &wh[0, 0], g4, 0.0, &dh_next[0, 0], hid)
        _mm(False, True, bsz * t_len, inp, g4, 1.0,
            &dz_all[0, 0, 0], g4, &wx[0, 0], g4, 0.0, &dx[0, 0, 0], inp)
        _mm(True, False, inp, g4, bsz * t_len, 1.0,
            &x[0, 0, 0], inp, &dz_all[0, 0, 0], g4, 0.0, &dwx[0, 0], g4)
    return dx_arr, dwx_arr, dwh_arr, db_arr
